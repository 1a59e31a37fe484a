"""Seeded Monte Carlo estimation of ergodic rates and of the analytic moments.

Trials are grouped in fixed blocks of ``BLOCK_SIZE``; block ``b`` draws from
its own stream ``SeedSequence(master_seed, spawn_key=(TRIAL_STREAM, b))``.
The block layout depends only on ``n_trials``, so results do not depend on
how many workers evaluate the blocks. Per-trial rates are reduced in trial
order with ``math.fsum``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from rdars.analytic.siso import (
    SisoMomentInputs,
    ergodic_rate_gamma,
    gamma_match,
    rate_upper_bound_siso,
    snr_moments_composed,
)
from rdars.analytic.simo import SimoRateInputs, ergodic_rate_simo_approx
from rdars.channel import ChannelRealization, array_response, draw_realization
from rdars.config import (
    RdarsConfiguration,
    aligned_phases,
    alignment_zeta,
    effective_reflection,
    optimal_phases_instantaneous,
)
from rdars.scenario import TRIAL_STREAM, Scenario, stream_rng
from rdars.snr import NoiseModel, composite_channel_simo, mrc_rate_simo

BLOCK_SIZE = 500
SYSTEMS = ("rdars", "ris", "das", "none")
POLICIES = ("optimal-instantaneous", "statistical-aligned", "identity", "explicit")
Z95 = 1.959963984540054


@dataclass(frozen=True)
class Campaign:
    scenario: Scenario
    config_policy: Optional[str] = None
    n_trials: Optional[int] = None
    master_seed: Optional[int] = None
    parallelism: int = 1
    system: str = "rdars"

    def __post_init__(self):
        if self.config_policy is None:
            object.__setattr__(self, "config_policy", self.scenario.phase_policy)
        if self.n_trials is None:
            object.__setattr__(self, "n_trials", self.scenario.n_trials)
        if self.master_seed is None:
            object.__setattr__(self, "master_seed", self.scenario.seed)
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.system not in SYSTEMS:
            raise ValueError(f"system must be one of {SYSTEMS}")
        if self.config_policy not in POLICIES:
            raise ValueError(f"config_policy must be one of {POLICIES}")
        if self.config_policy == "optimal-instantaneous" and self.scenario.bs_antennas != 1:
            raise ValueError("optimal-instantaneous phases are defined for a single-antenna BS only")


@dataclass(frozen=True)
class RateEstimate:
    mean: float
    ci_halfwidth_95: float = 0.0
    n_trials: int = 0
    provenance: str = "monte-carlo"


@dataclass(frozen=True)
class MomentEstimate:
    values: np.ndarray
    standard_errors: np.ndarray
    n_trials: int


def trial_block_rng(master_seed: int, block: int) -> np.random.Generator:
    return stream_rng(master_seed, TRIAL_STREAM, block)


def _blocks(n_trials: int) -> list[tuple[int, int]]:
    return [(b, min(BLOCK_SIZE, n_trials - b * BLOCK_SIZE))
            for b in range(math.ceil(n_trials / BLOCK_SIZE))]


def system_configuration(scenario: Scenario, system: str, policy: str) -> RdarsConfiguration:
    """Static part of the configuration (phases for instantaneous policy are per trial)."""
    n = scenario.n_elements
    if system == "none":
        return RdarsConfiguration(0)
    connected = frozenset() if system == "ris" else scenario.connected_set()
    config = RdarsConfiguration(n, connected)
    if policy == "statistical-aligned":
        ang = scenario.los_angles()
        zeta = alignment_zeta(scenario.rdars_geometry, ang.rdars_arrival, ang.rdars_departure)
        config = config.with_phases(aligned_phases(zeta))
    elif policy == "explicit":
        config = config.with_phases(scenario.phases_rad)
    return config


def _shadow_factors(rng: np.random.Generator, scenario: Scenario, nb: int) -> np.ndarray:
    z = rng.normal(0.0, scenario.shadow_sigma_db, (nb, 3))
    return 10.0 ** (-z / 20.0)


def _block_rates(campaign: Campaign, block: int, nb: int) -> np.ndarray:
    sc = campaign.scenario
    rng = trial_block_rng(campaign.master_seed, block)
    real = draw_realization(sc, rng, size=nb)
    if sc.shadowing == "per-realization":
        amp = _shadow_factors(rng, sc, nb)
        real = ChannelRealization(real.h_rdars_bs * amp[:, 2, None, None],
                                  real.h_ue_rdars * amp[:, 1, None],
                                  real.h_ue_bs * amp[:, 0, None])
    return instantaneous_rates(real, sc, campaign.system, campaign.config_policy)


def instantaneous_rates(real: ChannelRealization, scenario: Scenario, system: str,
                        policy: str) -> np.ndarray:
    """MRC rate of every realization in ``real`` for one system variant."""
    config = system_configuration(scenario, system, policy)
    if system == "none":
        real = ChannelRealization(real.h_rdars_bs[..., :0], real.h_ue_rdars[..., :0], real.h_ue_bs)
    elif system == "das":
        real = ChannelRealization(np.zeros_like(real.h_rdars_bs), real.h_ue_rdars, real.h_ue_bs)
    elif policy == "optimal-instantaneous":
        h_rb = np.conj(real.h_rdars_bs[..., 0, :])
        phases = optimal_phases_instantaneous(real.h_ue_bs[..., 0], h_rb, real.h_ue_rdars,
                                              config.connected)
        config = config.with_phases(phases)
    h_tilde = composite_channel_simo(real, config)
    return mrc_rate_simo(h_tilde, scenario.transmit_power_mw, scenario.noise, config.a)


def trial_rates(campaign: Campaign) -> np.ndarray:
    """Instantaneous rate of every trial, in trial-index order."""
    blocks = _blocks(campaign.n_trials)
    if campaign.parallelism == 1 or len(blocks) == 1:
        parts = [_block_rates(campaign, b, nb) for b, nb in blocks]
    else:
        with ThreadPoolExecutor(max_workers=campaign.parallelism) as pool:
            parts = list(pool.map(lambda bn: _block_rates(campaign, *bn), blocks))
    return np.concatenate(parts)


def summarize(samples: np.ndarray, provenance: str = "monte-carlo") -> RateEstimate:
    n = samples.size
    mean = math.fsum(samples.tolist()) / n
    if n > 1:
        var = math.fsum(((samples - mean) ** 2).tolist()) / (n - 1)
        ci = Z95 * math.sqrt(var / n)
    else:
        ci = 0.0
    return RateEstimate(mean, ci, n, provenance)


def estimate_rate(campaign: Campaign) -> RateEstimate:
    """Sample-mean ergodic rate with a normal-approximation 95% half-width."""
    return summarize(trial_rates(campaign))


# -- closed-form companions ---------------------------------------------------

def siso_inputs(scenario: Scenario, system: str = "rdars") -> SisoMomentInputs:
    g = scenario.link_gains()
    n, a = scenario.n_elements, scenario.connected
    if system == "ris":
        a = 0
    elif system == "none":
        n, a = 0, 0
    return SisoMomentInputs.from_gains(n, a, g.ue_rdars, g.rdars_bs, g.ue_bs, scenario.transmit_snr)


def closed_form_rate_siso(scenario: Scenario, system: str = "rdars") -> RateEstimate:
    """Gamma-matched rate for a single-antenna Rayleigh scenario with co-phased reflection."""
    inputs = siso_inputs(scenario, system)
    m = 0 if system == "das" else inputs.n_reflecting
    rate = ergodic_rate_gamma(gamma_match(*snr_moments_composed(inputs, n_reflecting=m)))
    return RateEstimate(rate, 0.0, 0, "closed-form")


def upper_bound_siso(scenario: Scenario, system: str = "rdars") -> RateEstimate:
    inputs = siso_inputs(scenario, system)
    if system == "das":
        mean = snr_moments_composed(inputs, n_reflecting=0)[0]
        return RateEstimate(math.log1p(mean) / math.log(2.0), 0.0, 0, "upper-bound")
    return RateEstimate(rate_upper_bound_siso(inputs), 0.0, 0, "upper-bound")


@dataclass(frozen=True)
class SimoModel:
    """Everything the multi-antenna moment formulas and their sampler need."""

    l_antennas: int
    n_total: int
    connected: frozenset
    alpha: float
    beta: float
    gamma: float
    delta: float
    epsilon: float
    p: float
    noise: NoiseModel
    los_bs: np.ndarray
    los_departure: np.ndarray
    los_arrival: np.ndarray
    phases: np.ndarray

    @classmethod
    def from_scenario(cls, scenario: Scenario, system: str = "rdars",
                      policy: Optional[str] = None) -> "SimoModel":
        policy = policy or scenario.phase_policy
        if policy == "optimal-instantaneous":
            raise ValueError("moment model needs a fixed (statistical) phase configuration")
        config = system_configuration(scenario, system, policy)
        g = scenario.link_gains()
        ang = scenario.los_angles()
        n = config.n_total
        a_dep = array_response(scenario.rdars_geometry, ang.rdars_departure)[:n]
        a_arr = array_response(scenario.rdars_geometry, ang.rdars_arrival)[:n]
        connected = config.connected
        if system == "das":
            # no reflection: keep only the connected elements as the surface
            n = len(connected)
            idx = sorted(connected)
            a_dep, a_arr = a_dep[idx], a_arr[idx]
            connected = frozenset(range(n))
            phases = np.zeros(n)
        else:
            phases = np.asarray(config.phases)
        return cls(scenario.bs_antennas, n, connected, g.ue_rdars, g.rdars_bs, g.ue_bs,
                   scenario.rician_rdars_bs, scenario.rician_ue_rdars, scenario.transmit_power_mw,
                   scenario.noise, array_response(scenario.bs_geometry, ang.bs_arrival),
                   a_dep, a_arr, phases)

    @property
    def config(self) -> RdarsConfiguration:
        return RdarsConfiguration(self.n_total, self.connected, self.phases)

    def f(self) -> complex:
        b = effective_reflection(self.config)
        return complex(np.sum(np.conj(self.los_departure) * b * self.los_arrival))

    def inputs(self) -> SimoRateInputs:
        return SimoRateInputs(self.l_antennas, self.n_total, len(self.connected), self.alpha,
                              self.beta, self.gamma, self.delta, self.epsilon, self.p,
                              self.noise, abs(self.f()))


def closed_form_rate_simo(scenario: Scenario, system: str = "rdars",
                          policy: Optional[str] = None) -> RateEstimate:
    model = SimoModel.from_scenario(scenario, system, policy)
    return RateEstimate(ergodic_rate_simo_approx(model.inputs()), 0.0, 0, "closed-form")


# -- empirical moments ---------------------------------------------------------

SELECTORS = ("gamma1", "gamma2", "gamma3", "signal", "noise", "terms") + tuple(f"term{k}" for k in range(1, 15))


class _Accumulator:
    """Chunked mean/variance (pairwise combination keeps float error small)."""

    def __init__(self):
        self.n = 0
        self.mean = None
        self.m2 = None

    def add(self, x: np.ndarray):
        nb = x.shape[0]
        mb = x.mean(axis=0)
        m2b = ((x - mb) ** 2).sum(axis=0)
        if self.mean is None:
            self.n, self.mean, self.m2 = nb, mb, m2b
            return
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * nb / n
        self.m2 = self.m2 + m2b + delta ** 2 * self.n * nb / n
        self.n = n

    def result(self) -> MomentEstimate:
        var = self.m2 / max(self.n - 1, 1)
        return MomentEstimate(np.atleast_1d(self.mean), np.atleast_1d(np.sqrt(var / self.n)), self.n)


def _cn(rng, shape):
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def _siso_block(model: SisoMomentInputs, selector: str, rng, nb: int) -> np.ndarray:
    powers = np.arange(1, 5)
    if selector == "gamma1":
        g1 = np.abs(model.gamma * _cn(rng, (nb,)))
        return g1[:, None] ** powers
    if selector == "gamma2":
        m = model.n_reflecting
        if m == 0:
            return np.zeros((nb, 4))
        # |CN(0, s^2)| is Rayleigh with scale s/sqrt(2)
        x = rng.rayleigh(model.alpha / math.sqrt(2), (nb, m)) * rng.rayleigh(model.beta / math.sqrt(2), (nb, m))
        g2 = x.sum(axis=1)
        return g2[:, None] ** powers
    if selector == "gamma3":
        g3 = np.sum(np.abs(model.alpha * _cn(rng, (nb, model.a))) ** 2, axis=1)
        return g3[:, None] ** powers[:2]
    raise ValueError(f"selector {selector!r} needs a SimoModel")


def _simo_block(model: SimoModel, selector: str, rng, nb: int) -> np.ndarray:
    L, N = model.l_antennas, model.n_total
    dl, ep = model.delta, model.epsilon
    mask = np.zeros(N, dtype=bool)
    mask[list(model.connected)] = True
    b = effective_reflection(model.config)
    h_w = _cn(rng, (nb, N))
    H_w = _cn(rng, (nb, L, N))
    d = math.sqrt(model.gamma) * _cn(rng, (nb, L))
    h = math.sqrt(model.alpha / (ep + 1)) * (math.sqrt(ep) * model.los_arrival + h_w)
    H_los = np.outer(model.los_bs, np.conj(model.los_departure))
    H = math.sqrt(model.beta / (dl + 1)) * (math.sqrt(dl) * H_los + H_w)
    h_b = np.einsum("sln,sn->sl", H, b * h)
    top = h_b + d
    bottom = h[:, mask]
    if selector in ("signal", "noise"):
        p_top = np.sum(np.abs(top) ** 2, axis=1)
        p_bot = np.sum(np.abs(bottom) ** 2, axis=1)
        if selector == "signal":
            return ((p_top + p_bot) ** 2)[:, None]
        return (model.noise.sigma_b_sq * p_top + model.noise.sigma_r_sq * p_bot)[:, None]

    ds = model.alpha / (ep + 1)
    hb2 = np.sum(np.abs(h_b) ** 2, axis=1)
    dd = np.sum(np.abs(d) ** 2, axis=1)
    cross = np.sum(np.conj(h_b) * d, axis=1)
    los_c = model.los_arrival[mask]
    w_c = h_w[:, mask]
    los_p = float(np.sum(np.abs(los_c) ** 2))
    mix = w_c @ np.conj(los_c)               # hbar^H P hw
    ww = np.sum(np.abs(w_c) ** 2, axis=1)    # hw^H P hw
    terms = np.column_stack([
        hb2 ** 2,
        np.abs(cross) ** 2,
        np.abs(np.conj(cross)) ** 2,
        dd ** 2,
        np.full(nb, ds ** 2 * ep ** 2 * los_p ** 2),
        ds ** 2 * ep * np.abs(mix) ** 2,
        ds ** 2 * ep * np.abs(np.conj(mix)) ** 2,
        ds ** 2 * ww ** 2,
        2 * hb2 * dd,
        2 * ds * ep * hb2 * los_p,
        2 * ds * hb2 * ww,
        2 * ds * ep * dd * los_p,
        2 * ds * dd * ww,
        2 * ds ** 2 * ep * los_p * ww,
    ])
    if selector == "terms":
        return terms
    k = int(selector[4:])
    return terms[:, k - 1:k]


def empirical_moments(model, selector: str, n_trials: int, seed: int,
                      chunk: int = 20000) -> MomentEstimate:
    """Sample moments (with standard errors) of the quantity named by ``selector``.

    ``gamma1``/``gamma2``/``gamma3`` take a SisoMomentInputs and return raw
    moments of orders 1-4 (1-2 for ``gamma3``). ``signal`` (``||h||^4``),
    ``noise`` (``h^H R h``), ``terms`` (all fourteen decomposition terms) and
    ``term1``..``term14`` take a SimoModel.
    """
    if selector not in SELECTORS:
        raise ValueError(f"unknown selector {selector!r}")
    rng = stream_rng(seed, 7)
    acc = _Accumulator()
    done = 0
    while done < n_trials:
        nb = min(chunk, n_trials - done)
        if selector.startswith("gamma"):
            acc.add(_siso_block(model, selector, rng, nb))
        else:
            acc.add(_simo_block(model, selector, rng, nb))
        done += nb
    return acc.result()


# -- sweeps -------------------------------------------------------------------

AXIS_FIELDS = {
    "N": "rdars_elements",
    "a": "connected",
    "P": "transmit_power_dbm",
    "L": "bs_antennas",
    "delta": "rician_rdars_bs",
}


@dataclass(frozen=True)
class SystemSpec:
    label: str
    system: str = "rdars"
    connected: Optional[int] = None
    policy: Optional[str] = None


DEFAULT_SYSTEMS = (
    SystemSpec("RDARS", "rdars"),
    SystemSpec("RIS", "ris"),
    SystemSpec("DAS", "das"),
    SystemSpec("W.O. RDARS", "none"),
)


@dataclass(frozen=True)
class SweepRow:
    axis: str
    axis_value: float
    system: str
    estimate: RateEstimate
    scenario: Scenario


def scenario_at(template: Scenario, axis: str, value, spec: SystemSpec) -> Scenario:
    changes = {AXIS_FIELDS[axis]: value}
    if spec.connected is not None and axis != "a":
        changes["connected"] = spec.connected
    if spec.policy is not None:
        changes["phase_policy"] = spec.policy
    if spec.system in ("ris", "none"):
        changes["connected"] = 0
    return template.replace(**changes)


def sweep(template: Campaign, axis: str, values: Iterable, systems: Sequence[SystemSpec] = DEFAULT_SYSTEMS,
          closed_form: bool = False) -> list[SweepRow]:
    """One Monte Carlo estimate per (axis value, system).

    RIS rows force ``a = 0``, DAS rows zero the reflection path while keeping
    the connected elements, and no-surface rows keep only the direct link.
    All systems at one axis value share the campaign seed, so they see the
    same fading draws. With ``closed_form=True`` a closed-form row follows
    each simulated one.
    """
    if axis not in AXIS_FIELDS:
        raise ValueError(f"axis must be one of {tuple(AXIS_FIELDS)}")
    rows = []
    for value in values:
        for spec in systems:
            sc = scenario_at(template.scenario, axis, value, spec)
            camp = Campaign(sc, sc.phase_policy, template.n_trials, template.master_seed,
                            template.parallelism, spec.system)
            rows.append(SweepRow(axis, float(value), spec.label, estimate_rate(camp), sc))
            if closed_form:
                rows.append(SweepRow(axis, float(value), spec.label, closed_form_rate(sc, spec.system), sc))
    return rows


def closed_form_rate(scenario: Scenario, system: str = "rdars") -> RateEstimate:
    """Gamma-matched rate for co-phased single-antenna links, moment-ratio approximation otherwise."""
    if scenario.phase_policy == "optimal-instantaneous":
        return closed_form_rate_siso(scenario, system)
    return closed_form_rate_simo(scenario, system)
