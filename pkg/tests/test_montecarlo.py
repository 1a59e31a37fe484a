import math

import numpy as np
import pytest

from rdars.analytic import e_noise, gamma1_moments, gamma2_moments, gamma3_moments, snr_moments_composed
from rdars.channel import draw_realization
from rdars.config import RdarsConfiguration, optimal_phases_instantaneous
from rdars.montecarlo import (
    Campaign,
    SimoModel,
    SystemSpec,
    closed_form_rate,
    empirical_moments,
    estimate_rate,
    instantaneous_rates,
    scenario_at,
    siso_inputs,
    summarize,
    sweep,
    trial_rates,
)
from rdars.scenario import Scenario
from rdars.snr import received_snr_siso

SISO = dict(bs_antennas=1, rician_rdars_bs=0.0, rician_ue_rdars=0.0, phase_policy="optimal-instantaneous")


def test_summarize_known_sample():
    est = summarize(np.array([1.0, 2.0, 3.0, 4.0]))
    assert est.mean == 2.5
    assert est.ci_halfwidth_95 == pytest.approx(1.959963984540054 * math.sqrt(5 / 3 / 4))
    assert est.n_trials == 4


def test_campaign_validation():
    sc = Scenario()
    with pytest.raises(ValueError):
        Campaign(sc, n_trials=0)
    with pytest.raises(ValueError):
        Campaign(sc, system="nope")
    with pytest.raises(ValueError):
        Campaign(sc, config_policy="optimal-instantaneous")
    c = Campaign(sc)
    assert c.n_trials == sc.n_trials and c.master_seed == sc.seed and c.config_policy == sc.phase_policy


@pytest.mark.parametrize("par", [2, 4, 16])
def test_parallelism_does_not_change_samples(par):
    sc = Scenario().replace(rdars_elements=64, n_trials=2300)
    a = trial_rates(Campaign(sc, parallelism=1))
    b = trial_rates(Campaign(sc, parallelism=par))
    assert a.tobytes() == b.tobytes()


def test_trial_count_is_exact():
    sc = Scenario().replace(rdars_elements=16)
    assert trial_rates(Campaign(sc, n_trials=777)).shape == (777,)


def test_siso_mean_snr_matches_exact_moment():
    # exact first moment of the co-phased SNR against the sample mean (3 standard errors)
    sc = Scenario().replace(rdars_elements=32, connected=2, **SISO)
    real = draw_realization(sc, np.random.default_rng(99), size=200_000)
    cfg = RdarsConfiguration.first_connected(32, 2)
    th = optimal_phases_instantaneous(real.h_ue_bs[:, 0], np.conj(real.h_rdars_bs[:, 0, :]),
                                      real.h_ue_rdars, cfg.connected)
    snr = received_snr_siso(real, cfg.with_phases(th), sc.transmit_snr).total
    mean, _ = snr_moments_composed(siso_inputs(sc))
    se = snr.std(ddof=1) / math.sqrt(snr.size)
    assert abs(snr.mean() - mean) < 3 * se


def test_simo_mean_channel_power_matches_closed_form():
    sc = Scenario().replace(rdars_elements=64, connected=2, noise_rdars_dbm=-80.0)
    model = SimoModel.from_scenario(sc)
    inp = model.inputs()
    est = empirical_moments(model, "noise", 200_000, seed=3)
    assert abs(est.values[0] - e_noise(inp)) < 3 * est.standard_errors[0]


def test_siso_empirical_moments_small_run():
    inp = siso_inputs(Scenario().replace(rdars_elements=8, connected=2, **SISO))
    for sel, ref in (("gamma1", gamma1_moments(inp.gamma)),
                     ("gamma2", gamma2_moments(inp.n_total, inp.a, inp.alpha, inp.beta)),
                     ("gamma3", gamma3_moments(inp.a, inp.alpha))):
        est = empirical_moments(inp, sel, 200_000, seed=5)
        assert np.all(np.abs(est.values - np.array(ref)) < 4 * est.standard_errors), sel


def test_empirical_moments_rejects_unknown_selector():
    with pytest.raises(ValueError):
        empirical_moments(None, "gamma9", 10, 0)


def test_das_ignores_reflection():
    sc = Scenario().replace(rdars_elements=16, connected=2)
    real = draw_realization(sc, np.random.default_rng(0), size=50)
    r1 = instantaneous_rates(real, sc, "das", "statistical-aligned")
    real2 = type(real)(real.h_rdars_bs * 5.0, real.h_ue_rdars, real.h_ue_bs)
    assert np.array_equal(r1, instantaneous_rates(real2, sc, "das", "statistical-aligned"))


def test_system_ordering_small_run():
    sc = Scenario().replace(rdars_elements=128, n_trials=1000)
    rates = {s: estimate_rate(Campaign(scenario_at(sc, "N", 128, SystemSpec(s, s, None if s != "ris" else 0)),
                                       system=s)).mean
             for s in ("rdars", "ris", "das", "none")}
    assert rates["rdars"] > rates["das"] > rates["none"]
    assert rates["rdars"] > rates["ris"] > rates["none"]


def test_sweep_rows_and_closed_form():
    sc = Scenario().replace(rdars_elements=64, n_trials=500)
    rows = sweep(Campaign(sc), "N", [16, 32], closed_form=True)
    assert len(rows) == 2 * 4 * 2
    assert {r.estimate.provenance for r in rows} == {"monte-carlo", "closed-form"}
    with pytest.raises(ValueError):
        sweep(Campaign(sc), "bogus", [1])


def test_closed_form_dispatch():
    siso = Scenario().replace(rdars_elements=64, **SISO)
    simo = Scenario().replace(rdars_elements=64)
    assert closed_form_rate(siso).provenance == "closed-form"
    assert closed_form_rate(simo).mean > closed_form_rate(simo.replace(phase_policy="identity")).mean
