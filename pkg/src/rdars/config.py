"""Element-mode assignment, phase shifts and the two phase-design rules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from rdars.channel import AngleSet, NodeGeometry, upa_phases

PHASE_TOL = 1e-9


def _arg(z):
    # arg(0) is taken as 0 so silent elements never produce NaN phases
    z = np.asarray(z)
    return np.where(z == 0, 0.0, np.angle(z))


@dataclass(frozen=True)
class RdarsConfiguration:
    """Which elements are wired to the BS (connected) and the phase of the rest.

    ``connected`` holds 0-based element indices. Phases at connected indices
    are carried but never used.
    """

    n_total: int
    connected: frozenset = field(default_factory=frozenset)
    phases: np.ndarray = None

    def __post_init__(self):
        if self.n_total < 0:
            raise ValueError("n_total must be non-negative")
        conn = frozenset(int(i) for i in self.connected)
        if any(i < 0 or i >= self.n_total for i in conn):
            raise ValueError(f"connected indices must lie in [0, {self.n_total})")
        object.__setattr__(self, "connected", conn)
        phases = np.zeros(self.n_total) if self.phases is None else np.asarray(self.phases, dtype=float)
        if phases.shape[-1] != self.n_total:
            raise ValueError(f"expected {self.n_total} phases, got {phases.shape[-1]}")
        if not np.all(np.isfinite(phases)):
            raise ValueError("phases must be finite")
        phases = phases.copy()
        phases[..., self.connected_mask] = 0.0
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    @classmethod
    def first_connected(cls, n_total: int, a: int, phases=None) -> "RdarsConfiguration":
        """Connect elements ``0..a-1``; any selection of size ``a`` is equivalent statistically."""
        if not 0 <= a <= n_total:
            raise ValueError(f"need 0 <= a <= N, got a={a}, N={n_total}")
        return cls(n_total, frozenset(range(a)), phases)

    @property
    def a(self) -> int:
        return len(self.connected)

    @property
    def connected_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_total, dtype=bool)
        mask[list(self.connected)] = True
        return mask

    @property
    def connected_indices(self) -> np.ndarray:
        return np.flatnonzero(self.connected_mask)

    def with_phases(self, phases) -> "RdarsConfiguration":
        return RdarsConfiguration(self.n_total, self.connected, phases)


def effective_reflection(config: RdarsConfiguration) -> np.ndarray:
    """Diagonal of ``B = (I - A^H A) Theta``: ``exp(j*phase)`` or 0 when connected."""
    b = np.exp(1j * config.phases)
    b[..., config.connected_mask] = 0.0
    return b


def optimal_phases_instantaneous(h_ub, h_rb, h_ur, connected=()) -> np.ndarray:
    """Co-phasing rule ``arg(h_UB) + arg(h_RB,i) - arg(h_UR,i)`` for reflecting elements.

    Broadcasts over leading batch axes (``h_ub`` shape ``(...)``, vectors
    ``(..., N)``). Connected entries are set to 0.
    """
    h_rb = np.asarray(h_rb)
    h_ur = np.asarray(h_ur)
    if h_rb.shape != h_ur.shape:
        raise ValueError("h_rb and h_ur must have the same shape")
    phases = _arg(h_ub)[..., None] + _arg(h_rb) - _arg(h_ur)
    idx = list(connected)
    if idx:
        phases[..., idx] = 0.0
    return phases


@dataclass(frozen=True)
class AlignmentPhases:
    zeta: np.ndarray


def alignment_zeta(rdars_geometry: NodeGeometry, ue_angles: AngleSet,
                   bs_departure_angles: AngleSet) -> AlignmentPhases:
    """Per-element phase difference between the UE arrival and BS departure LoS directions.

    Equals ``arg(a_N(ue)) - arg(a_N(bs_departure))``, so the LoS cascade
    ``a_N(dep)^H B a_N(ue)`` is ``f_value(config, zeta)``. For a square array
    this is the usual ``sqrt(N)`` row/column split; rectangular arrays use the
    column count of the geometry.
    """
    zeta = upa_phases(rdars_geometry, ue_angles) - upa_phases(rdars_geometry, bs_departure_angles)
    return AlignmentPhases(zeta)


def aligned_phases(zeta: AlignmentPhases, config: RdarsConfiguration | None = None) -> np.ndarray:
    """Statistical-CSI alignment: ``arg(theta_n) = -zeta_n`` makes ``|f| = N - a``."""
    phases = -np.asarray(zeta.zeta, dtype=float)
    if config is not None:
        phases = phases.copy()
        phases[config.connected_mask] = 0.0
    return phases


def f_value(config: RdarsConfiguration, zeta: AlignmentPhases) -> complex:
    """Coherent reflection sum ``sum_{n not connected} exp(j(zeta_n + phase_n))``."""
    zeta_arr = np.asarray(zeta.zeta, dtype=float)
    if zeta_arr.shape != (config.n_total,):
        raise ValueError("zeta length does not match configuration")
    terms = np.exp(1j * (zeta_arr + config.phases))
    return complex(np.sum(terms[~config.connected_mask]))


def phases_equal(p, q, tol: float = PHASE_TOL) -> bool:
    """Compare phase vectors modulo 2*pi."""
    diff = np.angle(np.exp(1j * (np.asarray(p) - np.asarray(q))))
    return bool(np.all(np.abs(diff) <= tol))


def wrap_phase(p):
    return np.mod(np.asarray(p, dtype=float), 2 * math.pi)
