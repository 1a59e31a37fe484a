"""Large-scale gains, array responses and small-scale fading for the three links.

Channel arrays carry an optional leading batch axis so that Monte Carlo code can
draw many realizations in one call:

    h_rdars_bs : (..., L, N)   RDARS -> BS matrix H
    h_ue_rdars : (..., N)      UE -> RDARS vector h
    h_ue_bs    : (..., L)      UE -> BS vector d

In the single-antenna model the BS-side vector h_RB satisfies h_RB^H = H[0, :].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:
    from rdars.scenario import Scenario


@dataclass(frozen=True)
class PathLossParams:
    c0_db: float
    exponent: float
    shadow_sigma_db: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.c0_db):
            raise ValueError("c0_db must be finite")
        if not self.exponent > 0:
            raise ValueError(f"path-loss exponent must be positive, got {self.exponent}")
        if not self.shadow_sigma_db >= 0:
            raise ValueError(f"shadow_sigma_db must be >= 0, got {self.shadow_sigma_db}")


@dataclass(frozen=True)
class NodeGeometry:
    position: tuple[float, float, float]
    array_rows: int = 1
    array_cols: int = 1
    element_spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.array_rows < 1 or self.array_cols < 1:
            raise ValueError("array dimensions must be positive")
        if not self.element_spacing_ratio >= 0:
            raise ValueError("element_spacing_ratio must be non-negative")

    @property
    def size(self) -> int:
        return self.array_rows * self.array_cols


@dataclass(frozen=True)
class AngleSet:
    azimuth: float
    elevation: float

    def __post_init__(self):
        if not (math.isfinite(self.azimuth) and math.isfinite(self.elevation)):
            raise ValueError("angles must be finite")


@dataclass(frozen=True)
class LinkStatistics:
    """Average power gain and Rician factor of one link.

    ``los_angles_in`` is the departure/arrival direction at the transmitting
    side of the link (RDARS for RDARS->BS), ``los_angles_out`` the direction
    at the receiving side. Angles are required only for Rician links.
    """

    gain: float
    rician_factor: float = 0.0
    los_angles_in: Optional[AngleSet] = None
    los_angles_out: Optional[AngleSet] = None

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"link gain must be positive, got {self.gain}")
        if not self.rician_factor >= 0:
            raise ValueError(f"rician_factor must be >= 0, got {self.rician_factor}")


@dataclass(frozen=True)
class ChannelRealization:
    h_rdars_bs: np.ndarray
    h_ue_rdars: np.ndarray
    h_ue_bs: np.ndarray

    @property
    def n_bs(self) -> int:
        return self.h_ue_bs.shape[-1]

    @property
    def n_elements(self) -> int:
        return self.h_ue_rdars.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.h_ue_bs.shape[:-1]

    def __getitem__(self, idx) -> "ChannelRealization":
        return ChannelRealization(self.h_rdars_bs[idx], self.h_ue_rdars[idx], self.h_ue_bs[idx])


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def path_loss_db(params: PathLossParams, distance_m: float, shadow_db: float = 0.0) -> float:
    """Log-distance path loss ``C0 + 10*exponent*log10(d) + z`` in dB."""
    if not distance_m > 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return params.c0_db + 10.0 * params.exponent * math.log10(distance_m) + shadow_db


def array_response(geometry: NodeGeometry, angles: AngleSet) -> np.ndarray:
    """UPA steering vector, entries ordered row-major (row = index // cols).

    Element ``i`` (0-based) sits at row ``i // cols`` and column ``i % cols``;
    its phase is ``2*pi*s*(row*sin(az)*sin(el) + col*cos(el))``.
    """
    return np.exp(1j * upa_phases(geometry, angles))


def upa_phases(geometry: NodeGeometry, angles: AngleSet) -> np.ndarray:
    idx = np.arange(geometry.size)
    row, col = np.divmod(idx, geometry.array_cols)
    return 2.0 * np.pi * geometry.element_spacing_ratio * (
        row * math.sin(angles.azimuth) * math.sin(angles.elevation)
        + col * math.cos(angles.elevation)
    )


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def sample_rayleigh(rng: np.random.Generator, length, gain: float) -> np.ndarray:
    """i.i.d. CN(0, gain) entries; ``length`` may be an int or a shape tuple."""
    if not gain > 0:
        raise ValueError(f"gain must be positive, got {gain}")
    shape = (length,) if np.isscalar(length) else tuple(length)
    return math.sqrt(gain) * _cn(rng, shape)


def sample_rician(rng: np.random.Generator, rows: int, cols: int, stats: LinkStatistics,
                  los: np.ndarray, batch: tuple = ()) -> np.ndarray:
    """Draw ``sqrt(gain/(K+1)) * (sqrt(K)*los + W)`` with W ~ CN(0, I).

    ``los`` must be ``(rows, cols)`` with unit-modulus entries. A non-empty
    ``batch`` prepends independent draws along leading axes.
    """
    los = np.asarray(los)
    if los.shape != (rows, cols):
        raise ValueError(f"LoS component has shape {los.shape}, expected {(rows, cols)}")
    k = stats.rician_factor
    w = _cn(rng, tuple(batch) + (rows, cols))
    return math.sqrt(stats.gain / (k + 1.0)) * (math.sqrt(k) * los + w)


def draw_realization(scenario: "Scenario", rng: np.random.Generator, size: int | None = None,
                     gains: "LinkGains | None" = None) -> ChannelRealization:
    """Draw one (``size=None``) or ``size`` channel realizations for a scenario.

    ``gains`` defaults to ``scenario.link_gains()``; pass an explicit value to
    redraw shadowing per realization.
    """
    g = gains if gains is not None else scenario.link_gains()
    L, N = scenario.bs_antennas, scenario.n_elements
    batch = () if size is None else (size,)
    angles = scenario.los_angles()

    if N > 0:
        rb = LinkStatistics(g.rdars_bs, scenario.rician_rdars_bs)
        ur = LinkStatistics(g.ue_rdars, scenario.rician_ue_rdars)
        a_bs = array_response(scenario.bs_geometry, angles.bs_arrival)
        a_rdars_dep = array_response(scenario.rdars_geometry, angles.rdars_departure)
        a_rdars_arr = array_response(scenario.rdars_geometry, angles.rdars_arrival)
        H = sample_rician(rng, L, N, rb, np.outer(a_bs, a_rdars_dep.conj()), batch)
        h = sample_rician(rng, N, 1, ur, a_rdars_arr[:, None], batch)[..., 0]
    else:
        H = np.zeros(batch + (L, 0), dtype=complex)
        h = np.zeros(batch + (0,), dtype=complex)
    d = sample_rayleigh(rng, batch + (L,), g.ue_bs)
    return ChannelRealization(H, h, d)


@dataclass(frozen=True)
class LinkGains:
    """Linear average power gains of the three links (per element/antenna)."""

    ue_bs: float
    ue_rdars: float
    rdars_bs: float

    @property
    def amplitudes(self) -> tuple[float, float, float]:
        """(alpha, beta, gamma) amplitudes used by the single-antenna formulas."""
        return math.sqrt(self.ue_rdars), math.sqrt(self.rdars_bs), math.sqrt(self.ue_bs)
