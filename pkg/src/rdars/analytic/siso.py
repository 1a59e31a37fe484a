"""Closed forms for the single-antenna BS with co-phased reflection and Rayleigh links.

Every function here takes amplitudes (``alpha**2`` is the UE->RDARS gain,
``beta**2`` RDARS->BS, ``gamma**2`` UE->BS).
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, special, stats

from rdars.analytic.moments import (
    PI2,
    SQRT_PI,
    c3_closed,
    c4_closed,
    gamma1_moments,
    gamma2_moments,
    gamma3_moments,
)

LN2 = math.log(2.0)


class QuadratureError(ArithmeticError):
    """Numerical integration did not reach the requested accuracy."""


@dataclass(frozen=True)
class SisoMomentInputs:
    n_total: int
    a: int
    alpha: float
    beta: float
    gamma: float
    transmit_snr: float

    def __post_init__(self):
        if not 0 <= self.a <= self.n_total:
            raise ValueError(f"need 0 <= a <= N, got a={self.a}, N={self.n_total}")
        if not (self.alpha > 0 and self.beta > 0 and self.gamma > 0):
            raise ValueError("amplitudes must be positive")
        if not self.transmit_snr > 0:
            raise ValueError("transmit_snr must be positive")

    @property
    def n_reflecting(self) -> int:
        return self.n_total - self.a

    @classmethod
    def from_gains(cls, n_total, a, ue_rdars, rdars_bs, ue_bs, transmit_snr) -> "SisoMomentInputs":
        return cls(n_total, a, math.sqrt(ue_rdars), math.sqrt(rdars_bs), math.sqrt(ue_bs), transmit_snr)


@dataclass(frozen=True)
class GammaApprox:
    k: float
    p: float

    @property
    def mean(self) -> float:
        return self.k * self.p

    @property
    def second_moment(self) -> float:
        return self.k * self.p ** 2 + (self.k * self.p) ** 2


def snr_moments_expanded(inputs: SisoMomentInputs, uncorrected: bool = False) -> tuple[float, float]:
    """``E[snr]`` and ``E[snr^2]`` from the expanded polynomials.

    An uncorrected variant carries ``C3 * gamma^3 * beta^3 * gamma``
    in its ``2*sqrt(pi)`` term; the moment algebra gives ``C3 * alpha^3 * beta^3 * gamma``,
    which is used unless ``uncorrected=True``.
    """
    n, a = inputs.n_total, inputs.a
    al, be, ga, s = inputs.alpha, inputs.beta, inputs.gamma, inputs.transmit_snr
    m = n - a
    ab2 = al ** 2 * be ** 2
    mean = s * (
        n ** 2 * (PI2 / 16.0) * ab2
        + ab2 * (n * (1.0 - PI2 / 8.0 * a - PI2 / 16.0) + PI2 / 16.0 * a * (a + 1) - a)
        + al * be * ga * (math.pi / 4.0 * SQRT_PI * m)
        + a * al ** 2 + ga ** 2
    )
    g2sq = m * (1.0 + PI2 / 16.0 * (m - 1))
    c3_term = c3_closed(m) * (ga ** 3 * be ** 3 * ga if uncorrected else al ** 3 * be ** 3 * ga)
    second = s ** 2 * (
        2.0 * ga ** 4
        + 6.0 * g2sq * ga ** 2 * ab2
        + 0.75 * math.pi * SQRT_PI * m * ga ** 3 * al * be
        + c4_closed(m) * ab2 ** 2
        + 2.0 * SQRT_PI * c3_term
        + 2.0 * a * ga ** 2 * al ** 2
        + 2.0 * g2sq * a * al ** 4 * be ** 2
        + 0.5 * math.pi * SQRT_PI * m * a * al ** 3 * ga * be
        + a * (a + 1) * al ** 4
    )
    return mean, second


def snr_moments_composed(inputs: SisoMomentInputs, n_reflecting: int | None = None) -> tuple[float, float]:
    """``E[snr]`` and ``E[snr^2]`` assembled from the g1/g2/g3 moments and independence.

    ``n_reflecting`` overrides ``N - a``; set it to 0 for the DAS baseline,
    where the surface no longer reflects but ``a`` elements still receive.
    """
    m = inputs.n_reflecting if n_reflecting is None else n_reflecting
    g1 = gamma1_moments(inputs.gamma)
    g2 = gamma2_moments(m, 0, inputs.alpha, inputs.beta)
    g3 = gamma3_moments(inputs.a, inputs.alpha)
    # raw moments of (g1 + g2) via binomial expansion
    e1 = (1.0,) + g1
    e2 = (1.0,) + g2
    s_pow = [sum(math.comb(j, i) * e1[i] * e2[j - i] for i in range(j + 1)) for j in range(5)]
    s = inputs.transmit_snr
    mean = s * (s_pow[2] + g3[0])
    second = s ** 2 * (s_pow[4] + 2.0 * s_pow[2] * g3[0] + g3[1])
    return mean, second


def snr_moments_siso(inputs: SisoMomentInputs, route: str = "composed",
                     uncorrected: bool = False) -> tuple[float, float]:
    """First two moments of the received SNR. ``route`` is ``"composed"`` or ``"expanded"``."""
    if route == "composed":
        return snr_moments_composed(inputs)
    if route == "expanded":
        return snr_moments_expanded(inputs, uncorrected=uncorrected)
    raise ValueError(f"unknown route {route!r}")


def gamma_match(mean: float, second_moment: float) -> GammaApprox:
    """Shape/scale of the Gamma law sharing the given first two moments."""
    var = second_moment - mean ** 2
    if not (mean > 0 and var > 0):
        raise ValueError(f"moment matching needs E > 0 and E2 > E^2 (E={mean}, E2={second_moment})")
    return GammaApprox(mean ** 2 / var, var / mean)


def _check_quad(value, err, tol, what):
    if not np.isfinite(value) or err > tol:
        raise QuadratureError(f"{what}: estimate {value} with error bound {err} exceeds {tol}")


def ergodic_rate_gamma(approx: GammaApprox, tol: float = 1e-10) -> float:
    """``E[log2(1 + X)]`` for ``X ~ Gamma(k, p)`` by adaptive Gauss-Kronrod quadrature.

    Computed as ``log2(1 + E[X])`` minus the Jensen gap
    ``E[u - log1p(u)]``, ``u = (X - E[X]) / (1 + E[X])``. The gap integrand
    is non-negative pointwise, so the result never exceeds ``log2(1 + E[X])``
    and there is no cancellation at low SNR.

    The integral runs over the standardized variable ``y = X/p`` against the
    Gamma(k, 1) density, split at the mode and at far quantiles so that very
    peaked (large ``k``) densities are resolved. For ``k < 1`` the substitution
    ``t = y^k`` removes the singularity at the origin.
    """
    k, p = approx.k, approx.p
    if not (k > 0 and p > 0):
        raise ValueError("shape and scale must be positive")
    mean = k * p
    log_norm = special.gammaln(k)

    def gap(y):
        u = (p * y - mean) / (1.0 + mean)
        return u - np.log1p(u)

    if k < 1.0:
        # y = t^(1/k): dy = t^(1/k - 1)/k dt, y^(k-1) dy = dt/k
        def integrand(t):
            y = t ** (1.0 / k)
            return gap(y) * np.exp(-y - log_norm) / k

        upper = stats.gamma.isf(1e-18, k) ** k
        pts = [0.0, min(1.0, upper), upper]
    else:
        def integrand(y):
            if y <= 0.0:
                return 0.0
            return gap(y) * np.exp((k - 1.0) * math.log(y) - y - log_norm)

        lo = stats.gamma.ppf(1e-18, k)
        hi = stats.gamma.isf(1e-18, k)
        mode = k - 1.0
        pts = sorted({0.0, lo, max(lo, mode - math.sqrt(k)), mode, mode + math.sqrt(k), hi})

    # the gap is O(p * E[X]) for small scales; keep the absolute target below it
    epsabs = tol * 1e-2 * min(1.0, mean * min(1.0, p))
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        # roundoff warnings are superseded by the explicit error-bound check below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a_, b_ in zip(pts[:-1], pts[1:]):
            if b_ <= a_:
                continue
            v, e = integrate.quad(integrand, a_, b_, epsabs=epsabs, epsrel=1e-12, limit=200)
            total += v
            err += e
        v, e = integrate.quad(integrand, pts[-1], np.inf, epsabs=epsabs, epsrel=1e-12, limit=200)
        total += max(v, 0.0)
        err += e
    _check_quad(total, err, tol, "gamma-density quadrature")
    return max(0.0, math.log1p(mean) - max(total, 0.0)) / LN2


@functools.lru_cache(maxsize=None)
def _laguerre_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    # Golub-Welsch on the Jacobi matrix; stays finite where the recurrence-based
    # routines overflow (n >~ 200)
    x, v = linalg.eigh_tridiagonal(2.0 * np.arange(n) + 1.0, np.arange(1.0, n))
    return x, v[0] ** 2


def ergodic_rate_gamma_laguerre(approx: GammaApprox, tol: float = 1e-6,
                                nodes: tuple[int, ...] = (64, 128, 256, 512)) -> float:
    """Same quantity through ``ln(1+X) = int_0^inf e^{-s}(1 - e^{-sX})/s ds``.

    Taking the expectation inside gives a Gauss-Laguerre integral of
    ``(1 - (1 + p s)^(-k))/s``; node count doubles until successive
    estimates agree to ``tol``.
    """
    k, p = approx.k, approx.p
    if not (k > 0 and p > 0):
        raise ValueError("shape and scale must be positive")

    def g(s):
        return -np.expm1(-k * np.log1p(p * s)) / s

    prev = None
    for n in nodes:
        x, w = _laguerre_rule(n)
        val = float(np.dot(w, g(x))) / LN2
        if prev is not None and abs(val - prev) <= tol:
            return val
        prev = val
    raise QuadratureError(f"Gauss-Laguerre did not settle within {tol} at {nodes[-1]} nodes "
                          f"(k={k}, p={p}, last={prev})")


def ergodic_rate_siso(inputs: SisoMomentInputs) -> float:
    """Gamma-matched ergodic rate of the RDARS link."""
    return ergodic_rate_gamma(gamma_match(*snr_moments_siso(inputs)))


def rate_upper_bound_siso(inputs: SisoMomentInputs, uncorrected: bool = False) -> float:
    """Jensen bound ``log2(1 + E[snr])``.

    ``uncorrected=True`` evaluates an uncorrected bound polynomial that carries
    ``a^2`` in the linear-in-N term and ``(a^2 + a - 1)`` in the constant;
    those coefficients disagree with the mean it is meant to bound.
    """
    if not uncorrected:
        return math.log1p(snr_moments_composed(inputs)[0]) / LN2
    n, a = inputs.n_total, inputs.a
    al, be, ga, s = inputs.alpha, inputs.beta, inputs.gamma, inputs.transmit_snr
    ab2 = al ** 2 * be ** 2
    inner = (n ** 2 * PI2 / 16.0 * ab2
             + ab2 * (n * (1.0 - PI2 / 8.0 * a ** 2 - PI2 / 16.0) + PI2 / 16.0 * (a ** 2 + a - 1))
             + ga * al * be * (math.pi / 4.0 * SQRT_PI * (n - a))
             + a * al ** 2 + ga ** 2)
    return math.log1p(s * inner) / LN2


def mean_snrs_by_system(inputs: SisoMomentInputs) -> tuple[float, float, float]:
    """Average received SNR of (RDARS, RIS with all N reflecting, DAS with a remote antennas)."""
    n, a = inputs.n_total, inputs.a
    al, be, ga, s = inputs.alpha, inputs.beta, inputs.gamma, inputs.transmit_snr
    cross = math.pi / 4.0 * SQRT_PI * ga * al * be
    ab2 = al ** 2 * be ** 2
    m = n - a
    rdars = s * (ga ** 2 + m * cross + m * (1.0 + PI2 / 16.0 * (m - 1)) * ab2 + a * al ** 2)
    ris = s * (ga ** 2 + n * cross + n * (1.0 + PI2 / 16.0 * (n - 1)) * ab2)
    das = s * (ga ** 2 + a * al ** 2)
    return rdars, ris, das


def mean_snr_direct_only(inputs: SisoMomentInputs) -> float:
    return inputs.transmit_snr * inputs.gamma ** 2


def ris_crossover_n(alpha: float, beta: float, gamma: float, a: int) -> float:
    """Largest N (real-valued) for which the RDARS mean SNR still beats the RIS one."""
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    return (8.0 / PI2 * (1.0 / beta ** 2 - 1.0) + (a + 1) / 2.0
            - 2.0 * SQRT_PI / math.pi * gamma / (alpha * beta))
