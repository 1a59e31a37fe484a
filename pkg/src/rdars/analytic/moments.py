"""Moments of the single-antenna SNR building blocks.

The received SNR under co-phased reflection is
``snr * ((g1 + g2)^2 + g3)`` with

    g1 = |h_UB|                            (Rayleigh, amplitude gamma)
    g2 = sum over reflecting i of |h_RB,i| |h_UR,i|
    g3 = sum over connected i of |h_UR,i|^2 (Gamma(a, alpha^2))

Amplitudes ``alpha``, ``beta``, ``gamma`` are square roots of the link gains.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

SQRT_PI = math.sqrt(math.pi)
PI2 = math.pi ** 2


def gamma1_moments(gamma: float) -> tuple[float, float, float, float]:
    """First four raw moments of ``|h|`` for ``h ~ CN(0, gamma^2)``."""
    return (
        0.5 * SQRT_PI * gamma,
        gamma ** 2,
        0.75 * SQRT_PI * gamma ** 3,
        2.0 * gamma ** 4,
    )


def c3_closed(m: int) -> float:
    """Third-moment constant for ``m`` reflecting elements (closed polynomial)."""
    return (m * 9.0 / 16.0 * math.pi
            + 3.0 * m * (m - 1) * 0.25 * math.pi
            + m * (m - 1) * (m - 2) * math.pi ** 3 / 64.0)


def c4_closed(m: int) -> float:
    """Fourth-moment constant for ``m`` reflecting elements (closed polynomial)."""
    return (4.0 * m
            + 9.0 / 16.0 * m * (m - 1) * PI2
            + 3.0 * m * (m - 1)
            + 6.0 * m * (m - 1) * (m - 2) * PI2 / 16.0
            + m * (m - 1) * (m - 2) * (m - 3) * math.pi ** 4 / 256.0)


def _partitions(k: int, max_part: int | None = None):
    if max_part is None:
        max_part = k
    if k == 0:
        yield ()
        return
    for first in range(min(k, max_part), 0, -1):
        for rest in _partitions(k - first, first):
            yield (first,) + rest


def product_moment(j: int) -> float:
    """``E[(|u||v|)^j]`` for independent unit CN ``u, v``: ``Gamma(1 + j/2)^2``."""
    return math.gamma(1.0 + 0.5 * j) ** 2


@lru_cache(maxsize=None)
def sum_moment_combinatorial(m: int, k: int) -> float:
    """``E[(x_1 + ... + x_m)^k]`` for i.i.d. unit products, by enumerating exponent patterns.

    Each integer partition ``lam`` of ``k`` with ``r`` parts contributes
    ``k!/prod(lam_i!)`` orderings of the powers times ``m(m-1)...(m-r+1)/prod(mult!)``
    ways to pick distinct indices.
    """
    total = 0.0
    for lam in _partitions(k):
        r = len(lam)
        if r > m:
            continue
        coeff = math.factorial(k)
        for part in lam:
            coeff //= math.factorial(part)
        index_ways = math.perm(m, r)
        for part in set(lam):
            index_ways //= math.factorial(lam.count(part))
        total += coeff * index_ways * math.prod(product_moment(part) for part in lam)
    return total


def gamma2_moments(n: int, a: int, alpha: float, beta: float) -> tuple[float, float, float, float]:
    """First four raw moments of the co-phased reflection sum over ``n - a`` elements."""
    if not 0 <= a <= n:
        raise ValueError(f"need 0 <= a <= N, got a={a}, N={n}")
    m = n - a
    ab = alpha * beta
    return (
        m * math.pi / 4.0 * ab,
        m * (1.0 + PI2 / 16.0 * (m - 1)) * ab ** 2,
        c3_closed(m) * ab ** 3,
        c4_closed(m) * ab ** 4,
    )


def gamma3_moments(a: int, alpha: float) -> tuple[float, float]:
    """First two raw moments of ``Gamma(a, alpha^2)``."""
    if a < 0:
        raise ValueError("a must be non-negative")
    return a * alpha ** 2, a * (a + 1) * alpha ** 4
