"""Moment-ratio rate approximation for the multi-antenna BS with Rician surface links.

Here ``alpha``, ``beta`` and ``gamma`` are linear power gains (UE->RDARS,
RDARS->BS, UE->BS), not amplitudes. Two derived gains appear throughout::

    cascade_gain c = alpha*beta / ((delta+1)(eps+1))
    remote_gain  d = alpha / (eps+1)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from rdars.snr import NoiseModel


@dataclass(frozen=True)
class SimoRateInputs:
    l_antennas: int
    n_total: int
    a: int
    alpha: float
    beta: float
    gamma: float
    delta: float
    epsilon: float
    p: float
    noise: NoiseModel
    f_abs: float

    def __post_init__(self):
        if self.l_antennas < 1:
            raise ValueError("need at least one BS antenna")
        if not 0 <= self.a <= self.n_total:
            raise ValueError(f"need 0 <= a <= N, got a={self.a}, N={self.n_total}")
        if min(self.alpha, self.beta, self.gamma) <= 0:
            raise ValueError("link gains must be positive")
        if self.delta < 0 or self.epsilon < 0:
            raise ValueError("Rician factors must be non-negative")
        if self.f_abs < 0 or self.f_abs > (self.n_total - self.a) * (1 + 1e-12) + 1e-9:
            raise ValueError(f"|f| = {self.f_abs} outside [0, N - a = {self.n_total - self.a}]")

    @property
    def cascade_gain(self) -> float:
        return self.alpha * self.beta / ((self.delta + 1.0) * (self.epsilon + 1.0))

    @property
    def remote_gain(self) -> float:
        return self.alpha / (self.epsilon + 1.0)

    @property
    def n_reflecting(self) -> int:
        return self.n_total - self.a


def reflected_power_mean(inputs: SimoRateInputs) -> float:
    """``E||H B h||^2 = L c (|f|^2 delta eps + M delta + M (eps + 1))``."""
    c, m, f2 = inputs.cascade_gain, inputs.n_reflecting, inputs.f_abs ** 2
    dl, ep = inputs.delta, inputs.epsilon
    return inputs.l_antennas * c * (f2 * dl * ep + m * dl + m * (ep + 1.0))


def e_signal(inputs: SimoRateInputs) -> float:
    """``E[||h_tilde||^4]`` in the compact closed form."""
    L, m = inputs.l_antennas, inputs.n_reflecting
    a, al, ga = inputs.a, inputs.alpha, inputs.gamma
    dl, ep = inputs.delta, inputs.epsilon
    c, d = inputs.cascade_gain, inputs.remote_gain
    f2 = inputs.f_abs ** 2
    de = dl * ep
    quad = (
        L * de ** 2 * f2 ** 2
        + 2.0 * de * f2 * (2 * L * m * dl + L * m * ep + L * m + 2 * L + m * ep + m + 2)
        + L * m ** 2 * (2 * dl ** 2 + ep ** 2 + 2 * de + 2 * dl + 2 * ep + 1)
        + m ** 2 * (ep ** 2 + 2 * de + 2 * dl + 2 * ep + 1)
        + L * m * (2 * dl + 2 * ep + 1)
        + m * (2 * dl + 2 * ep + 1)
    )
    lin = 2.0 * de * f2 * ((L + 1) * ga + a * al) + 2.0 * m * (L + 1) * (ep + dl + 1) * ga
    return (
        L * c ** 2 * quad
        + L * c * lin
        + 2.0 * L * a * (m * c * al * (ep + dl + 1) + al * ga)
        + L * (L + 1) * ga ** 2
        + a * d ** 2 * ((ep + 1) ** 2 * a + 2 * ep + 1)
    )


def fourth_moment_terms(inputs: SimoRateInputs) -> np.ndarray:
    """The fourteen expectations whose sum is ``E[||h_tilde||^4]`` (index 0 is term 1).

    With ``h_B = H B h``, ``d`` the direct channel, ``hbar``/``hw`` the LoS and
    scattered parts of ``h`` and ``P = A^H A``::

        1  E|h_B^H h_B|^2          8  d^2 E|hw^H P hw|^2
        2  E|h_B^H d|^2            9  2 E[h_B^H h_B d^H d]
        3  E|d^H h_B|^2           10  2 d eps E[h_B^H h_B hbar^H P hbar]
        4  E|d^H d|^2             11  2 d E[h_B^H h_B hw^H P hw]
        5  d^2 eps^2 |hbar^H P hbar|^2   12  2 d eps E[d^H d hbar^H P hbar]
        6  d^2 eps E|hbar^H P hw|^2      13  2 d E[d^H d hw^H P hw]
        7  d^2 eps E|hw^H P hbar|^2      14  2 d^2 eps E[hbar^H P hbar hw^H P hw]
    """
    L, m = inputs.l_antennas, inputs.n_reflecting
    a, ga = inputs.a, inputs.gamma
    dl, ep = inputs.delta, inputs.epsilon
    c, d = inputs.cascade_gain, inputs.remote_gain
    f2 = inputs.f_abs ** 2
    de = dl * ep
    t1 = L * c ** 2 * (
        L * de ** 2 * f2 ** 2
        + 2.0 * de * f2 * (2 * L * m * dl + L * m * ep + L * m + 2 * L + m * ep + m + 2)
        + L * m ** 2 * (2 * dl ** 2 + ep ** 2 + 2 * de + 2 * dl + 2 * ep + 1)
        + m ** 2 * (ep ** 2 + 2 * de + 2 * dl + 2 * ep + 1)
        + L * m * (2 * dl + 2 * ep + 1)
        + m * (2 * dl + 2 * ep + 1)
    )
    refl = f2 * c * de + m * c * dl + m * c * (ep + 1)
    t2 = ga * L * refl
    t3 = t2
    t4 = ga ** 2 * L * (L + 1)
    t5 = a ** 2 * d ** 2 * ep ** 2
    t6 = a * d ** 2 * ep
    t7 = a * d ** 2 * ep
    t8 = a ** 2 * d ** 2 + a * d ** 2
    t9 = 2 * L ** 2 * f2 * c * de * ga + 2 * L ** 2 * m * c * dl * ga + 2 * L ** 2 * m * c * (ep + 1) * ga
    t10 = (2 * L * a * f2 * c * d * dl * ep ** 2 + 2 * L * a * m * c * d * dl * ep
           + 2 * L * a * m * c * d * ep ** 2 + 2 * L * a * m * c * d * ep)
    t11 = (2 * L * a * f2 * c * d * dl * ep + 2 * L * a * m * c * d * dl
           + 2 * L * a * m * c * d * ep + 2 * L * a * m * c * d)
    t12 = 2 * L * a * d * ga * ep
    t13 = 2 * L * a * d * ga
    t14 = 2 * a ** 2 * d ** 2 * ep
    return np.array([t1, t2, t3, t4, t5, t6, t7, t8, t9, t10, t11, t12, t13, t14], dtype=float)


def e_noise(inputs: SimoRateInputs) -> float:
    """``E[h_tilde^H R h_tilde]`` with ``R = blkdiag(sigma_B^2 I_L, sigma_R^2 I_a)``."""
    L, m = inputs.l_antennas, inputs.n_reflecting
    c, d = inputs.cascade_gain, inputs.remote_gain
    dl, ep = inputs.delta, inputs.epsilon
    f2 = inputs.f_abs ** 2
    return (inputs.noise.sigma_b_sq * L * (f2 * c * dl * ep + m * c * dl + (m * c * (ep + 1) + inputs.gamma))
            + inputs.noise.sigma_r_sq * inputs.a * d * (ep + 1))


def ergodic_rate_simo_approx(inputs: SimoRateInputs) -> float:
    """``log2(1 + P E[||h||^4] / E[h^H R h])``."""
    return math.log1p(inputs.p * e_signal(inputs) / e_noise(inputs)) / math.log(2.0)
