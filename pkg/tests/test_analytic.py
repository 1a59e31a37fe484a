import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from rdars.analytic import (
    GammaApprox,
    SimoRateInputs,
    SisoMomentInputs,
    fourth_moment_terms,
    c3_closed,
    c4_closed,
    e_noise,
    e_signal,
    ergodic_rate_gamma,
    ergodic_rate_gamma_laguerre,
    ergodic_rate_simo_approx,
    gamma1_moments,
    gamma2_moments,
    gamma3_moments,
    gamma_match,
    mean_snrs_by_system,
    rate_upper_bound_siso,
    ris_crossover_n,
    snr_moments_composed,
    snr_moments_expanded,
    sum_moment_combinatorial,
)
from rdars.analytic.simo import reflected_power_mean
from rdars.snr import NoiseModel


@pytest.mark.parametrize("m", range(1, 65))
def test_c3_c4_closed_forms_match_combinatorial_sums(m):
    # E[(sum of m unit Rayleigh products)^k] / (alpha beta)^k with E|h|^2 = 1
    assert c3_closed(m) == pytest.approx(sum_moment_combinatorial(m, 3), rel=1e-12)
    assert c4_closed(m) == pytest.approx(sum_moment_combinatorial(m, 4), rel=1e-12)


def test_sum_moment_brute_force_small():
    # m=2, k=2: E[(x1+x2)^2] = 2 E[x^2] + 2 E[x]^2 with x a product of two unit Rayleighs
    ex = (math.sqrt(math.pi) / 2) ** 2
    ex2 = 1.0
    assert sum_moment_combinatorial(2, 2) == pytest.approx(2 * ex2 + 2 * ex ** 2)


@pytest.mark.parametrize("g", [0.3, 1.0, 2.5])
def test_gamma1_against_scipy_rayleigh(g):
    dist = stats.rayleigh(scale=g / math.sqrt(2))
    for k, v in enumerate(gamma1_moments(g), start=1):
        assert v == pytest.approx(dist.moment(k), rel=1e-10)


@pytest.mark.parametrize("a,alpha", [(1, 0.5), (3, 1.0), (7, 2.0)])
def test_gamma3_against_scipy_gamma(a, alpha):
    dist = stats.gamma(a, scale=alpha ** 2)
    m1, m2 = gamma3_moments(a, alpha)
    assert m1 == pytest.approx(dist.moment(1))
    assert m2 == pytest.approx(dist.moment(2))


def test_gamma2_low_order_moments():
    n, a, al, be = 20, 3, 0.7, 1.3
    m = n - a
    g = gamma2_moments(n, a, al, be)
    assert g[0] == pytest.approx(m * math.pi / 4 * al * be)
    assert g[1] == pytest.approx(m * (1 + math.pi ** 2 / 16 * (m - 1)) * al ** 2 * be ** 2)
    assert g[2] == pytest.approx(c3_closed(m) * (al * be) ** 3)
    assert g[3] == pytest.approx(c4_closed(m) * (al * be) ** 4)


def test_gamma2_without_reflecting_elements_is_zero():
    assert gamma2_moments(4, 4, 1.0, 1.0) == (0.0, 0.0, 0.0, 0.0)


@given(st.integers(1, 200), st.integers(0, 10), st.floats(0.1, 3), st.floats(0.1, 3),
       st.floats(0.1, 3), st.floats(0.1, 100))
@settings(deadline=None)
def test_expanded_moments_equal_composed(n, a, al, be, ga, s):
    a = min(a, n)
    inp = SisoMomentInputs(n, a, al, be, ga, s)
    p1, p2 = snr_moments_expanded(inp)
    c1, c2 = snr_moments_composed(inp)
    assert p1 == pytest.approx(c1, rel=1e-9)
    assert p2 == pytest.approx(c2, rel=1e-9)
    assert mean_snrs_by_system(inp)[0] == pytest.approx(c1, rel=1e-9)


def test_uncorrected_variants_differ_from_corrected():
    inp = SisoMomentInputs(64, 2, 0.8, 1.1, 0.6, 3.0)
    assert snr_moments_expanded(inp, uncorrected=True)[1] != pytest.approx(snr_moments_expanded(inp)[1], rel=1e-6)
    assert rate_upper_bound_siso(inp, uncorrected=True) != pytest.approx(rate_upper_bound_siso(inp), rel=1e-6)


def test_gamma_match_trivial():
    fit = gamma_match(2.0, 6.0)
    assert fit.k == pytest.approx(2.0) and fit.p == pytest.approx(1.0)
    assert fit.mean == pytest.approx(2.0) and fit.second_moment == pytest.approx(6.0)
    with pytest.raises(ValueError):
        gamma_match(1.0, 1.0)


@pytest.mark.parametrize("k,p", [(0.3, 5.0), (1.0, 1.0), (4.8, 1.47), (50.0, 0.2), (2000.0, 0.01)])
def test_gamma_rate_routes_agree(k, p):
    ref = stats.gamma(k, scale=p).expect(lambda x: np.log2(1 + x), epsabs=1e-12, epsrel=1e-12)
    assert ergodic_rate_gamma(GammaApprox(k, p)) == pytest.approx(ref, abs=1e-6)
    assert ergodic_rate_gamma_laguerre(GammaApprox(k, p)) == pytest.approx(ref, abs=1e-6)


def test_gamma_rate_exponential_closed_form():
    # X ~ Exp(1): E ln(1+X) = e * E1(1)
    from scipy.special import exp1
    assert ergodic_rate_gamma(GammaApprox(1.0, 1.0)) == pytest.approx(math.e * exp1(1.0) / math.log(2), abs=1e-9)


def test_threshold_fig3_parameters():
    amp = math.sqrt(1e-7)
    assert ris_crossover_n(amp, amp, amp, 1) == pytest.approx(8.1e6, rel=0.02)


def test_threshold_is_the_mean_snr_crossing():
    amp = math.sqrt(1e-7)
    n_star = ris_crossover_n(amp, amp, amp, 1)
    for n, sign in ((int(n_star * 0.99), 1), (int(n_star * 1.01), -1)):
        r, ris, _ = mean_snrs_by_system(SisoMomentInputs(n, 1, amp, amp, amp, 1e9))
        assert sign * (r - ris) > 0


def _simo(**kw):
    base = dict(l_antennas=2, n_total=6, a=1, alpha=0.7, beta=1.4, gamma=0.3, delta=2.0, epsilon=3.0,
                p=5.0, noise=NoiseModel(1.0, 1.0), f_abs=4.2)
    base.update(kw)
    return SimoRateInputs(**base)


@given(st.integers(1, 8), st.integers(1, 40), st.integers(0, 5), st.floats(0, 20), st.floats(0, 20),
       st.floats(0, 1))
@settings(deadline=None)
def test_fourteen_terms_sum_to_signal(L, n, a, dl, ep, frac):
    a = min(a, n)
    inp = _simo(l_antennas=L, n_total=n, a=a, delta=dl, epsilon=ep, f_abs=frac * (n - a))
    assert fourth_moment_terms(inp).sum() == pytest.approx(e_signal(inp), rel=1e-10)


def test_signal_rayleigh_single_antenna_reduces():
    # L=1, a=0, delta=eps=0: E|d + sum_m H_m h_m|^4 with the sum ~ variance M c, d ~ variance gamma
    m, c, g = 9, 0.7 * 1.4, 0.3
    inp = _simo(l_antennas=1, n_total=m, a=0, delta=0.0, epsilon=0.0, f_abs=0.0)
    expected = c ** 2 * (2 * m ** 2 + 2 * m) + 4 * m * c * g + 2 * g ** 2
    assert e_signal(inp) == pytest.approx(expected, rel=1e-12)


def test_noise_term_direct_evaluation():
    inp = _simo(noise=NoiseModel(2.0, 3.0))
    top = reflected_power_mean(inp) + inp.l_antennas * inp.gamma
    bottom = inp.a * inp.alpha
    assert e_noise(inp) == pytest.approx(2.0 * top + 3.0 * bottom)


def test_simo_inputs_validation():
    with pytest.raises(ValueError):
        _simo(f_abs=6.0)
    with pytest.raises(ValueError):
        _simo(a=7)
    with pytest.raises(ValueError):
        _simo(l_antennas=0)


def test_simo_rate_increases_with_alignment():
    lo = ergodic_rate_simo_approx(_simo(f_abs=0.0))
    hi = ergodic_rate_simo_approx(_simo(f_abs=5.0))
    assert hi > lo > 0
