import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rdars.channel import AngleSet, NodeGeometry
from rdars.config import (
    RdarsConfiguration,
    aligned_phases,
    alignment_zeta,
    effective_reflection,
    f_value,
    optimal_phases_instantaneous,
    phases_equal,
    wrap_phase,
)


def test_connected_entries_are_silent():
    cfg = RdarsConfiguration(5, frozenset({1, 3}), np.full(5, 0.7))
    b = effective_reflection(cfg)
    assert b[1] == 0 and b[3] == 0
    assert np.allclose(np.abs(b[[0, 2, 4]]), 1.0)
    assert cfg.a == 2
    assert list(cfg.connected_indices) == [1, 3]


def test_configuration_validation():
    with pytest.raises(ValueError):
        RdarsConfiguration(3, frozenset({3}))
    with pytest.raises(ValueError):
        RdarsConfiguration(3, phases=np.zeros(4))
    with pytest.raises(ValueError):
        RdarsConfiguration(2, phases=np.array([0.0, np.nan]))
    with pytest.raises(ValueError):
        RdarsConfiguration.first_connected(3, 4)


def test_optimal_phases_cophase_every_path():
    rng = np.random.default_rng(2)
    n = 9
    h_ub = complex(rng.normal(), rng.normal())
    h_rb = rng.normal(size=n) + 1j * rng.normal(size=n)
    h_ur = rng.normal(size=n) + 1j * rng.normal(size=n)
    cfg = RdarsConfiguration.first_connected(n, 2)
    th = optimal_phases_instantaneous(h_ub, h_rb, h_ur, cfg.connected)
    cfg = cfg.with_phases(th)
    total = h_ub + np.sum(np.conj(h_rb) * effective_reflection(cfg) * h_ur)
    expected = abs(h_ub) + np.sum(np.abs(h_rb[2:]) * np.abs(h_ur[2:]))
    assert abs(total) == pytest.approx(expected, rel=1e-12)


def test_optimal_phases_zero_direct_link():
    th = optimal_phases_instantaneous(0j, np.array([1j, 1.0]), np.array([1.0, 1j]))
    assert np.all(np.isfinite(th))


def test_alignment_gives_full_coherent_sum():
    g = NodeGeometry((0, 0, 0), 4, 4, 0.5)
    z = alignment_zeta(g, AngleSet(0.4, 1.2), AngleSet(2.0, 0.3))
    cfg = RdarsConfiguration.first_connected(16, 3)
    cfg = cfg.with_phases(aligned_phases(z, cfg))
    assert abs(f_value(cfg, z)) == pytest.approx(13.0, rel=1e-12)


def test_identity_phases_give_incoherent_sum():
    g = NodeGeometry((0, 0, 0), 4, 4, 0.5)
    z = alignment_zeta(g, AngleSet(0.4, 1.2), AngleSet(2.0, 0.3))
    cfg = RdarsConfiguration.first_connected(16, 3)
    assert abs(f_value(cfg, z)) < 13.0


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8), st.integers(-5, 5))
def test_phase_comparison_modulo_two_pi(p, k):
    p = np.array(p)
    assert phases_equal(p, p + 2 * math.pi * k)
    w = wrap_phase(p)
    assert phases_equal(w, p)
    assert np.all((w >= 0.0) & (w <= 2 * math.pi))


def test_phases_equal_detects_difference():
    assert not phases_equal(np.zeros(2), np.array([0.0, 1e-6]))
