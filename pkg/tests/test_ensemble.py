import math

import numpy as np
import pytest

from circext.ensemble import (EnsembleConfig, build_eigenbasis, coincidence_sum, diagonal_sum,
                              diophantine_check, expected_trace_sq, moment_check,
                              monte_carlo_trace_sq, nondiophantine_rate, sample_coefficients,
                              trace_samples, variance_bound_check)
from circext.errors import ConfigError
from circext.orbits import enumerate_linear, orbit_partition, orbit_trace_sum

N4 = 4 * math.pi**2
N8 = 8 * math.pi**2


@pytest.fixture(scope="module")
def basis4():
    return build_eigenbasis(N4)


@pytest.mark.parametrize("N,dim", [(0.0, 1), (N4, 5), (N8, 9), (16 * math.pi**2, 13)])
def test_basis_dimension(N, dim):
    assert build_eigenbasis(N).dim == dim


def test_basis_is_orthonormal(basis4):
    assert np.abs(basis4.gram() - np.eye(basis4.dim)).max() < 1e-12


def test_config_validation():
    with pytest.raises(ConfigError):
        EnsembleConfig(N4, 0)
    with pytest.raises(ConfigError):
        EnsembleConfig(N4, 10, n=0)


def test_streams_independent_of_chunking(basis4):
    X = sample_coefficients(basis4, 7, 10)
    Y = sample_coefficients(basis4, 7, 4, start=6)
    assert np.array_equal(X[6:], Y)


def test_trace_samples_match_orbit_sums(cat, basis4):
    X = sample_coefficients(basis4, 3, 4)
    S = trace_samples(basis4, cat, 1, 3, X)
    for x, s in zip(X, S):
        assert abs(orbit_trace_sum(cat, basis4.combine(x), 1, 3) - s) < 1e-12


def test_expected_q0_is_trace_squared(cat, basis4):
    assert expected_trace_sq(basis4, cat, 0, 2) == pytest.approx(1.0, abs=1e-12)


def test_expected_q1_value(cat, basis4):
    # independent oracle: same-orbit pairs share the Birkhoff sum, so
    # coincident pairs = 1 + 4 + 4 over orbit sizes (1, 2, 2), each 1/25
    orb = enumerate_linear(cat.M, 2)
    sizes = np.bincount(orbit_partition(cat, orb))
    oracle = float(np.sum(sizes**2)) / 25
    assert oracle == pytest.approx(0.36)
    assert expected_trace_sq(basis4, cat, 1, 2) == pytest.approx(0.36, abs=1e-12)


def test_large_q_limit_is_coincidence_sum(cat, basis4):
    assert expected_trace_sq(basis4, cat, 50, 2) == pytest.approx(coincidence_sum(basis4, cat, 2), abs=1e-12)
    assert coincidence_sum(basis4, cat, 2) == pytest.approx(0.36, abs=1e-12)
    assert diagonal_sum(enumerate_linear(cat.M, 2)) == pytest.approx(0.2, abs=1e-15)


def test_expected_monotone_and_bounded(cat):
    b = build_eigenbasis(N8)
    vals = [expected_trace_sq(b, cat, q, 3) for q in (0, 0.1, 0.3, 1, 3)]
    assert all(a >= c - 1e-12 for a, c in zip(vals, vals[1:]))
    diag = diagonal_sum(enumerate_linear(cat.M, 3))
    assert vals[-1] >= diag - 1e-12 and vals[0] <= 1 + 1e-12


def test_monte_carlo_frozen(cat, basis4):
    mean, se = monte_carlo_trace_sq(EnsembleConfig(N4, 20000, seed=0), cat, basis4)
    assert mean == pytest.approx(0.35913718, abs=1e-7)
    assert se == pytest.approx(0.00196636, abs=1e-7)


@pytest.mark.parametrize("q,n", [(1, 2), (2, 3), (1, 4)])
def test_monte_carlo_within_three_se(cat, q, n):
    b = build_eigenbasis(N8)
    cfg = EnsembleConfig(N8, 4000, seed=11, q=q, n=n)
    mean, se = monte_carlo_trace_sq(cfg, cat, b)
    assert abs(mean - expected_trace_sq(b, cat, q, n)) < 3 * se


def test_diophantine_golden():
    out = diophantine_check([1.0, (1 + math.sqrt(5)) / 2], 1, 100)
    assert out["score"] == pytest.approx(1.1458980337503153, abs=1e-12)
    assert out["passed"]


def test_diophantine_rational_fails():
    assert not diophantine_check([1.0, 0.5], 1, 20)["passed"]


def test_variance_bound(cat):
    b = build_eigenbasis(N8)
    pts = enumerate_linear(cat.M, 2).points
    out = variance_bound_check(b, cat, pts[1], pts[3], 2)
    assert out["min_ratio"] == pytest.approx(6.0, abs=1e-9)


def test_nondiophantine_rate_monotone(cat):
    pts = enumerate_linear(cat.M, 2).points
    rows = nondiophantine_rate(EnsembleConfig(N8, 300), cat, pts[1], pts[3], [0.5, 1, 2, 4, 8, 16])
    p = [r["probability"] for r in rows]
    assert all(a >= c for a, c in zip(p, p[1:]))
    assert p[-1] == 0.0


def test_moments_stable(basis4):
    out = moment_check(basis4, 0.02, 4, 4000)
    assert out["moments"][0]["moment"] == 1.0
    assert all(r["stable"] for r in out["moments"])
