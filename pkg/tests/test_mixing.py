import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad

from circext.aniso import WeightScheme
from circext.ensemble import build_eigenbasis
from circext.mixing import (bump, bump_square, correlation_direct, correlation_direct_matrix,
                            correlation_spectral, correlation_spectral_series, decay_rate_fit,
                            default_observables, dirichlet_box_search, frequency_average,
                            threshold_sweep)
from circext.operator import assemble, spectrum
from circext.trigpoly import TrigPoly

E = TrigPoly.exp


def test_direct_q0_orthogonality(cat):
    a = np.array([1, 0])
    for N in range(4):
        target = -(np.linalg.matrix_power(cat.M.T, N) @ a)
        assert abs(correlation_direct(cat, TrigPoly.zero(), 0, E(a), E(target), N) - 1) < 1e-12
        assert abs(correlation_direct(cat, TrigPoly.zero(), 0, E(a), E((0, -1)), N + 1)) < 1e-12


def test_constant_against_zero_mean(cat, tau):
    assert abs(correlation_direct(cat, tau, 0, TrigPoly.constant(1.0), E((1, 1)), 3)) < 1e-12


def test_spectral_n0_and_constants(cat, tau, scheme):
    op = assemble(cat, tau, 0, scheme, 6)
    for N in range(5):
        assert abs(correlation_spectral(op, E((0, 0)), E((0, 0)), N) - 1) < 1e-12
    op1 = assemble(cat, tau, 1, scheme, 6)
    assert abs(correlation_spectral(op1, E((1, 0)), E((-1, 0)), 0) - 1) < 1e-12


@pytest.mark.parametrize("q", [0, 1, 3])
def test_two_routes_agree(cat, tau, scheme, q):
    fs = [E((0, 0)), E((1, 0)), E((0, 1))]
    gs = [E((0, 0)), E((-1, 0)), E((0, -1))]
    op = assemble(cat, tau, q, scheme, 16)
    spec = correlation_spectral_series(op, fs, gs, 8)
    for N in range(9):
        direct = correlation_direct_matrix(cat, tau, q, fs, gs, N)
        assert np.abs(direct - spec[N]).max() < 1e-6


def test_two_routes_agree_perturbed(shear, tau):
    op = assemble(shear, tau, 1, WeightScheme(shear.M, 0.02), 12)
    f, g = E((1, 0)), E((-1, 0))
    for N in range(5):
        assert abs(correlation_direct(shear, tau, 1, f, g, N) - correlation_spectral(op, f, g, N)) < 1e-6


def test_decay_fit_synthetic():
    N = np.arange(30)
    assert decay_rate_fit(0.5**N).base == pytest.approx(0.5, abs=1e-6)
    assert decay_rate_fit(0.5**N * np.cos(N)).base == pytest.approx(0.5, abs=0.05)


def test_decay_fit_noise_floor():
    fit = decay_rate_fit(np.full(20, 1e-15))
    assert fit.status == "below noise floor" and math.isnan(fit.base)
    with pytest.raises(ValueError):
        decay_rate_fit(np.ones(5))


def test_decay_fit_tracks_spectral_radius(cat, tau, scheme):
    # f prepared in the leading eigenspace: C(N) = lambda^N exactly
    op = assemble(cat, tau, 1, scheme, 12)
    w, V = np.linalg.eig(op.T)
    k = int(np.argmax(np.abs(w)))
    v = V[:, k]
    series = [np.vdot(np.eye(len(v))[0], np.linalg.matrix_power(op.T, N) @ v) for N in range(20)]
    rho = spectrum(op, 2).spectral_radius
    gap = rho - np.sort(np.abs(w))[-2]
    assert gap >= 0.1
    assert decay_rate_fit(np.array(series) / max(abs(series[0]), 1e-300)).base == pytest.approx(rho, abs=0.05)


@pytest.mark.parametrize("angles,D,Q,n", [([Fraction(1, 2)], 1, 2, 2), ([Fraction(3, 10)], 1, 10, 10),
                                         ([0.5], 1, 2, 2), ([0.3], 1, 10, 10)])
def test_dirichlet_examples(angles, D, Q, n):
    assert dirichlet_box_search(angles, D, Q) == n


def test_dirichlet_two_angles():
    angles = [(math.sqrt(5) - 1) / 2, math.sqrt(2) - 1]
    n = dirichlet_box_search(angles, 1, 5)
    assert n <= 25
    assert all(abs(n * a - round(n * a)) <= 0.2 for a in angles)


def test_bump_square_hat_zero():
    ref = quad(lambda x: math.exp(-1 / (1 - x * x)), -1, 1)[0] ** 2
    assert ref == pytest.approx(0.1971, abs=1e-4)
    assert bump_square().hat(np.array([0.0]))[0] == pytest.approx(ref, abs=1e-6)


def test_bump_support():
    assert bump(np.array([-1.0, 1.0, 1.5]))[:3].max() == 0


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("T", [8, 16, 32])
def test_frequency_average_holds(cat, tau, n, T):
    rep = frequency_average(cat, tau, n, T)
    assert rep["holds"]


def test_frequency_average_tau_zero(cat):
    rep = frequency_average(cat, TrigPoly.zero(), 2, 8)
    assert rep["diagonal"] == pytest.approx(0.2, abs=1e-15)
    assert rep["holds"]


def test_frequency_average_small_t():
    with pytest.raises(ValueError):
        frequency_average(None, TrigPoly.zero(), 2, 3)


def test_threshold_sweep_small(cat):
    basis = build_eigenbasis(4 * math.pi**2)
    out = threshold_sweep(cat, basis, 2, seed=0, q_max=3)
    assert len(out["rows"]) == 2
    assert out["threshold_upper"] == pytest.approx(0.618034, abs=1e-6)
    assert sum(out["histogram"]["counts"]) == 2


def test_default_observables():
    fs, gs = default_observables()
    assert len(fs) == len(gs) == 3
