import math

import numpy as np
import pytest

from circext.torus import birkhoff_sum, check_hyperbolic, complexified_sup_norm, mod1
from circext.trigpoly import TrigPoly


def test_cos_coefficients():
    f = TrigPoly.cos((1, 0), 0.5)
    assert f.coefficient((1, 0)) == pytest.approx(0.25)
    assert f.coefficient((-1, 0)) == pytest.approx(0.25)
    assert f.is_real()


def test_evaluation_matches_formula(rng):
    f = TrigPoly.cos((1, 2), 3.0) + TrigPoly.sin((0, 1), 1.5)
    x = rng.random((50, 2))
    ref = 3 * np.cos(2 * np.pi * (x[:, 0] + 2 * x[:, 1])) + 1.5 * np.sin(2 * np.pi * x[:, 1])
    assert np.allclose(f.real_values(x), ref, atol=1e-13)


def test_duplicates_merge_and_zeros_drop():
    f = TrigPoly([[1, 0], [1, 0], [0, 1]], [1.0, -1.0, 2.0])
    assert len(f) == 1
    assert f == TrigPoly.exp((0, 1), 2.0)


def test_product_and_json_roundtrip():
    f = TrigPoly.exp((1, 0)) * TrigPoly.exp((0, -1), 2.0)
    assert f == TrigPoly.exp((1, -1), 2.0)
    g = TrigPoly.cos((2, 1), 0.3)
    assert TrigPoly.from_json(g.to_json()) == g


def test_check_hyperbolic_rejects():
    with pytest.raises(ValueError):
        check_hyperbolic([[1, 1], [0, 1]])
    with pytest.raises(ValueError):
        check_hyperbolic([[2, 0], [0, 1]])


def test_cat_eigendata(cat):
    assert cat.mu == pytest.approx((3 + math.sqrt(5)) / 2, abs=1e-12)
    assert cat.volume_preserving


def test_shear_is_volume_preserving(shear):
    assert shear.volume_preserving
    assert not shear.is_linear


def test_inverse(shear, rng):
    x = rng.random((20, 2))
    y = shear(x)
    d = mod1(shear.inverse(y) - x + 0.5) - 0.5
    assert np.abs(d).max() < 1e-12


def test_birkhoff_sum_zero_tau(cat, rng):
    assert np.all(birkhoff_sum(cat, TrigPoly.zero(), rng.random((5, 2)), 4) == 0)


def test_complexified_sup_norm_dominates(rng):
    f = TrigPoly.cos((1, 1), 1.0) + TrigPoly.exp((2, -1), 0.5j)
    r = 0.05
    x = rng.random((200, 2)) + 1j * rng.uniform(-r, r, (200, 2))
    vals = np.abs(sum(c * np.exp(2j * np.pi * (x @ a)) for a, c in zip(f.freqs, f.coeffs)))
    assert vals.max() <= complexified_sup_norm(f, r) + 1e-12
