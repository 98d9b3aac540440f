from fractions import Fraction

import numpy as np
import pytest

from circext.orbits import (count_by_weight, enumerate_linear, int_matrix_power, max_safe_period,
                            orbit_partition, orbit_trace_sum, periodic_point_count, periodic_points,
                            unstable_frame)
from circext.torus import CAT, mod1


@pytest.mark.parametrize("n,count", [(1, 1), (2, 5), (3, 16), (4, 45), (5, 121), (8, 2205),
                                     (10, 15125), (12, 103680)])
def test_periodic_point_counts(n, count):
    assert periodic_point_count(CAT, n) == count


def test_int_matrix_power_is_exact():
    # Fibonacci entries
    assert int_matrix_power(CAT, 10) == [[10946, 6765], [6765, 4181]]


def test_max_safe_period():
    assert max_safe_period(CAT) == 44


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
def test_enumeration_is_complete_and_periodic(cat, n):
    orb = enumerate_linear(cat.M, n)
    assert len(orb) == periodic_point_count(cat.M, n)
    y = cat.iterate(orb.points, n)
    d = mod1(y - orb.points + 0.5) - 0.5
    assert np.abs(d).max() < 1e-9
    assert orb.exact_weight == len(orb)


@pytest.mark.parametrize("n", range(1, 9))
def test_exact_trace_identity(n):
    assert enumerate_linear(CAT, n).exact_weight_sum() == Fraction(1)


def test_period_two_points():
    orb = enumerate_linear(CAT, 2)
    got = sorted(tuple(p) for p in orb.numerators.tolist())
    assert got == [(0, 0), (1, 2), (2, 4), (3, 1), (4, 3)]


def test_orbit_partition_period_two(cat):
    labels = orbit_partition(cat, enumerate_linear(cat.M, 2))
    sizes = sorted(np.bincount(labels).tolist())
    assert sizes == [1, 2, 2]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_refined_counts_match_linear(shear, n):
    orb = periodic_points(shear, n)
    assert len(orb) == periodic_point_count(shear.M, n)
    d = mod1(shear.iterate(orb.points, n) - orb.points + 0.5) - 0.5
    assert np.abs(d).max() < 1e-10


def test_refined_period_eight(shear):
    assert len(periodic_points(shear, 8)) == 2205


@pytest.mark.parametrize("n,ref", [(1, -0.94088), (2, 0.16731 + 0.71550j),
                                   (3, -0.99670 + 0.00084j), (4, -0.07947 - 0.32101j)])
def test_perturbed_orbit_sums(shear, tau, n, ref):
    assert abs(orbit_trace_sum(shear, tau, 1, n) - ref) < 2e-5


def test_linear_weights_constant(cat):
    c = count_by_weight(enumerate_linear(cat.M, 3))
    assert dict(c) == {16.0: 16}


def test_unstable_frame_linear(cat):
    fr = unstable_frame(cat, enumerate_linear(cat.M, 2))
    assert np.allclose(fr.jac, cat.mu, atol=1e-12)


def test_unstable_frame_shear_close_to_linear(shear):
    fr = unstable_frame(shear, periodic_points(shear, 3))
    assert np.all(np.abs(fr.orbit_log_jac / 3 - np.log(shear.mu)) < 0.05)

