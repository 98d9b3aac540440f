"""Topological pressure of -sigma log J^u from periodic-orbit sums."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .errors import OrbitError
from .orbits import PeriodicOrbitSet, periodic_points, unstable_frame
from .torus import AnosovMap, check_hyperbolic, hyperbolic_eigendata


def orbit_log_jacobians(A: AnosovMap, orbits: PeriodicOrbitSet) -> np.ndarray:
    """log of J^u(x) ... J^u(A^{n-1} x) at every period-n point."""
    if A.is_linear:
        return np.full(len(orbits), orbits.n * math.log(abs(A.mu)))
    return unstable_frame(A, orbits).orbit_log_jac


def pressure_estimate(A: AnosovMap, sigma: float, n: int,
                      orbits: PeriodicOrbitSet | None = None) -> float:
    """(1/n) log sum_{A^n x = x} exp(-sigma log J^u_n(x))."""
    if n < 1:
        raise ValueError("n must be >= 1")
    orbits = periodic_points(A, n) if orbits is None else orbits
    if len(orbits) == 0:
        raise OrbitError(f"no period-{n} points")
    logj = orbit_log_jacobians(A, orbits)
    return float(logsumexp(-sigma * logj) / n)


def pressure_curve(A: AnosovMap, sigmas, n: int) -> np.ndarray:
    orbits = periodic_points(A, n)
    logj = orbit_log_jacobians(A, orbits)
    return np.array([logsumexp(-s * logj) / n for s in np.asarray(sigmas, dtype=float)])


def linear_pressure_closed_form(M, sigma: float) -> float:
    """(1 - sigma) log|mu| for the linear map with expanding eigenvalue mu."""
    mu, _, _ = hyperbolic_eigendata(check_hyperbolic(M))
    return (1.0 - sigma) * math.log(abs(mu))


def rate_thresholds(M) -> tuple[float, float]:
    """(exp(5/2 P), exp(1/2 P)) with P = P(-2 log J^u) of the linear map."""
    p2 = linear_pressure_closed_form(M, 2.0)
    return math.exp(2.5 * p2), math.exp(0.5 * p2)


def pressure_table(A: AnosovMap, sigmas, ns) -> list[dict]:
    """Rows (n, sigma, estimate, closed_form, gap); closed form is of the
    linear part of ``A``."""
    rows = []
    for n in ns:
        est = pressure_curve(A, sigmas, n)
        for s, e in zip(sigmas, est):
            cf = linear_pressure_closed_form(A.M, s)
            rows.append({"n": int(n), "sigma": float(s), "estimate": float(e),
                         "closed_form": cf, "gap": float(e) - cf})
    return rows
