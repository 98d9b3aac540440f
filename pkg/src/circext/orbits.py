"""Periodic points of toral maps and periodic-orbit sums.

Period-n points of the linear map are the solutions of (M^n - I) x in Z^2 and
are enumerated exactly with integer arithmetic.  For a perturbed map they are
continued by Newton's method from the linear seeds.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .errors import OrbitError
from .torus import AnosovMap, birkhoff_sum, mod1, wrap
from .trigpoly import TrigPoly

log = logging.getLogger(__name__)

_INT64_SAFE = 2**62
DEFAULT_MAX_POINTS = 20_000_000


@dataclass
class PeriodicOrbitSet:
    """All period-n points of a map with their orbit weights.

    ``weights[i] = |det(I - D A^n)|`` at ``points[i]``.  For the linear map
    ``exact_weight`` holds that common integer and ``numerators`` the exact
    rational coordinates ``points * exact_weight``.
    """

    n: int
    points: np.ndarray
    weights: np.ndarray
    exact_weight: int | None = None
    numerators: np.ndarray | None = None
    jac_u: np.ndarray | None = None
    _birkhoff: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    def birkhoff(self, A: AnosovMap, tau: TrigPoly) -> np.ndarray:
        """tau^(n) at every point (cached per roof function)."""
        k = tau.key()
        if k not in self._birkhoff:
            self._birkhoff[k] = birkhoff_sum(A, tau, self.points, self.n)
        return self._birkhoff[k]

    def exact_weight_sum(self, power: int = 1) -> Fraction:
        """sum over points of 1/weight**power as an exact rational.

        Only available when weights are integers (the linear case)."""
        if self.exact_weight is None:
            raise ValueError("exact weights are only known for the linear map")
        return Fraction(len(self), self.exact_weight**power)

    def to_csv(self, tau: TrigPoly | None = None, A: AnosovMap | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "x1", "x2", "weight", "jac_u", "birkhoff"])
        bs = self.birkhoff(A, tau) if (tau is not None and A is not None) else None
        for i, (x1, x2) in enumerate(self.points):
            ju = "" if self.jac_u is None else repr(float(self.jac_u[i]))
            b = "" if bs is None else repr(float(bs[i]))
            w.writerow([self.n, repr(float(x1)), repr(float(x2)), repr(float(self.weights[i])), ju, b])
        return buf.getvalue()


@dataclass(frozen=True)
class UnstableFrame:
    """Unit unstable vectors u(x), J^u(x) = |D_x A u(x)| and the product of
    J^u along each period-n orbit."""

    u: np.ndarray
    jac: np.ndarray
    orbit_log_jac: np.ndarray

    @property
    def orbit_jac(self) -> np.ndarray:
        return np.exp(self.orbit_log_jac)


def int_matrix_power(M, n: int) -> list[list[int]]:
    """Exact M**n with Python integers."""
    a, b, c, d = (int(M[0][0]), int(M[0][1]), int(M[1][0]), int(M[1][1]))
    r = [[1, 0], [0, 1]]
    base = [[a, b], [c, d]]
    k = n
    while k:
        if k & 1:
            r = _mul2(r, base)
        base = _mul2(base, base)
        k >>= 1
    return r


def _mul2(x, y):
    return [[x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]],
            [x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]]]


def max_safe_period(M) -> int:
    """Largest n for which every entry of M**n - I fits comfortably in int64."""
    n = 0
    while True:
        P = int_matrix_power(M, n + 1)
        if max(abs(v) + 1 for row in P for v in row) >= _INT64_SAFE:
            return n
        n += 1


def periodic_point_count(M, n: int) -> int:
    """|det(M^n - I)|, computed exactly."""
    P = int_matrix_power(M, n)
    return abs((P[0][0] - 1) * (P[1][1] - 1) - P[0][1] * P[1][0])


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, s, t = _ext_gcd(b, a % b)
    return g, t, s - (a // b) * t


def _hermite_diagonal(B) -> tuple[int, int]:
    """Diagonal (h11, h22) of a lower-triangular column Hermite form of B.

    The box {0 <= i < h11} x {0 <= j < h22} is a transversal of Z^2 / B Z^2.
    """
    (a, b), (c, d) = B
    if a == 0 and b == 0:
        raise OrbitError("M^n - I is singular")
    g, s, t = _ext_gcd(a, b)
    h22 = abs(a * d - b * c) // g
    return g, h22


def enumerate_linear(M, n: int, max_points: int = DEFAULT_MAX_POINTS) -> PeriodicOrbitSet:
    """All x in [0,1)^2 with (M^n - I) x in Z^2, by exact integer arithmetic.

    x = adj(B) k / det(B) where k runs over a transversal of Z^2 / B Z^2 and
    B = M^n - I.  Points are returned in lexicographic order.
    """
    if n < 1:
        raise ValueError("period n must be >= 1")
    M = np.asarray(M)
    P = int_matrix_power(M.tolist(), n)
    if max(abs(v) + 1 for row in P for v in row) >= _INT64_SAFE:
        raise OverflowError(
            f"M^{n} overflows 64-bit integers; the largest safe period for this matrix is "
            f"n={max_safe_period(M.tolist())}")
    B = [[P[0][0] - 1, P[0][1]], [P[1][0], P[1][1] - 1]]
    det = B[0][0] * B[1][1] - B[0][1] * B[1][0]
    if det == 0:
        raise OrbitError(f"M^{n} - I is singular: M is not hyperbolic")
    D = abs(det)
    if D > max_points:
        raise ValueError(f"{D} period-{n} points exceed max_points={max_points}")
    h11, h22 = _hermite_diagonal(B)
    if h11 * h22 != D:
        raise OrbitError("Hermite form inconsistent with determinant")
    adj = [[B[1][1], -B[0][1]], [-B[1][0], B[0][0]]]
    if max(abs(v) for row in adj for v in row) * max(h11, h22) >= _INT64_SAFE:
        raise OverflowError(
            f"exact enumeration at n={n} overflows 64-bit integers; "
            f"max safe n={max_safe_period(M.tolist())}")
    i = np.repeat(np.arange(h11, dtype=np.int64), h22)
    j = np.tile(np.arange(h22, dtype=np.int64), h11)
    sgn = 1 if det > 0 else -1
    num1 = (sgn * (adj[0][0] * i + adj[0][1] * j)) % D
    num2 = (sgn * (adj[1][0] * i + adj[1][1] * j)) % D
    order = np.lexsort((num2, num1))
    nums = np.stack([num1[order], num2[order]], axis=1)
    points = nums.astype(float) / D
    weights = np.full(D, float(D))
    return PeriodicOrbitSet(n=n, points=points, weights=weights, exact_weight=D, numerators=nums)


def _check_collisions(points: np.ndarray, min_sep: float = 1e-8) -> None:
    if len(points) < 2:
        return
    tree = cKDTree(np.clip(points, 0.0, np.nextafter(1.0, 0.0)), boxsize=1.0)
    pairs = tree.query_pairs(min_sep, output_type="ndarray")
    if len(pairs):
        a, b = pairs[0]
        raise OrbitError(
            f"refined points {a} and {b} collided at {points[a].tolist()}: "
            "perturbation too large for continuation from the linear orbits")


def _linear_orbit(M, seeds: PeriodicOrbitSet, n: int) -> np.ndarray:
    """Exact orbit x, Mx, ..., M^{n-1}x of every seed, shape (m, n, 2)."""
    D = seeds.exact_weight
    nums = seeds.numerators.astype(object) if D * 4 >= _INT64_SAFE else seeds.numerators.copy()
    Mi = np.asarray(M, dtype=np.int64)
    out = np.empty((len(nums), n, 2))
    for k in range(n):
        out[:, k] = np.asarray(nums, dtype=float) / D
        nums = (nums @ Mi.T) % D
    return out


def refine_newton(A: AnosovMap, seeds: PeriodicOrbitSet, n: int | None = None,
                  tol: float = 1e-12, max_iter: int = 50, chunk: int = 4096) -> PeriodicOrbitSet:
    """Continue linear periodic points to the perturbed map by Newton's method.

    Multiple shooting: the unknowns are the n points of the orbit and the
    equations are A(x_k) = x_{k+1} (mod Z^2), k = 0..n-1 cyclically.  Each
    residual is of the size of the perturbation, so reduction mod 1 is
    unambiguous even when A^n amplifies the perturbation beyond 1.
    Convergence means every residual is below ``tol``.
    """
    n = seeds.n if n is None else n
    if A.is_linear:
        return seeds
    if seeds.numerators is None:
        raise ValueError("seeds must come from enumerate_linear")
    orbit = _linear_orbit(A.M, seeds, n)
    m = len(orbit)
    x = np.empty((m, 2))
    eye = np.eye(2)
    nxt = np.roll(np.arange(n), -1)
    for lo in range(0, m, chunk):
        X = orbit[lo:lo + chunk].copy()
        c = len(X)
        resid = np.full(c, np.inf)
        for _ in range(max_iter):
            R = wrap(A(X) - X[:, nxt])
            resid = np.max(np.abs(R), axis=(1, 2))
            if np.all(resid < tol):
                break
            J = np.zeros((c, 2 * n, 2 * n))
            DA = A.jacobian(X)
            for k in range(n):
                J[:, 2 * k:2 * k + 2, 2 * k:2 * k + 2] = DA[:, k]
                j = nxt[k]
                J[:, 2 * k:2 * k + 2, 2 * j:2 * j + 2] -= eye
            delta = np.linalg.solve(J, -R.reshape(c, 2 * n, 1)).reshape(c, n, 2)
            X = mod1(X + delta)
        else:
            bad = lo + int(np.argmax(resid >= tol))
            raise OrbitError(
                f"Newton continuation diverged from seed {bad} at {seeds.points[bad].tolist()} "
                f"(residual {resid[bad - lo]:.3g}); epsilon too large for structural-stability continuation")
        x[lo:lo + c] = X[:, 0]
    x = mod1(x)
    _check_collisions(x)
    JN = A.jacobian_power(x, n)
    closure = np.max(np.abs(wrap(A.iterate(x, n) - x)), initial=0.0)
    if closure >= 1e-10:
        raise OrbitError(f"refined points fail the closure check |A^n x - x| = {closure:.3g}")
    weights = np.abs(np.linalg.det(eye - JN))
    if not np.all(weights > 0):
        raise OrbitError("non-hyperbolic periodic point (1 is an eigenvalue of D A^n)")
    order = np.lexsort((x[:, 1], x[:, 0]))
    return PeriodicOrbitSet(n=n, points=x[order], weights=weights[order])


_ORBIT_CACHE: dict = {}


def periodic_points(A: AnosovMap, n: int, tol: float = 1e-12) -> PeriodicOrbitSet:
    """Period-n points of ``A`` (cached per map and period)."""
    key = (A.key(), n, tol)
    hit = _ORBIT_CACHE.get(key)
    if hit is None:
        seeds = enumerate_linear(A.M, n)
        hit = seeds if A.is_linear else refine_newton(A, seeds, n, tol=tol)
        if len(_ORBIT_CACHE) > 64:
            _ORBIT_CACHE.clear()
        _ORBIT_CACHE[key] = hit
    return hit


def unstable_frame(A: AnosovMap, orbits: PeriodicOrbitSet, tol: float = 1e-10,
                   max_periods: int = 200) -> UnstableFrame:
    """Unstable directions at periodic points by forward cocycle iteration.

    Starting from the unstable eigenvector of M, the tangent vector is pushed
    along the orbit and renormalized; the base point is reset to the stored
    periodic point after each period so the iteration stays on the orbit.
    """
    x0 = orbits.points
    n = orbits.n
    v = np.broadcast_to(A.unstable, x0.shape).copy()
    for _ in range(max_periods):
        v_start = v
        y = x0
        for _k in range(n):
            w = (A.jacobian(y) @ v[..., None])[..., 0]
            v = w / np.linalg.norm(w, axis=1, keepdims=True)
            y = A(y)
        # compare directions up to sign
        cross = np.abs(v_start[:, 0] * v[:, 1] - v_start[:, 1] * v[:, 0])
        flip = np.sum(v * v_start, axis=1) < 0
        v[flip] = -v[flip]
        if np.max(cross, initial=0.0) < tol:
            break
    else:
        raise OrbitError(
            f"unstable direction did not converge in {max_periods} periods; "
            "map is outside the hyperbolic continuation regime")
    u = v
    Du = (A.jacobian(x0) @ u[..., None])[..., 0]
    jac = np.linalg.norm(Du, axis=1)
    log_prod = np.zeros(len(x0))
    y, w = x0, u
    for _k in range(n):
        Dw = (A.jacobian(y) @ w[..., None])[..., 0]
        nrm = np.linalg.norm(Dw, axis=1)
        log_prod += np.log(nrm)
        w = Dw / nrm[:, None]
        y = A(y)
    if not np.all(jac > 1.0):
        raise OrbitError("unstable jacobian <= 1 at some periodic point")
    orbits.jac_u = np.exp(log_prod)
    return UnstableFrame(u=u, jac=jac, orbit_log_jac=log_prod)


def orbit_trace_sum(A: AnosovMap, tau: TrigPoly, q: int, n: int,
                    orbits: PeriodicOrbitSet | None = None) -> complex:
    """sum over A^n x = x of exp(2 pi i q tau^(n)(x)) / |det(I - D_x A^n)|."""
    orbits = periodic_points(A, n) if orbits is None else orbits
    inv_w = 1.0 / orbits.weights
    if q == 0 or not len(tau):
        if q == 0 or tau.mean() == 0:
            return complex(math.fsum(inv_w), 0.0)
    phase = 2 * math.pi * q * orbits.birkhoff(A, tau)
    return complex(math.fsum(np.cos(phase) * inv_w), math.fsum(np.sin(phase) * inv_w))


def weight_sum(orbits: PeriodicOrbitSet, power: float = 1.0) -> float:
    """sum 1/weight**power (floating)."""
    return math.fsum(orbits.weights ** (-power))


def orbit_partition(A: AnosovMap, orbits: PeriodicOrbitSet, tol: float = 1e-9) -> np.ndarray:
    """Label each periodic point by the primitive orbit it lies on."""
    pts = orbits.points
    tree = cKDTree(np.clip(pts, 0.0, np.nextafter(1.0, 0.0)), boxsize=1.0)
    labels = np.full(len(pts), -1, dtype=np.int64)
    nxt = tree.query(np.clip(A(pts), 0.0, np.nextafter(1.0, 0.0)))[1]
    lab = 0
    for i in range(len(pts)):
        if labels[i] >= 0:
            continue
        j = i
        while labels[j] < 0:
            labels[j] = lab
            j = nxt[j]
        lab += 1
    return labels


def count_by_weight(orbits: PeriodicOrbitSet) -> Counter:
    return Counter(orbits.weights.tolist())
