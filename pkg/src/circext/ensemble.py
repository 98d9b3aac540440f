"""Gaussian random trigonometric polynomials on T^2.

P_N = sum_j X_j phi_j over the real Laplace eigenfunctions phi_j with
eigenvalue 4 pi^2 |a|^2 <= N, X_j independent standard normals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError, NumericalGateError
from .orbits import PeriodicOrbitSet, periodic_points
from .torus import AnosovMap
from .trigpoly import TrigPoly, sum_polys

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LaplaceEigenbasis:
    """Constant, then sqrt2 cos / sqrt2 sin of 2 pi a.x for each
    lexicographically positive a, ordered by eigenvalue then a."""

    N: float
    alphas: np.ndarray
    kinds: tuple[str, ...]
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.kinds)

    @property
    def functions(self) -> list[TrigPoly]:
        out = []
        for a, k in zip(self.alphas, self.kinds):
            if k == "const":
                out.append(TrigPoly.constant(1.0))
            elif k == "cos":
                out.append(TrigPoly.cos(a, SQRT2))
            else:
                out.append(TrigPoly.sin(a, SQRT2))
        return out

    def values(self, x) -> np.ndarray:
        """phi_j(x) for points of shape (..., 2); result (..., dim)."""
        x = np.asarray(x, dtype=float)
        ph = 2 * math.pi * (x @ self.alphas.T.astype(float))
        kinds = np.array(self.kinds)
        out = np.where(kinds == "cos", SQRT2 * np.cos(ph), SQRT2 * np.sin(ph))
        return np.where(kinds == "const", 1.0, out)

    def combine(self, X) -> TrigPoly:
        """sum_j X_j phi_j as a TrigPoly."""
        X = np.asarray(X, dtype=float)
        if X.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coefficients, got shape {X.shape}")
        return sum_polys(f * float(c) for f, c in zip(self.functions, X))

    def gram(self) -> np.ndarray:
        """L2 Gram matrix by exact grid quadrature."""
        deg = int(np.abs(self.alphas).max(initial=0))
        G = 2 * deg + 2
        t = np.arange(G) / G
        X = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
        V = self.values(X)
        return V.T @ V / len(X)


def build_eigenbasis(N: float) -> LaplaceEigenbasis:
    if N < 0:
        raise ValueError("N must be >= 0")
    R = math.sqrt(N) / (2 * math.pi)
    m = int(math.floor(R)) + 1
    pts = [(a1, a2) for a1 in range(0, m + 1) for a2 in range(-m, m + 1)
           if (a1 > 0 or a2 > 0) and 4 * math.pi**2 * (a1 * a1 + a2 * a2) <= N * (1 + 1e-12)]
    pts.sort(key=lambda a: (a[0] ** 2 + a[1] ** 2, a))
    alphas = [(0, 0)]
    kinds = ["const"]
    for a in pts:
        alphas += [a, a]
        kinds += ["cos", "sin"]
    alphas = np.array(alphas, dtype=np.int64)
    ev = 4 * math.pi**2 * (alphas**2).sum(axis=1).astype(float)
    basis = LaplaceEigenbasis(float(N), alphas, tuple(kinds), ev)
    err = float(np.abs(basis.gram() - np.eye(basis.dim)).max())
    if err > 1e-10:
        raise NumericalGateError(f"eigenbasis Gram matrix deviates from identity by {err:.3g}")
    return basis


@dataclass(frozen=True)
class EnsembleConfig:
    N: float
    samples: int
    seed: int = 0
    q: int = 1
    n: int = 2

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.n < 1:
            raise ConfigError("period n must be >= 1")
        if self.N < 0:
            raise ConfigError("N must be >= 0")


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for sample ``index``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def sample_coefficients(basis: LaplaceEigenbasis, seed: int, count: int, start: int = 0) -> np.ndarray:
    """(count, dim) standard normals; row i depends only on (seed, start+i)."""
    return np.stack([sample_rng(seed, start + i).standard_normal(basis.dim)
                     for i in range(count)]) if count else np.zeros((0, basis.dim))


def sample(basis: LaplaceEigenbasis, rng: np.random.Generator) -> TrigPoly:
    return basis.combine(rng.standard_normal(basis.dim))


def birkhoff_matrix(basis: LaplaceEigenbasis, A: AnosovMap, x, n: int) -> np.ndarray:
    """phi_j^(n)(x) for every basis function; shape (..., dim)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    y = np.asarray(x, dtype=float)
    out = np.zeros(y.shape[:-1] + (basis.dim,))
    for _ in range(n):
        out += basis.values(y)
        y = A(y)
    return out


def sigma2_pair(basis: LaplaceEigenbasis, A: AnosovMap, x, y, n: int) -> float:
    d = birkhoff_matrix(basis, A, x, n) - birkhoff_matrix(basis, A, y, n)
    return float(np.sum(d * d))


def _orbit_data(basis, A, n, orbits):
    orbits = periodic_points(A, n) if orbits is None else orbits
    return orbits, birkhoff_matrix(basis, A, orbits.points, n), 1.0 / orbits.weights


def expected_trace_sq(basis: LaplaceEigenbasis, A: AnosovMap, q: float, n: int,
                      orbits: PeriodicOrbitSet | None = None, chunk: int = 2048) -> float:
    """sum_{x,x'} exp(-2 pi^2 q^2 sigma_n^2(x,x')) / (|det_x| |det_x'|)."""
    orbits, Phi, u = _orbit_data(basis, A, n, orbits)
    c = 2 * math.pi**2 * q * q
    total = 0.0
    for lo in range(0, len(u), chunk):
        d2 = cdist(Phi[lo:lo + chunk], Phi, "sqeuclidean")
        total += float(u[lo:lo + chunk] @ np.exp(-c * d2) @ u)
    return total


def diagonal_sum(orbits: PeriodicOrbitSet) -> float:
    return math.fsum(orbits.weights ** -2.0)


def coincidence_sum(basis: LaplaceEigenbasis, A: AnosovMap, n: int,
                    orbits: PeriodicOrbitSet | None = None, tol: float = 1e-18) -> float:
    """Limit of expected_trace_sq as q -> infinity: the sum over pairs whose
    Birkhoff vectors coincide (sigma^2 = 0).  Points on the same orbit
    always coincide, so this exceeds the diagonal sum in general."""
    orbits, Phi, u = _orbit_data(basis, A, n, orbits)
    d2 = cdist(Phi, Phi, "sqeuclidean")
    return float(u @ (d2 <= tol).astype(float) @ u)


def trace_samples(basis: LaplaceEigenbasis, A: AnosovMap, q: float, n: int, X: np.ndarray,
                  orbits: PeriodicOrbitSet | None = None) -> np.ndarray:
    """Orbit trace sums S(n, q) for each coefficient row of X."""
    orbits, Phi, u = _orbit_data(basis, A, n, orbits)
    tau_n = X @ Phi.T
    return np.exp(2j * math.pi * q * tau_n) @ u


def monte_carlo_trace_sq(config: EnsembleConfig, A: AnosovMap,
                         basis: LaplaceEigenbasis | None = None) -> tuple[float, float]:
    """Sample mean of |S(n,q)|^2 and its standard error."""
    basis = build_eigenbasis(config.N) if basis is None else basis
    X = sample_coefficients(basis, config.seed, config.samples)
    v = np.abs(trace_samples(basis, A, config.q, config.n, X)) ** 2
    if len(v) < 2:
        return float(v.mean()), float("nan")
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def sup_norm_majorants(basis: LaplaceEigenbasis, X: np.ndarray, r: float) -> np.ndarray:
    """sum_a |c_a| exp(2 pi r |a|_1) for each sample row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    kinds = np.array(basis.kinds)
    l1 = np.abs(basis.alphas).sum(axis=1)
    const = np.abs(X[:, kinds == "const"]).sum(axis=1)
    ci, si = np.nonzero(kinds == "cos")[0], np.nonzero(kinds == "sin")[0]
    amp = np.hypot(X[:, ci], X[:, si]) * SQRT2
    return const + amp @ np.exp(2 * math.pi * r * l1[ci])


def moment_check(basis: LaplaceEigenbasis, r: float, p_max: int, samples: int, seed: int = 0) -> dict:
    """Empirical E ||P_N||_{r,inf}^p for even p <= p_max with a running-mean
    drift diagnostic over the last quartile."""
    X = sample_coefficients(basis, seed, samples)
    s = sup_norm_majorants(basis, X, r)
    rows = []
    for p in range(0, p_max + 1, 2):
        v = s**p
        run = np.cumsum(v) / np.arange(1, len(v) + 1)
        tail = run[3 * len(run) // 4:]
        drift = float((tail.max() - tail.min()) / run[-1]) if run[-1] else 0.0
        rows.append({"p": p, "moment": float(run[-1]), "drift": drift, "stable": drift < 0.1})
    return {"r": r, "samples": samples, "moments": rows}


def _alpha_grid(alpha_max: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(-alpha_max, alpha_max + 1)
    a1, a2 = np.meshgrid(t, t, indexing="ij")
    a = np.stack([a1.ravel(), a2.ravel()], axis=1)
    l1 = np.abs(a).sum(axis=1)
    keep = (l1 >= 2) & (l1 <= alpha_max)
    return a[keep], l1[keep]


def diophantine_check(v, m0: float, alpha_max: int = 200) -> dict:
    """min over 2 <= |a|_1 <= alpha_max of |a.v| |a|_1^m0; passes iff >= 1."""
    if alpha_max < 2:
        raise ValueError("alpha_max must be >= 2")
    a, l1 = _alpha_grid(alpha_max)
    s = np.abs(a @ np.asarray(v, dtype=float)) * l1.astype(float) ** m0
    i = int(np.lexsort((l1, s))[0])
    return {"score": float(s[i]), "passed": bool(s[i] >= 1.0), "alpha": a[i].tolist(),
            "alpha_max": alpha_max, "m0": m0}


def variance_bound_check(basis: LaplaceEigenbasis, A: AnosovMap, x, y, n: int,
                         alpha_max: int = 50) -> dict:
    """min over 2 <= |a|_1 <= alpha_max of sigma^2(a) / |a|_1^2 where
    sigma^2(a) = sum_j (a1 phi_j^(n)(x) + a2 phi_j^(n)(y))^2."""
    u = birkhoff_matrix(basis, A, x, n)
    v = birkhoff_matrix(basis, A, y, n)
    if not (np.any(u) or np.any(v)):
        raise NumericalGateError("both Birkhoff vectors vanish; variance bound is degenerate")
    Q = np.array([[u @ u, u @ v], [u @ v, v @ v]])
    a, l1 = _alpha_grid(alpha_max)
    af = a.astype(float)
    s2 = np.einsum("ki,ij,kj->k", af, Q, af)
    ratio = s2 / l1.astype(float) ** 2
    i = int(np.argmin(ratio))
    out = {"min_ratio": float(ratio[i]), "alpha": a[i].tolist(), "gram": Q.tolist()}
    if not out["min_ratio"] > 0:
        raise NumericalGateError(f"variance lower bound fails at alpha={out['alpha']}")
    return out


def nondiophantine_rate(config: EnsembleConfig, A: AnosovMap, x, y, m0_range,
                        alpha_max: int = 50, basis: LaplaceEigenbasis | None = None) -> list[dict]:
    """Fraction of samples whose (tau^(n)(x), tau^(n)(y)) fails the
    diophantine check at each exponent m0, next to 2^{-m0}."""
    basis = build_eigenbasis(config.N) if basis is None else basis
    X = sample_coefficients(basis, config.seed, config.samples)
    V = np.stack([X @ birkhoff_matrix(basis, A, x, config.n),
                  X @ birkhoff_matrix(basis, A, y, config.n)], axis=1)
    a, l1 = _alpha_grid(alpha_max)
    af, lf = a.astype(float), l1.astype(float)
    rows = []
    for m0 in m0_range:
        fails = 0
        for lo in range(0, len(V), 256):
            s = np.abs(V[lo:lo + 256] @ af.T) * lf**m0
            fails += int(np.sum(s.min(axis=1) < 1.0))
        rows.append({"m0": m0, "probability": fails / len(V), "reference": 2.0**-m0})
    return rows
