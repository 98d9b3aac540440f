"""Torus dynamics: hyperbolic toral maps with analytic perturbations and
their circle extensions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trigpoly import TrigPoly

CAT = ((2, 1), (1, 1))

_SNAP = 1e-15


def mod1(x):
    """Reduce into [0, 1) with values within 1e-15 of an integer snapped to 0."""
    y = np.asarray(x, dtype=float)
    y = y - np.floor(y)
    y = np.where((y < _SNAP) | (y > 1.0 - _SNAP), 0.0, y)
    return y


def wrap(d):
    """Signed representative of ``d`` mod 1 in [-1/2, 1/2)."""
    d = np.asarray(d, dtype=float)
    return d - np.floor(d + 0.5)


def torus_dist(x, y) -> np.ndarray:
    """Euclidean distance on the flat torus."""
    return np.linalg.norm(wrap(np.asarray(x) - np.asarray(y)), axis=-1)


def hyperbolic_eigendata(M) -> tuple[float, np.ndarray, np.ndarray]:
    """Return (mu, u, s): the eigenvalue with |mu| > 1 and unit eigenvectors
    for the expanding and contracting eigenvalues of ``M``."""
    M = np.asarray(M, dtype=float)
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    disc = tr * tr - 4.0 * det
    if disc <= 0:
        raise ValueError(f"matrix {M.tolist()} is not hyperbolic")
    w, V = np.linalg.eig(M)
    w = w.real
    order = np.argsort(-np.abs(w))
    w, V = w[order], V[:, order].real
    if not abs(w[0]) > 1.0 > abs(w[1]):
        raise ValueError(f"matrix {M.tolist()} is not hyperbolic")
    u = V[:, 0] / np.linalg.norm(V[:, 0])
    s = V[:, 1] / np.linalg.norm(V[:, 1])
    # fix orientation for reproducibility
    if u[np.argmax(np.abs(u))] < 0:
        u = -u
    if s[np.argmax(np.abs(s))] < 0:
        s = -s
    return float(w[0]), u, s


def check_hyperbolic(M) -> np.ndarray:
    M = np.asarray(M)
    if M.shape != (2, 2):
        raise ValueError(f"M must be 2x2, got shape {M.shape}")
    if not np.all(np.equal(M, np.round(M))):
        raise ValueError("M must have integer entries")
    Mi = np.asarray(np.round(M), dtype=np.int64)
    det = int(Mi[0, 0] * Mi[1, 1] - Mi[0, 1] * Mi[1, 0])
    tr = int(Mi[0, 0] + Mi[1, 1])
    if abs(det) != 1:
        raise ValueError(f"|det M| must be 1, got det={det}")
    if abs(tr) <= 2:
        raise ValueError(f"M is not hyperbolic (trace {tr}, det {det})")
    return Mi


class AnosovMap:
    """``A(x) = M x + p(x) mod 1`` with ``M`` hyperbolic in GL2(Z) and ``p`` a
    pair of real trigonometric polynomials.

    ``volume_preserving`` is measured at construction: the Jacobian
    determinant must equal ``det M`` to 1e-10 on a 64 x 64 grid.
    """

    def __init__(self, M=CAT, perturbation: tuple[TrigPoly, TrigPoly] | None = None,
                 name: str | None = None):
        self.M = check_hyperbolic(M)
        self.M.setflags(write=False)
        self.Mf = self.M.astype(float)
        self.Minv = np.round(np.linalg.inv(self.Mf)).astype(np.int64)
        if perturbation is None:
            perturbation = (TrigPoly.zero(), TrigPoly.zero())
        p1, p2 = perturbation
        for comp in (p1, p2):
            if not comp.is_real():
                raise ValueError("perturbation components must be real-valued")
        self.p = (p1, p2)
        self.is_linear = len(p1) == 0 and len(p2) == 0
        self.mu, self.unstable, self.stable = hyperbolic_eigendata(self.Mf)
        self.det = int(round(np.linalg.det(self.Mf)))
        self.name = name or ("linear" if self.is_linear else "perturbed")
        self.volume_preserving = self._check_volume()

    def _check_volume(self, G: int = 64) -> bool:
        if self.is_linear:
            return True
        t = (np.arange(G) + 0.25) / G
        X = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
        dets = np.linalg.det(self.jacobian(X))
        return bool(np.max(np.abs(dets - self.det)) < 1e-10)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def cat(cls) -> AnosovMap:
        return cls(CAT, name="cat")

    @classmethod
    def sheared(cls, M=CAT, eps: float = 0.01, g: TrigPoly | None = None,
                axis: int = 0, name: str | None = None) -> AnosovMap:
        """``M`` composed with a shear.

        ``axis=0``: S(x) = (x1 + eps g(x2), x2); ``axis=1``: S(x) = (x1, x2 + eps g(x1)).
        ``g`` must depend only on the other coordinate (default sin(2 pi t)).
        The shear has unit Jacobian, so A = M o S preserves volume exactly.
        """
        other = 1 - axis
        if g is None:
            alpha = [0, 0]
            alpha[other] = 1
            g = TrigPoly.sin(alpha)
        if np.any(g.freqs[:, axis] != 0):
            raise ValueError("shear profile must not depend on the sheared coordinate")
        Mf = np.asarray(M, dtype=float)
        # p(x) = M (S(x) - x) = eps * g * M[:, axis]
        p1 = g * (eps * Mf[0, axis])
        p2 = g * (eps * Mf[1, axis])
        return cls(M, (p1, p2), name=name or f"shear(eps={eps:g},axis={axis})")

    def key(self) -> tuple:
        return (tuple(map(tuple, self.M.tolist())), self.p[0].key(), self.p[1].key())

    def __repr__(self) -> str:
        return f"AnosovMap(name={self.name!r}, M={self.M.tolist()})"

    # -- evaluation -----------------------------------------------------------

    def perturbation(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.is_linear:
            return np.zeros_like(x)
        return np.stack([self.p[0].real_values(x), self.p[1].real_values(x)], axis=-1)

    def lift(self, x) -> np.ndarray:
        """``M x + p(x)`` without reduction."""
        x = np.asarray(x, dtype=float)
        return x @ self.Mf.T + self.perturbation(x)

    def __call__(self, x) -> np.ndarray:
        return mod1(self.lift(x))

    def jacobian(self, x) -> np.ndarray:
        """D_x A with shape (..., 2, 2)."""
        x = np.asarray(x, dtype=float)
        J = np.broadcast_to(self.Mf, x.shape[:-1] + (2, 2)).copy()
        if not self.is_linear:
            J[..., 0, :] += self.p[0].real_gradient(x)
            J[..., 1, :] += self.p[1].real_gradient(x)
        return J

    def iterate(self, x, n: int) -> np.ndarray:
        y = np.asarray(x, dtype=float)
        for _ in range(n):
            y = self(y)
        return y

    def jacobian_power(self, x, n: int) -> np.ndarray:
        """D_x A^n by the chain rule along the orbit."""
        y = np.asarray(x, dtype=float)
        J = np.broadcast_to(np.eye(2), y.shape[:-1] + (2, 2)).copy()
        for _ in range(n):
            J = self.jacobian(y) @ J
            y = self(y)
        return J

    def inverse(self, y, tol: float = 1e-15, max_iter: int = 100) -> np.ndarray:
        """Solve A(x) = y by the fixed point x = M^{-1}(y - p(x)) on the lift."""
        y = np.asarray(y, dtype=float)
        Minv = self.Minv.astype(float)
        x = y @ Minv.T
        if self.is_linear:
            return mod1(x)
        for _ in range(max_iter):
            x_new = (y - self.perturbation(x)) @ Minv.T
            step = np.max(np.abs(x_new - x), initial=0.0)
            x = x_new
            if step < tol:
                break
        else:
            raise RuntimeError("inverse map iteration did not converge; perturbation too large")
        return mod1(x)


@dataclass(frozen=True)
class CircleExtensionState:
    x: tuple[float, float]
    omega: float

    def __post_init__(self):
        x = mod1(np.asarray(self.x, dtype=float))
        object.__setattr__(self, "x", (float(x[0]), float(x[1])))
        object.__setattr__(self, "omega", float(mod1(self.omega)))


def eval_map(A: AnosovMap, x) -> np.ndarray:
    return A(x)


def birkhoff_sum(A: AnosovMap, tau: TrigPoly, x, n: int) -> np.ndarray:
    """tau(x) + tau(Ax) + ... + tau(A^{n-1} x); vectorized over leading axes."""
    if n < 1:
        raise ValueError("n must be >= 1")
    y = np.asarray(x, dtype=float)
    total = np.zeros(y.shape[:-1])
    for _ in range(n):
        total = total + tau.real_values(y)
        y = A(y)
    return total


def complexified_sup_norm(f: TrigPoly, r: float) -> float:
    """Coefficient majorant sum |c_a| exp(2 pi r |a|_1).

    This dominates sup |f(x + iy)| over x in T^2, y in [-r, r]^2.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if not len(f):
        return 0.0
    l1 = np.abs(f.freqs).sum(axis=1)
    return float(np.sum(np.abs(f.coeffs) * np.exp(2 * math.pi * r * l1)))


def extension_step(A: AnosovMap, tau: TrigPoly, s: CircleExtensionState) -> CircleExtensionState:
    """(x, w) -> (A x, w + tau(x)) mod 1."""
    x = np.asarray(s.x, dtype=float)
    return CircleExtensionState(tuple(A(x)), s.omega + float(tau.real_values(x)))
