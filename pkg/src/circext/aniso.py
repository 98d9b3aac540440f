"""Anisotropic Hilbert spaces of analytic functions on T^2.

Frequencies are split along the eigendirections of M^T, the action of the
map on Fourier indices (e_a o M = e_{M^T a}).  The weight
``w_a = exp(2 pi r (|a+|_1 - |a-|_1))`` damps the expanding component and
allows growth along the contracting one, and ``rho_a = w_a e_a`` is an
orthonormal basis.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .torus import check_hyperbolic, hyperbolic_eigendata
from .trigpoly import TrigPoly


@dataclass(frozen=True)
class FrequencyIndex:
    alpha: tuple[int, int]
    plus_norm: float
    minus_norm: float


def spectral_projectors(M) -> tuple[np.ndarray, np.ndarray]:
    """(P+, P-) of M^T: P+ projects on the expanding eigenline along the
    contracting one."""
    Mt = np.asarray(check_hyperbolic(M), dtype=float).T
    mu, _, _ = hyperbolic_eigendata(Mt)
    det = float(round(np.linalg.det(Mt)))
    nu = det / mu
    Pp = (Mt - nu * np.eye(2)) / (mu - nu)
    return Pp, np.eye(2) - Pp


def split_frequency(M, alpha) -> FrequencyIndex:
    Pp, Pm = spectral_projectors(M)
    a = np.asarray(alpha, dtype=float)
    return FrequencyIndex((int(alpha[0]), int(alpha[1])),
                          float(np.abs(Pp @ a).sum()), float(np.abs(Pm @ a).sum()))


def splitting_constant(M) -> float:
    """C(M) with |a+|_1 + |a-|_1 <= C(M) |a|_1 for all a."""
    Pp, Pm = spectral_projectors(M)
    cols = np.abs(Pp).sum(axis=0) + np.abs(Pm).sum(axis=0)
    return float(cols.max())


def box(K: int) -> np.ndarray:
    """All a with |a|_inf <= K, shape ((2K+1)^2, 2); row i is
    (i // (2K+1) - K, i % (2K+1) - K)."""
    t = np.arange(-K, K + 1, dtype=np.int64)
    a1, a2 = np.meshgrid(t, t, indexing="ij")
    return np.stack([a1.ravel(), a2.ravel()], axis=1)


def box_index(alpha, K: int) -> int:
    a1, a2 = int(alpha[0]), int(alpha[1])
    if max(abs(a1), abs(a2)) > K:
        raise IndexError(f"{alpha} outside the box |a| <= {K}")
    return (a1 + K) * (2 * K + 1) + (a2 + K)


class WeightScheme:
    """Weights ``w_a = exp(2 pi r (|a+|_1 - |a-|_1))`` for a hyperbolic M."""

    def __init__(self, M, r: float = 0.02):
        if not r > 0:
            raise ValueError("Grauert radius r must be > 0")
        self.M = check_hyperbolic(M)
        self.r = float(r)
        self.P_plus, self.P_minus = spectral_projectors(self.M)
        self.C = splitting_constant(self.M)
        self._tables: dict[int, np.ndarray] = {}

    def key(self) -> tuple:
        return (tuple(map(tuple, self.M.tolist())), self.r)

    def norms(self, alphas) -> tuple[np.ndarray, np.ndarray]:
        a = np.asarray(alphas, dtype=float).reshape(-1, 2)
        return np.abs(a @ self.P_plus.T).sum(axis=1), np.abs(a @ self.P_minus.T).sum(axis=1)

    def log_weight(self, alphas) -> np.ndarray:
        plus, minus = self.norms(alphas)
        return 2 * math.pi * self.r * (plus - minus)

    def weight(self, alphas) -> np.ndarray:
        return np.exp(self.log_weight(alphas))

    def table(self, K: int) -> np.ndarray:
        """Weights on box(K), cached read-only."""
        if K not in self._tables:
            w = self.weight(box(K))
            w.setflags(write=False)
            self._tables[K] = w
        return self._tables[K]

    def to_csv(self, K: int) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["a1", "a2", "plus_norm", "minus_norm", "weight"])
        B = box(K)
        plus, minus = self.norms(B)
        for (a1, a2), p, m, w in zip(B, plus, minus, self.table(K)):
            wr.writerow([int(a1), int(a2), repr(float(p)), repr(float(m)), repr(float(w))])
        return buf.getvalue()


@dataclass
class SpaceElement:
    """Coefficients ``b`` in the rho-basis on the box |a|_inf <= K.

    ``discarded`` is the norm of whatever was cut off when the element was
    produced (0 for exact representations).
    """

    scheme: WeightScheme
    K: int
    b: np.ndarray
    discarded: float = 0.0

    @classmethod
    def from_trigpoly(cls, f: TrigPoly, scheme: WeightScheme, K: int) -> SpaceElement:
        b = np.zeros((2 * K + 1) ** 2, dtype=np.complex128)
        if len(f):
            inside = (np.abs(f.freqs) <= K).all(axis=1)
            fr = f.freqs[inside]
            idx = (fr[:, 0] + K) * (2 * K + 1) + (fr[:, 1] + K)
            b[idx] = f.coeffs[inside] / scheme.weight(fr)
            out = f.freqs[~inside]
            tail = np.abs(f.coeffs[~inside]) / scheme.weight(out) if len(out) else np.zeros(0)
        else:
            tail = np.zeros(0)
        return cls(scheme, K, b, float(np.linalg.norm(tail)))

    @classmethod
    def rho(cls, alpha, scheme: WeightScheme, K: int) -> SpaceElement:
        b = np.zeros((2 * K + 1) ** 2, dtype=np.complex128)
        b[box_index(alpha, K)] = 1.0
        return cls(scheme, K, b)

    def fourier(self) -> np.ndarray:
        """Plain Fourier coefficients f_a = b_a w_a on the box."""
        return self.b * self.scheme.table(self.K)

    def to_trigpoly(self, tol: float = 0.0) -> TrigPoly:
        c = self.fourier()
        keep = np.abs(c) > tol
        return TrigPoly(box(self.K)[keep], c[keep])

    def norm(self) -> float:
        return float(np.linalg.norm(self.b))


def hardy_norm(f: TrigPoly, r: float) -> float:
    """sqrt(sum |f_a|^2 exp(4 pi r |a|_1))."""
    if r < 0:
        raise ValueError("r must be >= 0")
    if not len(f):
        return 0.0
    l1 = np.abs(f.freqs).sum(axis=1)
    return float(math.sqrt(np.sum(np.abs(f.coeffs) ** 2 * np.exp(4 * math.pi * r * l1))))


def _as_fourier_dict(f, scheme: WeightScheme) -> dict:
    if isinstance(f, SpaceElement):
        f = f.to_trigpoly()
    return f.as_dict()


def aniso_inner(f, g, scheme: WeightScheme) -> complex:
    """sum_a f_a conj(g_a) w_a^{-2} for TrigPoly or SpaceElement arguments."""
    fd = _as_fourier_dict(f, scheme)
    gd = _as_fourier_dict(g, scheme)
    common = sorted(set(fd) & set(gd))
    if not common:
        return 0j
    w = scheme.weight(np.array(common))
    fv = np.array([fd[a] for a in common])
    gv = np.array([gd[a] for a in common])
    return complex(np.sum(fv * np.conj(gv) / w**2))


def aniso_norm(f, scheme: WeightScheme) -> float:
    return math.sqrt(max(aniso_inner(f, f, scheme).real, 0.0))


def multiplication_bound(scheme: WeightScheme, r_tilde: float) -> float:
    """L with ||F phi|| <= L ||F||_{H^2_{r_tilde}} ||phi||.

    The multiplication matrix in the rho-basis has entries bounded by
    |F_g| exp(2 pi r C(M) |g|_1); Schur's test and Cauchy-Schwarz give
    L = sum_g exp(-4 pi d |g|_1)^{1/2} = coth(2 pi d) with d = r_tilde - C(M) r.
    """
    need = scheme.C * scheme.r
    if not r_tilde > need:
        raise ValueError(
            f"multiplier radius r_tilde={r_tilde:g} must exceed C(M)*r = {need:.6g}")
    return 1.0 / math.tanh(2 * math.pi * (r_tilde - need))


def multiply(F: TrigPoly, phi: SpaceElement, r_tilde: float | None = None) -> SpaceElement:
    """F * phi in coefficient space, truncated to the box of ``phi``.

    ``discarded`` on the result is the rho-norm of the part pushed outside
    the box (relative to the full product norm).  If ``r_tilde`` is given the
    admissibility condition r_tilde > C(M) r is checked.
    """
    scheme, K = phi.scheme, phi.K
    if r_tilde is not None:
        multiplication_bound(scheme, r_tilde)
    n = 2 * K + 1
    f = phi.fourier().reshape(n, n)
    if not len(F):
        return SpaceElement(scheme, K, np.zeros_like(phi.b))
    bw = int(np.abs(F.freqs).max())
    big = np.zeros((n + 2 * bw, n + 2 * bw), dtype=np.complex128)
    for (g1, g2), c in zip(F.freqs, F.coeffs):
        big[bw + g1:bw + g1 + n, bw + g2:bw + g2 + n] += c * f
    Kb = K + bw
    wb = scheme.weight(box(Kb)).reshape(n + 2 * bw, n + 2 * bw)
    bb = big / wb
    inner = bb[bw:bw + n, bw:bw + n].ravel().copy()
    total = float(np.linalg.norm(bb))
    lost = math.sqrt(max(total**2 - float(np.linalg.norm(inner)) ** 2, 0.0))
    frac = lost / total if total > 0 else 0.0
    return SpaceElement(scheme, K, inner, frac)


def lebesgue_functional(G: SpaceElement) -> complex:
    """<G, rho_0> = b_0, the integral of G against Lebesgue measure."""
    return complex(G.b[box_index((0, 0), G.K)])
