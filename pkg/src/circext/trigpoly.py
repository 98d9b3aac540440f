"""Finite Fourier series on the 2-torus.

A :class:`TrigPoly` stores a sparse list of integer frequencies and complex
amplitudes and evaluates ``sum_a c_a exp(2 pi i a.x)``.  It is the common
representation for observables, roof functions and map perturbations.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Mapping

import numpy as np

TWO_PI = 2.0 * math.pi


class TrigPoly:
    """Immutable trigonometric polynomial on T^2.

    Frequencies are kept sorted lexicographically with duplicates merged and
    exact zeros dropped, so two polynomials with the same coefficients compare
    equal and serialize identically.
    """

    __slots__ = ("freqs", "coeffs", "_key")

    def __init__(self, freqs, coeffs):
        freqs = np.asarray(freqs, dtype=np.int64).reshape(-1, 2)
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if freqs.shape[0] != coeffs.shape[0]:
            raise ValueError("freqs and coeffs must have the same length")
        if freqs.shape[0]:
            uniq, inv = np.unique(freqs, axis=0, return_inverse=True)
            merged = np.zeros(uniq.shape[0], dtype=np.complex128)
            np.add.at(merged, inv.reshape(-1), coeffs)
            keep = merged != 0
            freqs, coeffs = uniq[keep], merged[keep]
        freqs.setflags(write=False)
        coeffs.setflags(write=False)
        self.freqs = freqs
        self.coeffs = coeffs
        self._key = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> TrigPoly:
        return cls(np.zeros((0, 2), dtype=np.int64), np.zeros(0))

    @classmethod
    def constant(cls, c: complex) -> TrigPoly:
        return cls([[0, 0]], [c])

    @classmethod
    def exp(cls, alpha, amp: complex = 1.0) -> TrigPoly:
        """``amp * e_alpha``."""
        return cls([alpha], [amp])

    @classmethod
    def cos(cls, alpha, amp: float = 1.0) -> TrigPoly:
        """``amp * cos(2 pi alpha.x)``."""
        a = tuple(int(v) for v in alpha)
        if a == (0, 0):
            return cls.constant(amp)
        return cls([a, (-a[0], -a[1])], [amp / 2, amp / 2])

    @classmethod
    def sin(cls, alpha, amp: float = 1.0) -> TrigPoly:
        """``amp * sin(2 pi alpha.x)``."""
        a = tuple(int(v) for v in alpha)
        return cls([a, (-a[0], -a[1])], [amp / 2j, -amp / 2j])

    @classmethod
    def from_dict(cls, terms: Mapping[tuple[int, int], complex]) -> TrigPoly:
        if not terms:
            return cls.zero()
        return cls(list(terms.keys()), list(terms.values()))

    # -- basic properties ---------------------------------------------------

    def __len__(self) -> int:
        return self.freqs.shape[0]

    @property
    def degree(self) -> int:
        """Largest l1 norm |a1|+|a2| among the frequencies present."""
        if not len(self):
            return 0
        return int(np.abs(self.freqs).sum(axis=1).max())

    @property
    def degree_inf(self) -> int:
        if not len(self):
            return 0
        return int(np.abs(self.freqs).max())

    def bandwidth(self) -> np.ndarray:
        """Per-axis max |a_i| (length-2 integer array)."""
        if not len(self):
            return np.zeros(2, dtype=np.int64)
        return np.abs(self.freqs).max(axis=0)

    def is_real(self, tol: float = 1e-14) -> bool:
        """True iff c_{-a} = conj(c_a) for every a."""
        other = self.reflect().conj()
        return self.allclose(other, tol)

    def coefficient(self, alpha) -> complex:
        a = np.asarray(alpha, dtype=np.int64)
        hit = np.nonzero((self.freqs == a).all(axis=1))[0]
        return complex(self.coeffs[hit[0]]) if hit.size else 0.0j

    def as_dict(self) -> dict[tuple[int, int], complex]:
        return {(int(a), int(b)): complex(c) for (a, b), c in zip(self.freqs, self.coeffs)}

    def key(self) -> tuple:
        """Hashable value identity (used for caches)."""
        if self._key is None:
            self._key = tuple(
                (int(a), int(b), float(c.real), float(c.imag))
                for (a, b), c in zip(self.freqs, self.coeffs)
            )
        return self._key

    def __eq__(self, other) -> bool:
        return isinstance(other, TrigPoly) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        terms = ", ".join(f"{tuple(int(v) for v in a)}: {c:.6g}" for a, c in zip(self.freqs, self.coeffs))
        return f"TrigPoly({{{terms}}})"

    def allclose(self, other: TrigPoly, tol: float = 1e-12) -> bool:
        return float(np.abs((self - other).coeffs).max(initial=0.0)) <= tol

    # -- algebra ------------------------------------------------------------

    def __add__(self, other) -> TrigPoly:
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other)
        return TrigPoly(np.vstack([self.freqs, other.freqs]),
                        np.concatenate([self.coeffs, other.coeffs]))

    __radd__ = __add__

    def __neg__(self) -> TrigPoly:
        return TrigPoly(self.freqs, -self.coeffs)

    def __sub__(self, other) -> TrigPoly:
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other)
        return self + (-other)

    def __mul__(self, other) -> TrigPoly:
        if isinstance(other, TrigPoly):
            if not len(self) or not len(other):
                return TrigPoly.zero()
            f = (self.freqs[:, None, :] + other.freqs[None, :, :]).reshape(-1, 2)
            c = (self.coeffs[:, None] * other.coeffs[None, :]).reshape(-1)
            return TrigPoly(f, c)
        return TrigPoly(self.freqs, self.coeffs * complex(other))

    __rmul__ = __mul__

    def conj(self) -> TrigPoly:
        """Coefficient-wise conjugate (not the conjugate function)."""
        return TrigPoly(self.freqs, np.conj(self.coeffs))

    def reflect(self) -> TrigPoly:
        """x -> f(-x)."""
        return TrigPoly(-self.freqs, self.coeffs)

    def conj_function(self) -> TrigPoly:
        """The pointwise complex conjugate function."""
        return TrigPoly(-self.freqs, np.conj(self.coeffs))

    # -- evaluation -----------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        """Evaluate at points ``x`` of shape (..., 2); returns complex values."""
        x = np.asarray(x, dtype=float)
        if not len(self):
            return np.zeros(x.shape[:-1], dtype=np.complex128)
        phase = TWO_PI * (x @ self.freqs.T.astype(float))
        return np.exp(1j * phase) @ self.coeffs

    def real_values(self, x) -> np.ndarray:
        """Real part of the values at ``x`` (for real-valued polynomials)."""
        x = np.asarray(x, dtype=float)
        if not len(self):
            return np.zeros(x.shape[:-1])
        phase = TWO_PI * (x @ self.freqs.T.astype(float))
        return np.cos(phase) @ self.coeffs.real - np.sin(phase) @ self.coeffs.imag

    def gradient(self, x) -> np.ndarray:
        """Complex gradient at ``x``; shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        if not len(self):
            return np.zeros(x.shape, dtype=np.complex128)
        e = np.exp(1j * TWO_PI * (x @ self.freqs.T.astype(float))) * self.coeffs
        return (e @ self.freqs.astype(float)) * (2j * math.pi)

    def real_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not len(self):
            return np.zeros(x.shape)
        phase = TWO_PI * (x @ self.freqs.T.astype(float))
        # d/dx Re(c e^{i phase}) = -2 pi a (Re c sin + Im c cos)
        s = -(np.sin(phase) * self.coeffs.real + np.cos(phase) * self.coeffs.imag)
        return TWO_PI * (s @ self.freqs.astype(float))

    def on_grid(self, G: int) -> np.ndarray:
        """Values on the uniform G x G grid x = (i/G, j/G); index [i, j]."""
        t = np.arange(G) / G
        out = np.zeros((G, G), dtype=np.complex128)
        e1 = np.exp(TWO_PI * 1j * np.outer(t, self.freqs[:, 0]))
        e2 = np.exp(TWO_PI * 1j * np.outer(t, self.freqs[:, 1]))
        out += (e1 * self.coeffs) @ e2.T
        return out

    def mean(self) -> complex:
        return self.coefficient((0, 0))

    # -- serialization ------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {"terms": [
            {"a1": int(a), "a2": int(b), "re": float(c.real), "im": float(c.imag)}
            for (a, b), c in zip(self.freqs, self.coeffs)
        ]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> TrigPoly:
        try:
            terms = obj["terms"]
            freqs = [(int(t["a1"]), int(t["a2"])) for t in terms]
            coeffs = [complex(float(t.get("re", 0.0)), float(t.get("im", 0.0))) for t in terms]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed TrigPoly JSON: {exc}") from exc
        if not freqs:
            return cls.zero()
        return cls(freqs, coeffs)

    @classmethod
    def from_json(cls, text: str) -> TrigPoly:
        return cls.from_json_obj(json.loads(text))


def fourier_box(f: TrigPoly, K: int) -> np.ndarray:
    """Coefficients of ``f`` on the box |a|_inf <= K as a (2K+1, 2K+1) array
    indexed [a1+K, a2+K].  Frequencies outside the box are ignored."""
    out = np.zeros((2 * K + 1, 2 * K + 1), dtype=np.complex128)
    inside = (np.abs(f.freqs) <= K).all(axis=1)
    fr = f.freqs[inside] + K
    out[fr[:, 0], fr[:, 1]] = f.coeffs[inside]
    return out


def sum_polys(polys: Iterable[TrigPoly]) -> TrigPoly:
    polys = list(polys)
    if not polys:
        return TrigPoly.zero()
    return TrigPoly(np.vstack([p.freqs for p in polys]), np.concatenate([p.coeffs for p in polys]))
