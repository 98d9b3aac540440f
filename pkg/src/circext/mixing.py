"""Correlations of the circle extension, decay-rate fits, the Dirichlet box
search and frequency averaging of orbit sums.

For observables f(x) e^{2 pi i q w} and g(x) e^{-2 pi i q w} the correlation
on T^2 x S^1 reduces to

    C(N) = int f(A^N x) exp(2 pi i q tau^(N)(x)) g(x) dx = int (L_q^N f) g dm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .aniso import SpaceElement, box_index, lebesgue_functional, multiply
from .errors import NumericalGateError
from .operator import TruncatedOperator
from .orbits import PeriodicOrbitSet, periodic_points
from .torus import AnosovMap
from .trigpoly import TrigPoly

# -- direct quadrature ---------------------------------------------------------


def _effective_band(tau: TrigPoly, q: int, G: int = 256, tol: float = 1e-14) -> np.ndarray:
    """Per-axis frequency beyond which the coefficients of exp(2 pi i q tau)
    fall below ``tol`` (relative), measured on a G x G grid."""
    if not (q and len(tau)):
        return np.zeros(2)
    while True:
        t = np.arange(G) / G
        X = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1)
        H = np.abs(sfft.fft2(np.exp(2j * math.pi * q * tau.real_values(X)))) / G**2
        k = np.abs(sfft.fftfreq(G, 1.0 / G)).astype(int)
        big = H > tol * H.max()
        b1 = k[np.nonzero(big.any(axis=1))[0]].max()
        b2 = k[np.nonzero(big.any(axis=0))[0]].max()
        if max(b1, b2) < 3 * G // 8 or G >= 8192:
            return np.array([b1, b2], dtype=float)
        G *= 2


def direct_grid(A: AnosovMap, tau: TrigPoly, q: int, fs: Sequence[TrigPoly],
                gs: Sequence[TrigPoly], N: int, margin: float = 1.15) -> tuple[int, int]:
    """Per-axis grid sizes that make the split quadrature exact up to the
    symbol tail.

    The integrand is F1 * F2 with F1 = (f o A^{N-m}) prod_{k<N-m} h o A^k and
    F2 = (g o A^{-m}) prod_{k=1..m} h o A^{-k}, h = exp(2 pi i q tau).  The
    band of u o B for an integer matrix B is |B^T| applied to the band of u;
    the trapezoid rule is exact once G exceeds the sum of the two bands.
    The margin covers the nonlinearity of perturbed maps.
    """
    m = N // 2
    bh = _effective_band(tau, q)
    bf = np.max([f.bandwidth() for f in fs], axis=0).astype(float) if fs else np.zeros(2)
    bg = np.max([g.bandwidth() for g in gs], axis=0).astype(float) if gs else np.zeros(2)
    Mt = np.abs(A.M.T).astype(float)
    Mit = np.abs(A.Minv.T).astype(float)
    b1, P = np.zeros(2), np.eye(2)
    for _ in range(N - m):
        b1 += P @ bh
        P = Mt @ P
    b1 += P @ bf
    b2, P = np.zeros(2), np.eye(2)
    for _ in range(m):
        P = Mit @ P
        b2 += P @ bh
    b2 += P @ bg
    scale = 1.0 if A.is_linear else margin
    G = np.ceil(scale * (b1 + b2)).astype(int) + 1
    return int(max(G[0], 16)), int(max(G[1], 16))


def _split_factors(A: AnosovMap, tau: TrigPoly, q: int, fs, gs, N: int, Y: np.ndarray):
    m = N // 2
    ph1 = np.zeros(len(Y))
    z = Y
    for _ in range(N - m):
        if q:
            ph1 += tau.real_values(z)
        z = A(z)
    F1 = np.stack([f(z) for f in fs], axis=1) * np.exp(2j * math.pi * q * ph1)[:, None]
    ph2 = np.zeros(len(Y))
    z = Y
    for _ in range(m):
        z = A.inverse(z)
        if q:
            ph2 += tau.real_values(z)
    F2 = np.stack([g(z) for g in gs], axis=1) * np.exp(2j * math.pi * q * ph2)[:, None]
    return F1, F2


def correlation_direct_matrix(A: AnosovMap, tau: TrigPoly, q: int, fs: Sequence[TrigPoly],
                              gs: Sequence[TrigPoly], N: int, G=None,
                              chunk: int = 1 << 18) -> np.ndarray:
    """C(N) for every pair (f, g), shape (len(fs), len(gs)).

    Substituting x = A^{-m} y with m = N // 2 (Lebesgue measure is invariant)
    splits the iteration into halves, which keeps the integrand's bandwidth
    at the square root of that of f o A^N.  The integral is the trapezoid
    rule on a uniform grid; ``G`` is an int, a pair, or None for automatic.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    if not A.volume_preserving:
        raise ValueError("direct correlations assume a volume-preserving map")
    if G is None:
        G1, G2 = direct_grid(A, tau, q, fs, gs, N)
    elif np.ndim(G) == 0:
        G1 = G2 = int(G)
    else:
        G1, G2 = (int(v) for v in G)
    n_pts = G1 * G2
    out = np.zeros((len(fs), len(gs)), dtype=np.complex128)
    t1 = np.arange(G1) / G1
    t2 = np.arange(G2) / G2
    for lo in range(0, n_pts, chunk):
        idx = np.arange(lo, min(lo + chunk, n_pts))
        Y = np.stack([t1[idx // G2], t2[idx % G2]], axis=1)
        F1, F2 = _split_factors(A, tau, q, fs, gs, N, Y)
        out += F1.T @ F2
    return out / n_pts


def correlation_direct(A: AnosovMap, tau: TrigPoly, q: int, f: TrigPoly, g: TrigPoly,
                       N: int, G=None) -> complex:
    """int f(A^N x) exp(2 pi i q tau^(N)(x)) g(x) dx by grid quadrature."""
    return complex(correlation_direct_matrix(A, tau, q, [f], [g], N, G)[0, 0])


# -- spectral route ------------------------------------------------------------


def correlation_spectral(op: TruncatedOperator, f: TrigPoly, g: TrigPoly, N: int) -> complex:
    """L_m(g * T^N f): push the rho-coefficients of f through T^N, multiply by
    g and read off the rho_0 coefficient."""
    phi = SpaceElement.from_trigpoly(f, op.scheme, op.K)
    if phi.discarded or (len(g) and np.abs(g.freqs).max() > op.K):
        raise ValueError("f and g must lie inside the truncation box")
    b = phi.b
    for _ in range(N):
        b = op.T @ b
    return lebesgue_functional(multiply(g, SpaceElement(op.scheme, op.K, b)))


def correlation_spectral_series(op: TruncatedOperator, fs: Sequence[TrigPoly],
                                gs: Sequence[TrigPoly], N_max: int) -> np.ndarray:
    """C(N) for N = 0..N_max and every (f, g); shape (N_max+1, len(fs), len(gs)).

    Uses L_m(g h) = sum_b g_{-b} w_b h_b, which is the rho_0 coefficient of
    the truncated product computed by :func:`multiply`.
    """
    K, scheme = op.K, op.scheme
    B = np.stack([SpaceElement.from_trigpoly(f, scheme, K).b for f in fs], axis=1)
    w = scheme.table(K)
    Gv = np.zeros((len(gs), op.dim), dtype=np.complex128)
    for j, g in enumerate(gs):
        for (a1, a2), c in zip(g.freqs, g.coeffs):
            Gv[j, box_index((-a1, -a2), K)] += c
    Gv *= w[None, :]
    out = np.empty((N_max + 1, len(fs), len(gs)), dtype=np.complex128)
    for n in range(N_max + 1):
        out[n] = (Gv @ B).T
        B = op.T @ B
    return out


# -- decay fits ----------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    base: float
    r2: float
    points: int
    status: str = "ok"

    def __float__(self) -> float:
        return self.base


def decay_rate_fit(values, rel_floor: float = 1e-12, noise: float = 1e-13) -> DecayFit:
    """Exponential base of |C(N)| from the upper envelope.

    Keeps the window |C(N)| > rel_floor * max|C|, takes the record points
    of the right-running maximum (the envelope that a limsup sees) and fits
    log|C| linearly in N by least squares.
    """
    a = np.abs(np.asarray(values, dtype=np.complex128))
    if len(a) < 12:
        raise ValueError("decay_rate_fit needs at least 12 values")
    if np.all(a < noise):
        return DecayFit(float("nan"), float("nan"), 0, "below noise floor")
    N = np.arange(len(a))
    inwin = a > rel_floor * a.max()
    envelope = np.maximum.accumulate(np.where(inwin, a, 0.0)[::-1])[::-1]
    rec = inwin & (a >= envelope)
    if rec.sum() < 2:
        return DecayFit(float("nan"), float("nan"), int(rec.sum()), "too few points")
    x, y = N[rec], np.log(a[rec])
    slope, icpt = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - icpt - slope * x) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(math.exp(slope)), r2, int(rec.sum()))


# -- Dirichlet box principle -------------------------------------------------


def dirichlet_box_search(angles, D: int, Q: int, chunk: int = 1 << 20) -> int:
    """Smallest n in {D, ..., D Q^P} with max_j dist(n angle_j, Z) < 1/Q.

    Angles are fractions of a turn.  Fractions (and ints) are handled in
    exact integer arithmetic; floats use a 1e-12 guard.
    """
    P = len(angles)
    if Q < 2 or D < 1 or P < 1:
        raise ValueError("need Q >= 2, D >= 1 and at least one angle")
    hi = D * Q**P
    if hi > 10**8:
        raise ValueError(f"search range D*Q^P = {hi} exceeds 1e8")
    exact = all(isinstance(a, (Fraction, int)) for a in angles)
    for lo in range(D, hi + 1, chunk):
        n = np.arange(lo, min(lo + chunk, hi + 1), dtype=np.int64)
        ok = np.ones(len(n), dtype=bool)
        for a in angles:
            if exact:
                fr = Fraction(a)
                r = (n * (fr.numerator % fr.denominator)) % fr.denominator
                d = np.minimum(r, fr.denominator - r)
                ok &= Q * d < fr.denominator
            else:
                x = np.mod(n * float(a), 1.0)
                ok &= np.minimum(x, 1.0 - x) < 1.0 / Q - 1e-12
        hit = np.nonzero(ok)[0]
        if len(hit):
            return int(n[hit[0]])
    raise NumericalGateError(f"no n <= {hi} found; this contradicts the box principle")


# -- frequency averaging -------------------------------------------------------


def bump(x) -> np.ndarray:
    """phi_0(x) = exp(-1/(1-x^2)) on (-1, 1), zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@dataclass(frozen=True)
class BumpSquare:
    """psi = phi_0 * phi_0 sampled on [-2, 2] by trapezoid convolution."""

    x: np.ndarray
    values: np.ndarray
    h: float

    def __call__(self, s) -> np.ndarray:
        return np.interp(s, self.x, self.values, left=0.0, right=0.0)

    def hat(self, xi) -> np.ndarray:
        """int psi(s) exp(-i xi s) ds (real: psi is even)."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return self.h * (np.cos(np.outer(xi, self.x)) @ self.values)


def bump_square(bump_grid: int = 4001) -> BumpSquare:
    if bump_grid < 3:
        raise ValueError("bump_grid must be >= 3")
    s = np.linspace(-1.0, 1.0, bump_grid)
    h = float(s[1] - s[0])
    phi = bump(s)
    psi = h * np.convolve(phi, phi)
    x = np.linspace(-2.0, 2.0, len(psi))
    return BumpSquare(x, psi, h)


def frequency_average(A: AnosovMap, tau: TrigPoly, n: int, T: float, bump_grid: int = 4001,
                      orbits: PeriodicOrbitSet | None = None) -> dict:
    """Poisson-summation lower bound for frequency-averaged orbit sums.

    LHS = (1/T) sum_{|q| <= 2T} psi(q/T) |S(n,q)|^2 and
    RHS = psi_hat(0) sum_x 1/det_x^2 - sum_{p = +-1..+-3} |psi_hat(2 pi T p)|.
    """
    if T < 4:
        raise ValueError("T must be >= 4")
    orbits = periodic_points(A, n) if orbits is None else orbits
    psi = bump_square(bump_grid)
    probe = np.concatenate([[0.0], 2 * math.pi * T * np.arange(1, 4), np.linspace(0, 60, 241)])
    hat = psi.hat(probe)
    if hat.min() < -1e-12:
        raise NumericalGateError(
            f"psi_hat is negative ({hat.min():.3g}) on the bump grid; use a finer bump_grid")
    u = 1.0 / orbits.weights
    tau_n = orbits.birkhoff(A, tau) if len(tau) else np.zeros(len(orbits))
    qs = np.arange(-int(math.floor(2 * T)), int(math.floor(2 * T)) + 1)
    S = np.exp(2j * math.pi * np.outer(qs, tau_n)) @ u
    lhs = float(np.sum(psi(qs / T) * np.abs(S) ** 2) / T)
    psi0 = float(hat[0])
    tail = float(2 * np.sum(np.abs(hat[1:4])))
    diag = math.fsum(u**2)
    rhs = psi0 * diag - tail
    return {"n": n, "T": T, "lhs": lhs, "rhs": rhs, "psi_hat0": psi0, "tail": tail,
            "diagonal": diag, "holds": bool(lhs >= rhs)}


# -- threshold sweep -----------------------------------------------------------


def default_observables() -> tuple[list[TrigPoly], list[TrigPoly]]:
    E = TrigPoly.exp
    return [E((0, 0)), E((1, 0)), E((0, 1))], [E((0, 0)), E((-1, 0)), E((0, -1))]


def threshold_sweep(A: AnosovMap, basis, samples: int, seed: int = 0, q_max: int = 20,
                    K: int = 6, r: float = 0.02, N_max: int = 24, fs=None, gs=None,
                    bins: int = 20, pool=None) -> dict:
    """Fitted decay bases of spectral-route correlations over ensemble
    samples of tau and q = 1..q_max.

    For each sample the maximum base over q and over the (f, g) pairs is
    kept.  ``pool`` is an optional executor whose ordered ``map`` runs the
    samples.
    """
    from .aniso import WeightScheme
    from .ensemble import sample_coefficients
    from .operator import assemble
    from .pressure import rate_thresholds

    if fs is None or gs is None:
        fs, gs = default_observables()
    scheme = WeightScheme(A.M, r)
    X = sample_coefficients(basis, seed, samples)

    def one(i: int) -> dict:
        tau = basis.combine(X[i])
        best, best_q = float("nan"), 0
        for q in range(1, q_max + 1):
            op = assemble(A, tau, q, scheme, K)
            series = correlation_spectral_series(op, fs, gs, N_max)
            for a in range(len(fs)):
                for b in range(len(gs)):
                    fit = decay_rate_fit(series[:, a, b])
                    if fit.status == "ok" and not (fit.base <= best):
                        best, best_q = fit.base, q
        return {"sample": i, "max_base": best, "q_at_max": best_q}

    ids = range(samples)
    rows = list(pool.map(one, ids)) if pool is not None else [one(i) for i in ids]
    bases = np.array([row["max_base"] for row in rows])
    finite = bases[np.isfinite(bases)]
    counts, edges = np.histogram(finite, bins=bins, range=(0.0, max(1.0, float(finite.max(initial=1.0)))))
    lo, hi = rate_thresholds(A.M)
    return {
        "rows": rows,
        "max_base": float(finite.max()) if len(finite) else float("nan"),
        "threshold_upper": hi,
        "threshold_lower": lo,
        "fraction_above_upper": float(np.mean(finite > hi)) if len(finite) else 0.0,
        "fraction_above_lower": float(np.mean(finite > lo)) if len(finite) else 0.0,
        "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
        "params": {"samples": samples, "seed": seed, "q_max": q_max, "K": K, "r": r, "N_max": N_max},
    }
