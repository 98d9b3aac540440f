"""Truncated twisted Koopman operators L_q f = exp(2 pi i q tau) (f o A).

In the rho-basis the operator has entries

    T[b, a] = (w_a / w_b) * g_a(b),    g_a = exp(2 pi i q tau) e_a o A,

where g_a(b) is the b-th Fourier coefficient.  Writing A = M + p,
g_a = s_a e_{M^T a} with s_a = exp(2 pi i (q tau + a.p)), so each column is a
shifted read-off of the FFT of the smooth symbol s_a.  For the linear map
s_a does not depend on a and one FFT serves every column.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .aniso import WeightScheme, box
from .errors import AliasingError, ConfigError, KStabilityError, NumericalGateError
from .torus import AnosovMap
from .trigpoly import TrigPoly

log = logging.getLogger(__name__)

TAIL_TOL = 1e-10
MAX_GRID = 8192


@dataclass
class TruncatedOperator:
    K: int
    T: np.ndarray
    freqs: np.ndarray
    scheme: WeightScheme
    A: AnosovMap
    tau: TrigPoly
    q: int
    G: int
    tail: float

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    def metadata(self) -> dict:
        return {"K": self.K, "q": self.q, "r": self.scheme.r, "grid": self.G,
                "aliasing_tail": self.tail, "map": self.A.name, "dim": self.dim}


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray
    singular_values: np.ndarray
    spectral_radius: float
    traces: np.ndarray
    fredholm: np.ndarray
    resolved: int
    meta: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        def cplx(z):
            return [[float(v.real), float(v.imag)] for v in z]
        return {
            "spectral_radius": self.spectral_radius,
            "eigenvalues": cplx(self.eigenvalues),
            "singular_values": [float(s) for s in self.singular_values],
            "traces": cplx(self.traces),
            "fredholm": cplx(self.fredholm),
            "resolved": self.resolved,
            "meta": self.meta,
        }


def _outer_band_max(H: np.ndarray) -> float:
    """max |H[k]| over 3G/8 <= |k|_inf <= G/2 for an FFT-ordered array."""
    G = H.shape[-1]
    k = np.abs(sfft.fftfreq(G, 1.0 / G))
    band = np.maximum(k[:, None], k[None, :]) >= 3 * G / 8
    return float(np.abs(H[..., band]).max(initial=0.0))


def minimal_grid(K: int, q: int, tau: TrigPoly, A: AnosovMap) -> int:
    """Smallest grid allowed by the oversampling rule G >= 4 (K + |q| deg tau + deg p)."""
    deg_p = max(A.p[0].degree, A.p[1].degree)
    return 4 * (K + abs(q) * tau.degree + deg_p)


def symbol_bandwidth(q: int, tau: TrigPoly, A: AnosovMap, K: int = 0) -> float:
    """Instantaneous frequency bound, in cycles, of exp(2 pi i (q tau + a.p))
    for |a|_inf <= K: |q| max|grad tau| + K max(|grad p1| + |grad p2|)."""
    t = (np.arange(128) + 0.5) / 128
    X = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1).reshape(-1, 2)
    bw = 0.0
    if q and len(tau):
        bw += abs(q) * np.abs(tau.real_gradient(X)).max()
    if not A.is_linear and K:
        gp = np.abs(A.p[0].real_gradient(X)) + np.abs(A.p[1].real_gradient(X))
        bw += K * gp.max()
    return float(bw)


def suggest_grid(K: int, q: int, tau: TrigPoly, A: AnosovMap) -> int:
    """Grid whose trusted band 3G/8 covers the symbol bandwidth plus a margin
    of 24 for the Bessel-type tail of the exponential."""
    need = 8.0 / 3.0 * (1.1 * symbol_bandwidth(q, tau, A, K) + 24)
    G = max(minimal_grid(K, q, tau, A), 64, int(math.ceil(need)))
    return sfft.next_fast_len(G)


def _gather(H: np.ndarray, shifts: np.ndarray, G: int) -> np.ndarray:
    """H[k mod G] for integer shifts k, zero where |k|_inf exceeds 3G/8."""
    valid = np.abs(shifts).max(axis=-1) < 3 * G / 8
    out = H[shifts[..., 0] % G, shifts[..., 1] % G]
    return np.where(valid, out, 0.0)


class _Separable:
    """Coefficients H1[i] * H2[j] of a product h1(x1) h2(x2), kept factored."""

    def __init__(self, H1: np.ndarray, H2: np.ndarray):
        self.H1, self.H2 = H1, H2

    def band_max(self) -> float:
        G = len(self.H1)
        k = np.abs(sfft.fftfreq(G, 1.0 / G))
        band = k >= 3 * G / 8
        a1, a2 = np.abs(self.H1), np.abs(self.H2)
        return float(max(a1[band].max(initial=0.0) * a2.max(), a1.max() * a2[band].max(initial=0.0)))

    def __getitem__(self, idx):
        i, j = idx
        return self.H1[i] * self.H2[j]


def _symbol_fft(tau: TrigPoly, q: int, G: int):
    """FFT coefficients of exp(2 pi i q tau) on a G x G grid.

    A roof function without mixed frequencies, tau = c + t1(x1) + t2(x2),
    factors the symbol, so two 1-D transforms suffice.
    """
    t = np.arange(G) / G
    if not (q and len(tau)):
        e = np.zeros(G, dtype=np.complex128)
        e[0] = 1.0
        return _Separable(e, e)
    if np.all((tau.freqs[:, 0] == 0) | (tau.freqs[:, 1] == 0)):
        c = tau.mean()
        axes = []
        for ax in (0, 1):
            sel = (tau.freqs[:, 1 - ax] == 0) & (tau.freqs[:, ax] != 0)
            part = TrigPoly(tau.freqs[sel], tau.coeffs[sel])
            pts = np.zeros((G, 2))
            pts[:, ax] = t
            axes.append(sfft.fft(np.exp(2j * math.pi * q * part.real_values(pts))) / G)
        return _Separable(np.exp(2j * math.pi * q * c.real) * axes[0], axes[1])
    X = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1)
    return sfft.fft2(np.exp(2j * math.pi * q * tau.real_values(X))) / G**2


def assemble(A: AnosovMap, tau: TrigPoly, q: int, scheme: WeightScheme, K: int,
             G: int | None = None, tail_tol: float = TAIL_TOL, batch: int = 32) -> TruncatedOperator:
    """Matrix of L_q on span{rho_a : |a|_inf <= K}.

    With ``G=None`` the grid is chosen by :func:`suggest_grid` and doubled
    until the aliasing audit passes.
    """
    if K < 0:
        raise ConfigError("K must be >= 0")
    if not np.array_equal(scheme.M, A.M):
        raise ConfigError("weight scheme and map use different matrices")
    if G is None:
        G = suggest_grid(K, q, tau, A)
        while True:
            try:
                return assemble(A, tau, q, scheme, K, G, tail_tol, batch)
            except AliasingError:
                if 2 * G > MAX_GRID:
                    raise
                G = sfft.next_fast_len(2 * G)
    if G < minimal_grid(K, q, tau, A):
        raise ConfigError(f"grid {G} violates the oversampling rule G >= {minimal_grid(K, q, tau, A)}")

    freqs = box(K)
    logw = scheme.log_weight(freqs)
    logratio = logw[None, :] - logw[:, None]
    if logratio.max() > 700:
        raise NumericalGateError("weight ratios overflow; reduce r or K")
    ratio = np.exp(logratio)
    shifted = freqs @ A.M  # row a -> M^T a
    shifts = freqs[:, None, :] - shifted[None, :, :]

    t = np.arange(G) / G
    if A.is_linear:
        H = _symbol_fft(tau, q, G)
        tail = H.band_max() if isinstance(H, _Separable) else _outer_band_max(H)
        if tail > tail_tol:
            raise AliasingError(f"aliasing tail {tail:.3g} > {tail_tol:g} at grid {G}; increase the grid")
        T = ratio * _gather(H, shifts, G)
    else:
        X = np.stack(np.meshgrid(t, t, indexing="ij"), axis=-1)
        phase = q * tau.real_values(X) if q and len(tau) else np.zeros((G, G))
        h = np.exp(2j * math.pi * phase)
        P = A.perturbation(X)
        n = len(freqs)
        T = np.empty((n, n), dtype=np.complex128)
        tail = 0.0
        for lo in range(0, n, batch):
            fa = freqs[lo:lo + batch].astype(float)
            s = h[None] * np.exp(2j * math.pi * np.einsum("kc,ijc->kij", fa, P))
            H = sfft.fft2(s, axes=(1, 2)) / G**2
            tail = max(tail, _outer_band_max(H))
            if tail > tail_tol:
                raise AliasingError(f"aliasing tail {tail:.3g} > {tail_tol:g} at grid {G}; increase the grid")
            for j in range(H.shape[0]):
                a = lo + j
                T[:, a] = _gather(H[j], shifts[:, a], G)
        T *= ratio
    return TruncatedOperator(K, T, freqs, scheme, A, tau, int(q), int(G), float(tail))


def fredholm(traces, degree: int | None = None) -> np.ndarray:
    """Coefficients c_0..c_D of det(I - z T) from Tr T^1..Tr T^D by
    m c_m = -sum_{k=1}^m Tr(T^k) c_{m-k}."""
    tr = np.asarray(traces, dtype=np.complex128)
    D = len(tr) if degree is None else int(degree)
    if D > len(tr):
        raise ValueError(f"need {D} traces, got {len(tr)}")
    c = np.zeros(D + 1, dtype=np.complex128)
    c[0] = 1.0
    for m in range(1, D + 1):
        c[m] = -np.dot(tr[:m], c[m - 1::-1]) / m
    return c


def fredholm_roots(coeffs) -> np.ndarray:
    """Zeros of sum c_m z^m, sorted by modulus."""
    c = np.trim_zeros(np.asarray(coeffs, dtype=np.complex128), "b")
    if len(c) < 2:
        return np.zeros(0, dtype=np.complex128)
    z = np.roots(c[::-1])
    return z[np.argsort(np.abs(z))]


def spectrum(op: TruncatedOperator, n_max: int = 12, fredholm_degree: int = 10) -> SpectralReport:
    """Dense eigenvalues and singular values with traces from eigenvalue
    power sums; Tr T^2 is cross-checked against the matrix product."""
    T = op.T
    try:
        ev = np.linalg.eigvals(T)
    except np.linalg.LinAlgError as exc:
        raise NumericalGateError(f"eigensolver failed: {exc}") from exc
    ev = ev[np.lexsort((ev.imag, ev.real, -np.abs(ev)))]
    sv = np.linalg.svd(T, compute_uv=False)
    powers = np.arange(1, n_max + 1)
    traces = (ev[None, :] ** powers[:, None]).sum(axis=1) if len(ev) else np.zeros(n_max, complex)
    if n_max >= 2:
        direct = np.sum(T * T.T)
        scale = max(1.0, float(np.sum(np.abs(ev) ** 2)))
        if abs(direct - traces[1]) > 1e-8 * scale:
            raise NumericalGateError(
                f"trace check failed: Tr T^2 = {direct} vs eigenvalue sum {traces[1]}")
    resolved = int(np.sum(np.abs(ev) > 1e-12 * sv[0])) if len(sv) else 0
    fr = fredholm(traces, min(fredholm_degree, n_max))
    return SpectralReport(ev, sv, float(np.abs(ev[0])) if len(ev) else 0.0, traces, fr,
                          resolved, op.metadata())


def matrix_trace(op: TruncatedOperator, n: int, tol: float = 1e-8,
                 eigenvalues: np.ndarray | None = None) -> complex:
    """Tr T^n by repeated multiplication, checked against the eigenvalue
    power sum."""
    if n < 1:
        raise ValueError("n must be >= 1")
    P = np.linalg.matrix_power(op.T, n)
    direct = complex(np.trace(P))
    ev = np.linalg.eigvals(op.T) if eigenvalues is None else eigenvalues
    via_ev = complex(np.sum(ev**n))
    scale = max(1.0, float(np.sum(np.abs(ev) ** n)))
    if abs(direct - via_ev) > tol * scale:
        raise NumericalGateError(f"Tr T^{n}: matrix power {direct} vs eigenvalues {via_ev}")
    return direct


def log_fit(x, y) -> tuple[float, float, float]:
    """Least squares y = a + b x; returns (b, a, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    b, a = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (a + b * x)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(b), float(a), r2


def singular_value_decay(sv, start: int = 10, floor: float = 1e-12, reference=None,
                         rtol: float = 0.01) -> dict:
    """Fit log mu_n against sqrt(n) over the stable range n >= ``start``.

    The truncated matrix has a cliff of spurious tiny singular values at the
    box edge.  With ``reference`` (singular values at a larger K) the range
    ends where the two lists first differ by more than ``rtol`` relatively;
    otherwise it ends at half the numerical rank (mu_n > floor mu_1).
    """
    sv = np.asarray(sv, dtype=float)
    rank = int(np.sum(sv > floor * sv[0]))
    if reference is not None:
        ref = np.asarray(reference, dtype=float)[:len(sv)]
        bad = np.nonzero(np.abs(sv[:len(ref)] - ref) > rtol * ref)[0]
        stop = int(bad[0]) if len(bad) else min(rank, len(ref))
        stop = min(stop, rank)
    else:
        stop = rank // 2
    n = np.arange(start, stop + 1)
    if len(n) < 3:
        return {"slope": float("nan"), "intercept": float("nan"), "r2": float("nan"),
                "range": [int(start), int(stop)]}
    slope, icpt, r2 = log_fit(np.sqrt(n), np.log(sv[n - 1]))
    return {"slope": slope, "intercept": icpt, "r2": r2, "range": [int(start), int(stop)]}


def eigenvalue_decay(ev, sv0: float, floor: float = 1e-12) -> dict:
    """Fit log|lambda_k| against sqrt(k) over the resolved eigenvalues."""
    mod = np.sort(np.abs(np.asarray(ev)))[::-1]
    k = np.nonzero(mod > floor * sv0)[0] + 1
    if len(k) < 3:
        return {"slope": float("nan"), "r2": float("nan"), "count": int(len(k))}
    slope, _, r2 = log_fit(np.sqrt(k), np.log(mod[k - 1]))
    return {"slope": slope, "r2": r2, "count": int(len(k))}


def weyl_check(ev, sv, rtol: float = 1e-9) -> bool:
    """prod_{n<=N} |lambda_n| <= prod_{n<=N} mu_n for every N (in logs)."""
    mod = np.sort(np.abs(np.asarray(ev)))[::-1]
    sv = np.asarray(sv, dtype=float)
    keep = (mod > 0) & (sv > 0)
    m = int(np.argmin(keep)) if not keep.all() else len(mod)
    le = np.cumsum(np.log(mod[:m]))
    ls = np.cumsum(np.log(sv[:m]))
    return bool(np.all(le <= ls + rtol * (1 + np.abs(ls))))


def entry_decay_fit(op: TruncatedOperator, floor: float = 1e-14) -> dict:
    """Fitted exponential decay rate r0 of |T[b,a]| in |a|_1 + |b|_1.

    For each level s = |a|_1 + |b|_1 the largest entry is taken; log of
    these maxima is fitted linearly in s and r0 = -slope.
    """
    l1 = np.abs(op.freqs).sum(axis=1)
    S = l1[:, None] + l1[None, :]
    A = np.abs(op.T)
    levels = np.unique(S)
    mx = np.array([A[S == s].max() for s in levels])
    keep = mx > floor
    slope, icpt, r2 = log_fit(levels[keep], np.log(mx[keep]))
    bound = float(np.max(A * np.exp(-slope * S)))
    return {"r0": -slope, "r2": r2, "bound": bound}


def trace_growth_check(report: SpectralReport, n_max: int | None = None, slack: float = 0.02) -> dict:
    """|Tr T^n|^{1/n} <= rho + slack for n in the upper half of 1..n_max."""
    tr = report.traces if n_max is None else report.traces[:n_max]
    n_max = len(tr)
    ns = np.arange(1, n_max + 1)
    roots = np.abs(tr) ** (1.0 / ns)
    upper = ns > n_max // 2
    ok = bool(np.all(roots[upper] <= report.spectral_radius + slack))
    return {"n": ns.tolist(), "root": roots.tolist(), "rho": report.spectral_radius,
            "slack": slack, "passed": ok}


def k_stability(A: AnosovMap, tau: TrigPoly, q: int, scheme: WeightScheme, K: int,
                dK: int = 4, top: int = 5, tol: float = 1e-6, G: int | None = None,
                n_max: int = 12) -> tuple[SpectralReport, SpectralReport, float]:
    """Assemble at K and K+dK and compare the top eigenvalue moduli.

    Raises KStabilityError if they differ by ``tol`` or more.  Both grids are
    chosen for the larger box so only truncation changes.
    """
    if G is None:
        G = suggest_grid(K + dK, q, tau, A)
    op2 = assemble(A, tau, q, scheme, K + dK, G)
    op1 = assemble(A, tau, q, scheme, K, op2.G)
    r1 = spectrum(op1, n_max)
    r2 = spectrum(op2, n_max)
    m1 = np.abs(r1.eigenvalues[:top])
    m2 = np.abs(r2.eigenvalues[:top])
    diff = float(np.max(np.abs(m1 - m2), initial=0.0))
    r1.meta["k_stability"] = r2.meta["k_stability"] = diff
    if not diff < tol:
        raise KStabilityError(
            f"top-{top} eigenvalue moduli moved by {diff:.3g} between K={K} and K={K + dK}")
    return r1, r2, diff
