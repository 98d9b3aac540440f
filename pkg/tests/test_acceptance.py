"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary (and by ``python tests/test_acceptance.py``).  Tolerances are the
contract values; nothing here is loosened to make a criterion pass.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from circext.aniso import (SpaceElement, WeightScheme, aniso_inner, aniso_norm, hardy_norm,
                           multiplication_bound, multiply)
from circext.cli import main
from circext.ensemble import (EnsembleConfig, build_eigenbasis, diophantine_check,
                              expected_trace_sq, monte_carlo_trace_sq, sample_coefficients,
                              variance_bound_check)
from circext.mixing import decay_rate_fit, frequency_average
from circext.operator import (assemble, fredholm, k_stability, matrix_trace, singular_value_decay)
from circext.orbits import (enumerate_linear, orbit_trace_sum, periodic_point_count,
                            periodic_points)
from circext.pressure import linear_pressure_closed_form, pressure_estimate
from circext.torus import AnosovMap, birkhoff_sum
from circext.trigpoly import TrigPoly

try:
    from conftest import ACCEPTANCE
except ImportError:  # run as a script
    ACCEPTANCE = {}

CAT = AnosovMap.cat()
TAU = TrigPoly.cos((1, 0), 0.5)
R = 0.02


def record(key: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_trace_identity():
    t0 = time.perf_counter()
    exact = [orbit_trace_sum_exact(n) for n in range(1, 9)]
    op = assemble(CAT, TrigPoly.zero(), 0, WeightScheme(CAT.M, R), 16)
    gaps = [abs(matrix_trace(op, n) - 1) for n in range(1, 7)]
    dt = time.perf_counter() - t0
    ok = all(e == 1 for e in exact) and max(gaps) < 1e-8 and dt < 30
    record("1", ok, f"exact orbit sums n=1..8 = {sorted(set(map(str, exact)))}, "
                    f"max |Tr T^n - 1| = {max(gaps):.2e} (tol 1e-8), {dt:.1f}s (< 30s)")


def orbit_trace_sum_exact(n: int) -> Fraction:
    return enumerate_linear(CAT.M, n).exact_weight_sum()


def test_criterion_02_fredholm():
    op = assemble(CAT, TrigPoly.zero(), 0, WeightScheme(CAT.M, R), 16)
    traces = np.array([matrix_trace(op, n) for n in range(1, 11)])
    c = fredholm(traces, 10)
    e1 = abs(c[1] + 1)
    rest = float(np.abs(c[2:11]).max())
    record("2", e1 < 1e-10 and rest < 1e-10,
           f"|c1 + 1| = {e1:.2e}, max_(2<=m<=10) |c_m| = {rest:.2e} (tol 1e-10)")


def test_criterion_03_pressure():
    t0 = time.perf_counter()
    p2 = pressure_estimate(CAT, 2.0, 12)
    p1 = pressure_estimate(CAT, 1.0, 12)
    dt = time.perf_counter() - t0
    cf = linear_pressure_closed_form(CAT.M, 2.0)
    half = math.exp(p2 / 2)
    ok = (abs(p2 + 0.96242) <= 1e-3 and abs(p1) <= 1e-3 and abs(half - 0.618033988) <= 1e-3
          and abs(math.exp(cf / 2) - 0.618033988) <= 1e-9 and dt < 5)
    record("3", ok, f"P(2) = {p2:.6f}, P(1) = {p1:.2e}, exp(P(2)/2) = {half:.9f}, "
                    f"closed form exp(P/2) = {math.exp(cf / 2):.10f}, {dt:.2f}s (< 5s)")


def test_criterion_04_perturbed_traces():
    A = AnosovMap.sheared(eps=0.01)
    r1, _, diff = k_stability(A, TAU, 1, WeightScheme(A.M, R), 16, 4, n_max=4)
    gaps = [abs(r1.traces[n - 1] - orbit_trace_sum(A, TAU, 1, n)) for n in range(1, 5)]
    counts = all(len(periodic_points(A, n)) == periodic_point_count(A.M, n) for n in range(1, 9))
    ok = max(gaps) < 1e-6 and counts
    record("4", ok, f"K-stability {diff:.1e} at K=16; max |Tr - orbit sum| n<=4 = {max(gaps):.2e} "
                    f"(tol 1e-6); refined counts n=1..8 exact: {counts}")


def test_criterion_05_spectral_radius_ceiling():
    basis = build_eigenbasis(8 * math.pi**2)
    X = sample_coefficients(basis, 0, 20)
    scheme = WeightScheme(CAT.M, R)
    worst, one_gap = 0.0, float("inf")
    for x in X:
        tau = basis.combine(x)
        for q in range(-10, 11):
            ev = np.linalg.eigvals(assemble(CAT, tau, q, scheme, 8).T)
            worst = max(worst, float(np.abs(ev).max()))
            if q == 0:
                one_gap = min(one_gap, float(np.abs(ev - 1).min()))
    ok = worst <= 1 + 1e-8 and one_gap < 1e-10
    record("5", ok, f"max rho over 21 q x 20 samples = {worst:.12f} (<= 1 + 1e-8); "
                    f"eigenvalue 1 at q=0 within {one_gap:.1e}")


@pytest.mark.parametrize("q", [1, 3])
def test_criterion_06_decay_shapes(q):
    r1, r2, diff = k_stability(CAT, TAU, q, WeightScheme(CAT.M, R), 16, 4)
    fit = singular_value_decay(r1.singular_values, reference=r2.singular_values)
    ok = fit["slope"] < 0 and fit["r2"] > 0.9 and diff < 1e-6
    prev = ACCEPTANCE.get("6", (True, ""))
    detail = (f"q={q}: slope {fit['slope']:.3f}, R^2 {fit['r2']:.4f} on n in {fit['range']}, "
              f"top-5 K-stability {diff:.1e}")
    ACCEPTANCE["6"] = (prev[0] and ok, (prev[1] + "; " if prev[1] else "") + detail)
    print(f"criterion 6: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_07a_ensemble_monte_carlo():
    t0 = time.perf_counter()
    N = 4 * math.pi**2
    basis = build_eigenbasis(N)
    closed = expected_trace_sq(basis, CAT, 1, 2)
    mean, se = monte_carlo_trace_sq(EnsembleConfig(N, 20000, seed=0, q=1, n=2), CAT, basis)
    dt = time.perf_counter() - t0
    ok = abs(mean - closed) < 3 * se and dt < 60
    record("7a", ok, f"closed form {closed:.6f}, Monte Carlo {mean:.6f} +- {se:.6f} "
                     f"({abs(mean - closed) / se:.2f} se), {dt:.1f}s (< 60s)")


def test_criterion_07b_large_q_limit():
    # stated target 0.2 = 1/N_2; see the decisions ledger for why the limit is 0.36
    basis = build_eigenbasis(4 * math.pi**2)
    v = expected_trace_sq(basis, CAT, 50, 2)
    record("7b", abs(v - 0.2) < 1e-6, f"E|Tr|^2 at q=50 = {v:.6f}, target 0.2 (tol 1e-6)")


def test_criterion_08_frequency_average():
    reps = [frequency_average(CAT, TAU, n, T) for n in (2, 3, 4) for T in (8, 16, 32)]
    psi0 = reps[0]["psi_hat0"]
    ok = all(r["holds"] for r in reps) and abs(psi0 - 0.1971) <= 1e-3
    margin = min(r["lhs"] - r["rhs"] for r in reps)
    record("8", ok, f"inequality holds on {sum(r['holds'] for r in reps)}/9 cases "
                    f"(min margin {margin:.3e}); psi_hat(0) = {psi0:.7f}")


def test_criterion_09_threshold_sweep(tmp_path):
    t0 = time.perf_counter()
    code = main(["correlate", "--sweep", "100", "--out", str(tmp_path)])
    dt = time.perf_counter() - t0
    import json
    doc = json.loads((tmp_path / "correlate.json").read_text())
    sw = doc["summary"]["sweep"]
    ok = code == 0 and (tmp_path / "sweep_histogram.csv").exists() and sw["params"]["q_max"] == 20
    record("9", ok, f"100 samples, q<=20: max fitted base {sw['max_base']:.6f}; thresholds "
                    f"{sw['threshold_upper']:.6f} and {sw['threshold_lower']:.4f}; "
                    f"histogram written; {dt:.1f}s")


def test_criterion_10_property_suites(tmp_path):
    rng = np.random.default_rng(10)
    scheme = WeightScheme(CAT.M, R)
    checks = {}

    x = rng.random((200, 2))
    A = AnosovMap.sheared(eps=0.01)
    lhs = birkhoff_sum(A, TAU, x, 7)
    rhs = birkhoff_sum(A, TAU, x, 3) + birkhoff_sum(A, TAU, A.iterate(x, 3), 4)
    checks["cocycle"] = float(np.abs(lhs - rhs).max()) < 1e-9

    def rand_poly(deg, k):
        fr = rng.integers(-deg, deg + 1, (k, 2))
        return TrigPoly(fr, rng.normal(size=k) + 1j * rng.normal(size=k))

    cs = bound = True
    for _ in range(100):
        f, g = rand_poly(4, 5), rand_poly(4, 5)
        cs &= abs(aniso_inner(f, g, scheme)) <= aniso_norm(f, scheme) * aniso_norm(g, scheme) * (1 + 1e-12)
        F, phi = rand_poly(2, 4), SpaceElement.from_trigpoly(rand_poly(3, 6), scheme, 6)
        rt = float(rng.uniform(0.045, 0.2))
        prod = multiply(F, phi, r_tilde=rt)
        bound &= prod.norm() <= multiplication_bound(scheme, rt) * hardy_norm(F, rt) * phi.norm() * (1 + 1e-12)
    checks["cauchy_schwarz"] = bool(cs)
    checks["multiply_bound_100"] = bool(bound)

    gold = diophantine_check([1.0, (1 + math.sqrt(5)) / 2], 1, 100)["score"]
    checks["diophantine_golden>0.3"] = gold > 0.3
    pts = enumerate_linear(CAT.M, 2).points
    vb = variance_bound_check(build_eigenbasis(8 * math.pi**2), CAT, pts[1], pts[3], 2)["min_ratio"]
    checks["variance_bound>0"] = vb > 0

    N = np.arange(30)
    b1 = decay_rate_fit(0.5**N).base
    b2 = decay_rate_fit(0.5**N * np.cos(N)).base
    checks["decay_fit"] = abs(b1 - 0.5) < 1e-6 and abs(b2 - 0.5) < 0.05

    runs = []
    for d in ("a", "b"):
        main(["ensemble", "--samples", "500", "--seed", "3", "--out", str(tmp_path / d)])
        runs.append({p.name: p.read_bytes() for p in sorted((tmp_path / d).iterdir())})
    checks["byte_identical"] = runs[0] == runs[1]

    failed = [k for k, v in checks.items() if not v]
    record("10", not failed, f"{len(checks) - len(failed)}/{len(checks)} suites ok "
                             f"(golden score {gold:.4f}, variance ratio {vb:.3f}, "
                             f"fits {b1:.6f}/{b2:.5f})" + (f"; failed: {failed}" if failed else ""))


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
