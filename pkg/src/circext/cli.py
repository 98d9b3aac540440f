"""Command-line experiment runner.

Each experiment writes ``<experiment>.json`` plus CSV series into the output
directory.  Every file carries the resolved config and package version, and
nothing time-dependent is written, so reruns are byte-identical.

Exit codes: 0 ok, 2 configuration error, 3 numerical gate failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .aniso import WeightScheme
from .config import load_config, make_map, make_tau, parse_cutoff, resolve, to_jsonable
from .ensemble import (EnsembleConfig, build_eigenbasis, diagonal_sum, expected_trace_sq,
                       monte_carlo_trace_sq)
from .errors import ConfigError, NumericalGateError
from .mixing import (correlation_direct, correlation_spectral_series, decay_rate_fit,
                     frequency_average, threshold_sweep)
from .operator import (assemble, eigenvalue_decay, k_stability, matrix_trace,
                       singular_value_decay, trace_growth_check)
from .orbits import enumerate_linear, orbit_trace_sum, periodic_points
from .pressure import linear_pressure_closed_form, pressure_table, rate_thresholds
from .trigpoly import TrigPoly

log = logging.getLogger("circext")

EXIT_OK, EXIT_CONFIG, EXIT_GATE = 0, 2, 3


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Output:
    """Collects JSON summary and CSV tables for one run."""

    def __init__(self, cfg: dict):
        self.cfg = to_jsonable(cfg)
        self.tables: dict[str, tuple[list[str], list[list]]] = {}

    def table(self, name: str, header: list[str], rows: list[list]) -> None:
        self.tables[name] = (header, rows)

    def csv_text(self, name: str) -> str:
        header, rows = self.tables[name]
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.cfg, sort_keys=True) + "\n")
        buf.write(f"# version: {__version__}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, out_dir: Path, summary: dict) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        doc = {"config": self.cfg, "version": __version__, "summary": summary,
               "files": sorted(f"{name}.csv" for name in self.tables)}
        paths = [out_dir / f"{self.cfg['experiment']}.json"]
        paths[0].write_text(json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n")
        for name in sorted(self.tables):
            p = out_dir / f"{name}.csv"
            p.write_text(self.csv_text(name))
            paths.append(p)
        return paths


def _trunc(x: float, digits: int) -> str:
    # truncated, not rounded, decimal expansion
    return f"{math.floor(x * 10**digits) / 10**digits:.{digits}f}"


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (complex, np.complexfloating)):
        return [float(o.real), float(o.imag)]
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Fraction):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o)}")


# -- experiments ---------------------------------------------------------------


def run_spectrum(cfg: dict, out: Output, pool) -> tuple[dict, str]:
    A, tau = make_map(cfg), make_tau(cfg["tau"])
    scheme = WeightScheme(A.M, cfg["r"])
    rep, rep2, diff = k_stability(A, tau, cfg["q"], scheme, cfg["K"], cfg["dK"], cfg["top"],
                                  cfg["k_tol"], cfg["grid"], cfg["nmax"])
    svd = singular_value_decay(rep.singular_values, reference=rep2.singular_values)
    evd = eigenvalue_decay(rep.eigenvalues, rep.singular_values[0])
    growth = trace_growth_check(rep)
    out.table("eigenvalues", ["k", "re", "im", "abs"],
              [[i + 1, z.real, z.imag, abs(z)] for i, z in enumerate(rep.eigenvalues)])
    out.table("singular_values", ["n", "mu"], [[i + 1, s] for i, s in enumerate(rep.singular_values)])
    summary = rep.to_json_obj()
    summary.update({"k_stability": diff, "singular_value_fit": svd, "eigenvalue_fit": evd,
                    "trace_growth": growth})
    return summary, f"spectral radius {rep.spectral_radius:.10f} (K={cfg['K']}, q={cfg['q']}, K-stability {diff:.2e})"


def run_traces(cfg: dict, out: Output, pool) -> tuple[dict, str]:
    A, tau = make_map(cfg), make_tau(cfg["tau"])
    scheme = WeightScheme(A.M, cfg["r"])
    op = assemble(A, tau, cfg["q"], scheme, cfg["K"], cfg["grid"])
    ev = np.linalg.eigvals(op.T)
    rows, exact = [], {}
    for n in range(1, cfg["nmax"] + 1):
        mt = matrix_trace(op, n, cfg["tol"], ev)
        orb = orbit_trace_sum(A, tau, cfg["q"], n)
        if A.is_linear and (cfg["q"] == 0 or not len(tau)):
            exact[n] = str(enumerate_linear(A.M, n).exact_weight_sum())
        rows.append([n, mt.real, mt.imag, orb.real, orb.imag, abs(mt - orb)])
    out.table("traces", ["n", "trace_re", "trace_im", "orbit_re", "orbit_im", "gap"], rows)
    gap = max(r[-1] for r in rows)
    return ({"max_gap": gap, "exact_orbit_sums": exact, "grid": op.G},
            f"traces n=1..{cfg['nmax']}: max |matrix - orbit| = {gap:.2e}")


def run_pressure(cfg: dict, out: Output, pool) -> tuple[dict, str]:
    A = make_map(cfg)
    rows = pressure_table(A, cfg["sigmas"], cfg["n"])
    out.table("pressure", ["n", "sigma", "estimate", "closed_form", "gap"],
              [[r["n"], r["sigma"], r["estimate"], r["closed_form"], r["gap"]] for r in rows])
    worst = max(abs(r["gap"]) for r in rows)
    return {"rows": rows, "max_gap": worst}, f"pressure: max |estimate - closed form| = {worst:.2e}"


def run_ensemble(cfg: dict, out: Output, pool) -> tuple[dict, str]:
    A = make_map(cfg)
    N = parse_cutoff(cfg["N"])
    ec = EnsembleConfig(N, cfg["samples"], cfg["seed"], cfg["q"], cfg["n"])
    basis = build_eigenbasis(N)
    closed = expected_trace_sq(basis, A, ec.q, ec.n)
    mean, se = monte_carlo_trace_sq(ec, A, basis)
    diag = diagonal_sum(periodic_points(A, ec.n))
    summary = {"closed_form": closed, "mc_mean": mean, "mc_stderr": se, "diag_sum": diag,
               "basis_dim": basis.dim, "z_score": (mean - closed) / se if se > 0 else 0.0}
    out.table("ensemble", ["closed_form", "mc_mean", "mc_stderr", "diag_sum"], [[closed, mean, se, diag]])
    return summary, f"E|Tr|^2 closed form {closed:.6f}, Monte Carlo {mean:.6f} +- {se:.6f}"


def run_correlate(cfg: dict, out: Output, pool) -> tuple[dict, str]:
    A, tau = make_map(cfg), make_tau(cfg["tau"])
    q = cfg["q"]
    f, g = TrigPoly.exp(cfg["f"]), TrigPoly.exp(cfg["g"])
    scheme = WeightScheme(A.M, cfg["r"])
    op = assemble(A, tau, q, scheme, cfg["K"], cfg["grid"])
    Ns = list(range(cfg["N"] + 1))
    spec = correlation_spectral_series(op, [f], [g], cfg["N"])[:, 0, 0]
    # quadrature grids grow like |mu|^N, so the direct route stops at direct_N
    Nd = Ns[:cfg["direct_N"] + 1]
    direct = list(pool.map(lambda n: correlation_direct(A, tau, q, f, g, n), Nd))
    out.table("correlation_spectral", ["N", "re", "im", "abs"], [[n, z.real, z.imag, abs(z)] for n, z in zip(Ns, spec)])
    out.table("correlation_direct", ["N", "re", "im", "abs"], [[n, z.real, z.imag, abs(z)] for n, z in zip(Nd, direct)])
    lo, hi = rate_thresholds(A.M)
    summary = {"max_route_gap": float(np.max(np.abs(np.array(direct) - spec[:len(Nd)]))),
               "threshold_upper": hi, "threshold_lower": lo}
    if len(Ns) >= 12:
        fit = decay_rate_fit(spec)
        summary["fitted_base"] = {"base": fit.base, "r2": fit.r2, "status": fit.status}
    msg = f"correlations N=0..{cfg['N']}: max |direct - spectral| = {summary['max_route_gap']:.2e}"
    if cfg["sweep_samples"] > 0:
        basis = build_eigenbasis(parse_cutoff(cfg["sweep_N"]))
        sw = threshold_sweep(A, basis, cfg["sweep_samples"], cfg["seed"], cfg["sweep_q_max"],
                             cfg["sweep_K"], cfg["r"], cfg["sweep_N_max"], bins=cfg["bins"], pool=pool)
        out.table("sweep", ["sample", "max_base", "q_at_max"],
                  [[r["sample"], r["max_base"], r["q_at_max"]] for r in sw["rows"]])
        e, c = sw["histogram"]["edges"], sw["histogram"]["counts"]
        out.table("sweep_histogram", ["bin_lo", "bin_hi", "count"],
                  [[e[i], e[i + 1], c[i]] for i in range(len(c))])
        summary["sweep"] = {k: v for k, v in sw.items() if k != "rows"}
        msg += (f"; sweep max base {sw['max_base']:.6f} vs thresholds "
                f"{hi:.6f} and {lo:.4f}")
    return summary, msg


def run_average(cfg: dict, out: Output, pool) -> tuple[dict, str]:
    A, tau = make_map(cfg), make_tau(cfg["tau"])
    reports = [frequency_average(A, tau, n, T, cfg["bump_grid"]) for n in cfg["n"] for T in cfg["T"]]
    out.table("average", ["n", "T", "lhs", "rhs", "psi_hat0", "tail", "holds"],
              [[r["n"], r["T"], r["lhs"], r["rhs"], r["psi_hat0"], r["tail"], int(r["holds"])] for r in reports])
    ok = all(r["holds"] for r in reports)
    if not ok:
        raise NumericalGateError("frequency-averaging inequality failed")
    return {"reports": reports, "all_hold": ok}, f"frequency averaging holds on {len(reports)} cases"


def run_thresholds(cfg: dict, out: Output, pool) -> tuple[dict, str]:
    A = make_map(cfg)
    lo, hi = rate_thresholds(A.M)
    p2 = linear_pressure_closed_form(A.M, 2.0)
    rows = pressure_table(A, [2.0], [cfg["n"]])
    est = rows[0]["estimate"]
    out.table("thresholds", ["name", "value"], [["upper", hi], ["lower", lo], ["pressure_sigma2", p2],
                                                ["pressure_sigma2_estimate", est]])
    return ({"threshold_upper": hi, "threshold_lower": lo, "pressure_sigma2": p2,
             "pressure_sigma2_estimate": est},
            f"thresholds {_trunc(hi, 9)} {lo:.4f}")


RUNNERS = {"spectrum": run_spectrum, "traces": run_traces, "pressure": run_pressure,
           "ensemble": run_ensemble, "correlate": run_correlate, "average": run_average,
           "thresholds": run_thresholds}


def execute(cfg: dict, out_dir: Path) -> tuple[dict, str, list[Path]]:
    out = Output(cfg)
    with ThreadPoolExecutor(max_workers=cfg["threads"]) as pool:
        summary, msg = RUNNERS[cfg["experiment"]](cfg, out, pool)
    paths = out.write(out_dir, summary)
    return summary, msg, paths


# -- argument parsing ------------------------------------------------------------


def _parse_json(s: str):
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="circext", description="Twisted transfer operators for circle extensions of toral maps.")
    p.add_argument("--version", action="version", version=f"circext {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any parameter; VALUE is parsed as JSON when possible")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run an experiment from a YAML config file")
    r.add_argument("config")

    def add(name, helptext, opts):
        sp = sub.add_parser(name, parents=[common], help=helptext)
        sp.add_argument("--map", choices=["cat", "shear"])
        sp.add_argument("--tau", help="builtin (zero, cos1, const:<c>) or TrigPoly JSON path")
        sp.add_argument("--eps", type=float)
        for flag, kw in opts:
            sp.add_argument(flag, **kw)

    i, f = {"type": int}, {"type": float}
    add("spectrum", "eigenvalues and singular values of the truncated operator",
        [("--q", i), ("--r", f), ("--K", i), ("--grid", i), ("--nmax", i)])
    add("traces", "matrix traces against periodic-orbit sums",
        [("--q", i), ("--r", f), ("--K", i), ("--grid", i), ("--nmax", i)])
    add("pressure", "pressure estimates from periodic orbits",
        [("--n", {"type": int, "nargs": "+"}), ("--sigmas", {"type": float, "nargs": "+"})])
    add("ensemble", "closed-form and Monte Carlo E|Tr|^2",
        [("--N", {}), ("--q", i), ("--n", i), ("--samples", i)])
    add("correlate", "correlations by quadrature and by the spectral route",
        [("--q", i), ("--f", {"type": int, "nargs": 2}), ("--g", {"type": int, "nargs": 2}),
         ("--N", i), ("--K", i), ("--r", f), ("--grid", i), ("--sweep", {"type": int, "dest": "sweep_samples"})])
    add("average", "frequency-averaging inequality",
        [("--n", {"type": int, "nargs": "+"}), ("--T", {"type": float, "nargs": "+"})])
    add("thresholds", "mixing-rate thresholds of the linear map", [("--n", i)])
    return p


_GLOBAL = {"command", "out", "threads", "seed", "set", "verbose", "config"}


def config_from_args(args: argparse.Namespace) -> dict:
    if args.command == "run":
        cfg = load_config(args.config)
        cfg["seed"] = args.seed if args.seed != 0 else cfg["seed"]
        cfg["threads"] = args.threads if args.threads != 1 else cfg["threads"]
        params = {}
    else:
        params = {k: v for k, v in vars(args).items() if k not in _GLOBAL and v is not None}
        cfg = None
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        params[k] = _parse_json(v)
    if cfg is None:
        cfg = resolve(args.command, params, args.seed, args.threads)
    elif params:
        extra = {k: v for k, v in cfg.items() if k not in {"experiment", "seed", "threads", "out"}}
        extra.update(params)
        out = cfg.get("out")
        cfg = resolve(cfg["experiment"], extra, cfg["seed"], cfg["threads"])
        if out:
            cfg["out"] = out
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        out_dir = Path(args.out if args.command != "run" or args.out != "out" else cfg.get("out", "out"))
        cfg.pop("out", None)
        summary, msg, paths = execute(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGateError as exc:
        print(f"numerical gate failed: {exc}", file=sys.stderr)
        return EXIT_GATE
    print(f"[{cfg['experiment']}] seed={cfg['seed']} {msg} -> {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
