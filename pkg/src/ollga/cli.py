"""Command line interface.

Exit codes: 0 on success, 1 when an ``oracle`` check fails, 2 on
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import lambda_star, predict, two_term_argmin
from .bitspace import BitString
from .drift import (
    exact_bitmutation_law,
    exact_composed_offspring_law,
    exact_goodbits_law,
    probe_drift,
    tvd,
)
from .engine import VARIANTS, GaParams, run
from .report import MODES, ReportError, render_table, report, write_drift_csv
from .rng import RngStream, derive_seed
from .sweep import (
    WORKERS_ENV,
    ResultRow,
    SpecError,
    budget_for,
    default_workers,
    load_spec,
    run_sweep,
    write_rows,
    instance_for,
)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

TVD_TOLERANCE = 1e-12


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="problem size")
    p.add_argument("--lam", type=int, help="offspring population size (default: round(lambda*(n)))")
    p.add_argument("--k", type=float, help="expected mutation strength, p = k/n (default: lambda)")
    p.add_argument("--r", type=float, default=1.0, help="crossover strength, c = r/k (default: 1)")
    p.add_argument("--variant", choices=VARIANTS, default="standard")
    p.add_argument("--seed", type=int, required=True)


def _params(args, budget=None) -> GaParams:
    lam = args.lam if args.lam is not None else max(1, round(lambda_star(args.n)))
    k = args.k if args.k is not None else float(lam)
    return GaParams(args.n, lam, k, args.r, args.variant, budget)


def cmd_run(args) -> int:
    params = _params(args, budget_for(args.budget, args.n))
    inst = instance_for(args.n, args.target, args.target_seed)
    rows = []
    for rep in range(args.reps):
        seed = derive_seed(args.seed, rep) if args.reps > 1 else args.seed
        out = run(params, inst, RngStream(seed))
        rows.append(ResultRow(params.n, params.lam, params.k, params.r, params.variant, seed, out.T, out.F,
                              out.success, out.final_distance))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_rows(rows, fh)
    else:
        write_rows(rows, sys.stdout)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_spec(args.config, master_seed=args.seed, reps=args.reps, output=args.output,
                     timing=True if args.timing else None)
    summary = run_sweep(spec, parallelism=args.workers)
    print(f"wrote {summary.rows} rows to {summary.csv_path} (metadata: {summary.sidecar_path})")
    if summary.skipped:
        print(f"skipped {len(summary.skipped)} cells; reasons are in the metadata file")
    if summary.failures:
        print(f"{len(summary.failures)} runs failed", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_drift(args) -> int:
    params = _params(args)
    samples = probe_drift(params, args.d0, args.reps, RngStream(args.seed))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            write_drift_csv(params, args.seed, samples, fh)
    gains = [s.gain for s in samples]
    mean = sum(gains) / len(gains)
    violations = sum(s.gain > s.ell for s in samples)
    print(f"d0={args.d0} probes={len(samples)} mean_gain={mean:.6g} k={params.k:.6g} cap_violations={violations}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    failures = 0
    checks = 0
    for n in args.sizes:
        x = BitString.random(n, RngStream(derive_seed(args.seed, n)))
        for k in sorted({1.0, n / 2, float(n)}):
            for r in sorted({0.5, 1.0, min(2.0, k)}):
                if r > k:
                    continue
                law = exact_composed_offspring_law(n, x, k, r, method=args.method)
                d = tvd(law, exact_bitmutation_law(n, x, r / n))
                ok = d < TVD_TOLERANCE
                checks += 1
                failures += not ok
                print(f"{'PASS' if ok else 'FAIL'} composed law n={n} k={k:g} r={r:g} tvd={d:.3e}")
    for n, ell, d in [(20, 5, 8), (10, 10, 4), (30, 0, 7)]:
        pmf = exact_goodbits_law(n, ell, d)
        ok = abs(pmf.mean() - ell * d / n) < 1e-9
        checks += 1
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'} good-bit law mean n={n} ell={ell} d={d} mean={pmf.mean():.12g}")
    print(f"{checks - failures}/{checks} oracle checks passed")
    return EXIT_FAILED if failures else EXIT_OK


def cmd_predict(args) -> int:
    rows = []
    for n in args.n:
        pv = predict(n, args.lams)
        lam_opt, best = two_term_argmin(n)
        rows.append({
            "n": n, "lambda_star": pv.lambda_star, "f_star": pv.f_star,
            "two_term": pv.two_term, "two_term_argmin": lam_opt, "two_term_min": best,
        })
    if args.json:
        print(json.dumps(rows, indent=2))
        return EXIT_OK
    for r in rows:
        print(f"n={r['n']}  lambda*={r['lambda_star']:.6g}  F*={r['f_star']:.6g}  "
              f"two-term argmin={r['two_term_argmin']} (min {r['two_term_min']:.6g})")
        for lam, v in r["two_term"].items():
            print(f"  lambda={lam:<6d} two-term={v:.6g}")
    return EXIT_OK


def cmd_report(args) -> int:
    doc = report(args.results, args.mode)
    if args.json:
        Path(args.json).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(render_table(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ollga", description="(1+(lambda,lambda)) GA experiments on OneMax")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one parameter cell")
    _add_params(p)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--budget", default=None, help="evaluation budget: count or '<c>*nlogn'")
    p.add_argument("--target", choices=("ones", "random"), default="ones")
    p.add_argument("--target-seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a sweep described by a TOML file")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="master seed (overrides the file)")
    p.add_argument("--reps", type=int)
    p.add_argument("--output", "-o")
    p.add_argument("--workers", type=int, default=None, help=f"worker processes (default: ${WORKERS_ENV} or 1)")
    p.add_argument("--timing", action="store_true", help="record wall-clock time per run")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("drift", help="one-iteration drift probes from a fixed fitness distance")
    _add_params(p)
    p.add_argument("--d0", type=int, required=True)
    p.add_argument("--reps", type=int, default=10_000)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_drift)

    p = sub.add_parser("oracle", help="exact-law checks")
    p.add_argument("--sizes", type=int, nargs="+", default=[2, 4, 6, 8])
    p.add_argument("--method", choices=("count", "enumerate"), default="enumerate")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("predict", help="print lambda*, F* and the two-term runtime curve")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--lams", type=int, nargs="+", default=[1, 2, 4, 8, 16, 32, 64, 128])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="aggregate result files")
    p.add_argument("results", nargs="+")
    p.add_argument("--mode", choices=MODES, default="summary")
    p.add_argument("--json", help="also write the report document here")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "workers", None) is None and args.command == "sweep":
        args.workers = default_workers()
    try:
        return args.func(args)
    except (SpecError, ReportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
