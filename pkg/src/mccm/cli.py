"""Command-line front end.

Exit codes: 0 success, 1 I/O or bad input file, 2 usage, 3 numerical/solver.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from mccm import io
from mccm.errors import (
    DomainError,
    MissingAssortment,
    SingularSystem,
    UnderdeterminedSystem,
    WalkLimitExceeded,
    ZeroDenominator,
)
from mccm.model import generate_random, validate
from mccm.oracle import EXACT_DENOM_TOL, NOISY_DENOM_TOL, exact_table
from mccm.plan import build_full_plan, build_plan, count_required
from mccm.recovery import RecoveryOptions, recover
from mccm.simulate import DEFAULT_MAX_STEPS, SampleConfig, error_vs_samples, estimate_table

logger = logging.getLogger("mccm")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3
SOLVER_ERRORS = (SingularSystem, UnderdeterminedSystem, ZeroDenominator, WalkLimitExceeded)


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(tok)) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _sidecar(path) -> Path:
    return Path(str(path) + ".meta.json")


def _load_model(path, renormalize):
    try:
        model = io.read_model(path, renormalize=renormalize)
    except OSError as exc:
        raise InputError(f"cannot read model {path}: {exc}") from exc
    except DomainError as exc:
        raise InputError(f"bad model file {path}: {exc}") from exc
    problems = validate(model)
    if problems:
        codes = ", ".join(v.code.value for v in problems)
        raise InputError(f"model {path} is invalid: {codes}")
    return model


def _plan(n, r, mode):
    if n < 3:
        raise UsageError(f"--n must be at least 3, got {n}")
    if not 2 <= r <= n - 1:
        raise UsageError(f"--r must lie in [2, {n - 1}] for n={n}, got {r}")
    return build_full_plan(n, r) if mode == "all" else build_plan(n, r)


def cmd_generate(args) -> int:
    if args.n < 3:
        raise UsageError(f"--n must be at least 3, got {args.n}")
    if not 0.0 <= args.mass < 1.0:
        raise UsageError(f"--mass must lie in [0, 1), got {args.mass}")
    model = generate_random(args.n, args.mass, args.seed)
    io.write_model(args.out, model)
    problems = validate(model)
    print(f"wrote {args.out}: n={model.n} violations={[v.code.value for v in problems]}")
    return EXIT_OK


def cmd_plan(args) -> int:
    plan = _plan(args.n, args.r, args.mode)
    text = io.encode_plan(plan)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        c_r, c_r1 = count_required(plan)
        print(f"wrote {args.out}: {c_r} of size {plan.r}, {c_r1} of size {plan.r + 1}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_tables(args) -> int:
    model = _load_model(args.model, args.renormalize)
    plan = _plan(model.n, args.r, args.plan)
    table = exact_table(model, plan.required_assortments)
    io.write_table(args.out, table)
    io.write_json(
        _sidecar(args.out),
        {"source": "exact", "n": model.n, "r": args.r, "plan": args.plan,
         "model_hash": io.model_hash(model)},
    )
    print(f"wrote {args.out}: {len(table)} records")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.m < 1:
        raise UsageError(f"--m must be positive, got {args.m}")
    if args.laplace < 0:
        raise UsageError("--laplace must be nonnegative")
    model = _load_model(args.model, args.renormalize)
    if args.max_steps < model.n:
        raise UsageError(f"--max-steps must be at least n={model.n}")
    plan = _plan(model.n, args.r, args.plan)
    cfg = SampleConfig(args.m, args.seed, args.max_steps, args.laplace)
    table = estimate_table(model, plan.required_assortments, cfg)
    io.write_table(args.out, table)
    io.write_json(
        _sidecar(args.out),
        {"source": "simulate", "n": model.n, "r": args.r, "plan": args.plan,
         "seed": args.seed, "m": args.m, "laplace": args.laplace,
         "model_hash": io.model_hash(model)},
    )
    print(f"wrote {args.out}: {len(table)} records, m={args.m}")
    return EXIT_OK


def _denom_tol(args) -> float:
    if args.denom_tol is not None:
        return args.denom_tol
    meta = _sidecar(args.tables)
    if meta.exists():
        try:
            if json.loads(meta.read_text()).get("source") == "simulate":
                return NOISY_DENOM_TOL
        except (OSError, ValueError):
            pass
    return EXACT_DENOM_TOL


def cmd_recover(args) -> int:
    plan = _plan(args.n, args.r, args.plan)
    try:
        table = io.read_table(args.tables, n=args.n)
    except OSError as exc:
        raise InputError(f"cannot read tables {args.tables}: {exc}") from exc
    except DomainError as exc:
        raise InputError(f"bad tables file {args.tables}: {exc}") from exc
    missing = [S for S in plan.required_assortments if S not in table]
    if missing:
        names = ", ".join(str(list(S)) for S in missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        raise InputError(f"tables file lacks required assortments: {names}{more}")
    truth = _load_model(args.truth, False) if args.truth else None

    opts = RecoveryOptions(
        rank_tolerance=args.rank_tol, denom_tolerance=_denom_tol(args), strict=False
    )
    report = recover(table, plan, opts, truth=truth)
    io.write_json(args.out, report.to_dict())
    worst = max(report.per_system_residual.values())
    print(f"wrote {args.out}: max residual {worst:.3e}, projected {report.projected}")
    if report.max_param_error is not None:
        print(f"max_param_error {report.max_param_error:.17g}")
    if report.failures:
        for key, msg in report.failures.items():
            print(f"system {key} failed: {msg}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_study(args) -> int:
    if not args.m:
        raise UsageError("--m needs at least one sample size")
    if not args.seeds:
        raise UsageError("--seeds needs at least one seed")
    if any(m < 1 for m in args.m):
        raise UsageError("sample sizes must be positive")
    model = _load_model(args.model, args.renormalize)
    plan = _plan(model.n, args.r, args.plan)
    opts = RecoveryOptions(denom_tolerance=NOISY_DENOM_TOL, rank_tolerance=args.rank_tol)
    rows = []
    for seed in args.seeds:
        for pt in error_vs_samples(model, plan, args.m, seed, opts, laplace=args.laplace):
            err = pt.failure if pt.failure else format(pt.max_param_error, ".17g")
            rows.append((pt.m, err))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "max_param_error"])
        w.writerows(rows)
    print(f"wrote {args.out}: {len(rows)} rows")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mccm",
        description="Markov chain choice model: simulation and parameter recovery.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random valid model file")
    g.add_argument("--n", type=int, required=True, help="number of products (>= 3)")
    g.add_argument("--mass", type=float, default=0.0,
                   help="no-purchase probability of every product row, in [0, 1)")
    g.add_argument("--seed", type=int, default=0, help="random seed")
    g.add_argument("--out", required=True, help="output model JSON path")
    g.set_defaults(func=cmd_generate)

    pl = sub.add_parser("plan", help="list the assortments a recovery needs")
    pl.add_argument("--n", type=int, required=True, help="number of products")
    pl.add_argument("--r", type=int, required=True, help="assortment size, 2 <= r <= n-1")
    pl.add_argument("--mode", choices=["minimal", "all"], default="minimal",
                    help="fan construction or every subset of size r and r+1")
    pl.add_argument("--out", help="output path (default: stdout)")
    pl.set_defaults(func=cmd_plan)

    def model_flags(sp):
        sp.add_argument("--model", required=True, help="model JSON path")
        sp.add_argument("--r", type=int, required=True, help="assortment size")
        sp.add_argument("--plan", choices=["minimal", "all"], default="minimal",
                        help="which assortments to cover")
        sp.add_argument("--renormalize", action="store_true",
                        help="rescale lambda and rho rows to sum to 1 before validating")

    t = sub.add_parser("tables", help="exact choice tables for a plan")
    model_flags(t)
    t.add_argument("--out", required=True, help="output choice-table path")
    t.set_defaults(func=cmd_tables)

    s = sub.add_parser("simulate", help="Monte Carlo estimated choice tables")
    model_flags(s)
    s.add_argument("--m", type=int, required=True, help="samples per assortment")
    s.add_argument("--seed", type=int, default=0, help="random seed")
    s.add_argument("--laplace", type=float, default=0.0,
                   help="pseudo-count added to every outcome")
    s.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS,
                   help="cap on simulated walk length")
    s.add_argument("--out", required=True, help="output choice-table path")
    s.set_defaults(func=cmd_simulate)

    rc = sub.add_parser("recover", help="recover model parameters from choice tables")
    rc.add_argument("--tables", required=True, help="choice-table path")
    rc.add_argument("--n", type=int, required=True, help="number of products")
    rc.add_argument("--r", type=int, required=True, help="assortment size")
    rc.add_argument("--plan", choices=["minimal", "all"], default="minimal",
                    help="assortment plan the tables follow")
    rc.add_argument("--truth", help="ground-truth model JSON, for error reporting")
    rc.add_argument("--rank-tol", type=float, default=1e-9,
                    help="relative singular-value threshold")
    rc.add_argument("--denom-tol", type=float, default=None,
                    help="smallest usable denominator (default 1e-12, "
                         "or 1e-6 for simulated tables)")
    rc.add_argument("--out", required=True, help="output report JSON path")
    rc.set_defaults(func=cmd_recover)

    st = sub.add_parser("study", help="recovery error versus sample size, as CSV")
    model_flags(st)
    st.add_argument("--m", type=_int_list, required=True,
                    help="comma-separated sample sizes, e.g. 1000,10000")
    st.add_argument("--seeds", type=_int_list, default=[0], help="comma-separated seeds")
    st.add_argument("--laplace", type=float, default=0.0,
                    help="pseudo-count added to every outcome")
    st.add_argument("--rank-tol", type=float, default=1e-9,
                    help="relative singular-value threshold")
    st.add_argument("--out", required=True, help="output CSV path")
    st.set_defaults(func=cmd_study)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mccm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, MissingAssortment, OSError) as exc:
        print(f"mccm: {exc}", file=sys.stderr)
        return EXIT_IO
    except SOLVER_ERRORS as exc:
        print(f"mccm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
