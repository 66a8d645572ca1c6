"""Command-line front end: solve, bench, analyze.

Exit codes: 0 converged / campaign complete, 2 not converged, 3 memory
guard, 1 usage.  All tabular output is deterministic byte for byte under
--no-timestamp, which drops the generated-at comment line and the
wall-clock cells (everything else is exactly reproducible).
"""

import argparse
import json
import sys
import time

import numpy as np

from .bench import (
    METHODS,
    BenchPlan,
    build_preconditioner,
    render_csv,
    render_markdown,
    run_bench,
)
from .errors import MemoryLimitError, WorkbenchError
from .fourier import (
    asymptotic_constant,
    bound_report,
    max_eigenpair_residual,
    spectrum_extremes,
    symbol_grid,
)
from .krylov import SolverConfig, gmres
from .precond import DEFAULT_MEM_LIMIT
from .problems import Constant, Dc1Field, GridSpec, build_problem
from .sparse import DENSE_ASSEMBLY_LIMIT

PROBLEMS = {
    "iso2d": ("isotropic", 2),
    "iso3d": ("isotropic", 3),
    "dc1-2d": ("dc1", 2),
    "dc1-3d": ("dc1", 3),
}

PRECONDS = ("none",) + METHODS


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2 (2 means NC here)
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _parse_mem(text):
    text = text.strip().upper()
    mult = 1
    if text.endswith("G"):
        mult, text = 2**30, text[:-1]
    elif text.endswith("M"):
        mult, text = 2**20, text[:-1]
    elif text.endswith("K"):
        mult, text = 2**10, text[:-1]
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse memory size {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError("memory limit must be positive")
    return int(value * mult)


def _parse_dims(text):
    cells = []
    for item in text.split(","):
        item = item.strip()
        try:
            dim, n = item.split(":")
            cells.append((int(dim), int(n)))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"expected dim:n pairs like '3:39,3:79', got {item!r}"
            )
    return tuple(cells)


def _timestamp():
    return time.strftime("%Y-%m-%dT%H:%M:%S")


def build_parser():
    parser = _Parser(prog="hssorkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="one preconditioned GMRES(30) solve")
    solve.add_argument("--problem", choices=sorted(PROBLEMS), required=True)
    solve.add_argument("--n", type=int, required=True,
                       help="interior grid points per axis; 1/h = n + 1")
    solve.add_argument("--precond", choices=PRECONDS, default="hssor")
    solve.add_argument("--cf", type=float, default=None,
                       help="two-grid coarsening factor (default 4.5 iso, 3 dc1)")
    solve.add_argument("--tol", type=float, default=1e-10)
    solve.add_argument("--restart", type=int, default=30)
    solve.add_argument("--maxit", type=int, default=500)
    solve.add_argument("--out", choices=("csv", "md", "json"), default="md")
    solve.add_argument("--partition", default=None,
                       help="aggregate-id-per-line file for gmg preconditioners")
    solve.add_argument("--mem-limit", type=_parse_mem, default=DEFAULT_MEM_LIMIT)
    solve.add_argument("--no-timestamp", action="store_true")

    bench = sub.add_parser("bench", help="table campaign over grids x methods")
    bench.add_argument("--table", choices=("isotropic", "dc1"), default="isotropic")
    bench.add_argument("--dims", type=_parse_dims, default=((3, 20), (3, 39)),
                       help="comma-separated dim:n cells, e.g. '3:39,3:79'")
    bench.add_argument("--methods", default=",".join(METHODS),
                       help=f"comma-separated subset of {','.join(METHODS)}")
    bench.add_argument("--cf", type=float, default=None)
    bench.add_argument("--tol", type=float, default=1e-10)
    bench.add_argument("--restart", type=int, default=30)
    bench.add_argument("--maxit", type=int, default=500)
    bench.add_argument("--mem-limit", type=_parse_mem, default=DEFAULT_MEM_LIMIT)
    bench.add_argument("--out-prefix", default="bench",
                       help="writes <prefix>.csv and <prefix>.md")
    bench.add_argument("--no-timestamp", action="store_true")

    analyze = sub.add_parser("analyze", help="Fourier mode-grid CSV + summary")
    analyze.add_argument("--n", type=int, required=True)
    analyze.add_argument("--mode", choices=("paper", "exact"), default="paper")
    analyze.add_argument("--convention", choices=("paper", "circulant"),
                         default="paper")
    analyze.add_argument("--l1", type=float, default=1.0)
    analyze.add_argument("--l2", type=float, default=1.0)
    analyze.add_argument("--l3", type=float, default=1.0)
    analyze.add_argument("--out", default=None, help="file path (default stdout)")
    analyze.add_argument("--no-timestamp", action="store_true")
    return parser


def _solve_config(args):
    return SolverConfig(tol=args.tol, restart=args.restart, maxit=args.maxit)


def _default_cf(table, given):
    if given is not None:
        return given
    return 3.0 if table == "dc1" else 4.5


def cmd_solve(args):
    table, dim = PROBLEMS[args.problem]
    try:
        spec = GridSpec(
            dim=dim, n=args.n,
            coeff=Dc1Field() if table == "dc1"
            else Constant(1.0, 1.0, 1.0 if dim == 3 else 0.0),
        )
    except ValueError as exc:
        print(f"hssorkit solve: {exc}", file=sys.stderr)
        return 1
    cf = _default_cf(table, args.cf)
    problem = build_problem(spec)
    t0 = time.perf_counter()
    try:
        apply_m = build_preconditioner(
            args.precond, problem.matrix, cf=cf, mem_limit=args.mem_limit,
            partition=args.partition, dim=dim,
        )
        report = gmres(problem.matrix, problem.rhs, precond=apply_m,
                       config=_solve_config(args), precond_label=args.precond)
    except MemoryLimitError as exc:
        print(f"status: ME ({exc})")
        return 3
    except WorkbenchError as exc:
        print(f"status: {type(exc).__name__} ({exc})")
        return 2
    wall = time.perf_counter() - t0
    _print_solve_report(args, report, wall)
    return 0 if report.converged else 2


def _print_solve_report(args, report, wall):
    show_time = not args.no_timestamp
    fields = [
        ("problem", args.problem),
        ("n", args.n),
        ("one_over_h", args.n + 1),
        ("precond", report.precond),
        ("restart", args.restart),
        ("tol", f"{args.tol:g}"),
        ("status", "converged" if report.converged else "NC"),
        ("iterations", report.iterations),
        ("final_relres", f"{report.final_relres:.6e}"),
    ]
    if show_time:
        fields.append(("wall_seconds", f"{wall:.2f}"))
    if args.out == "json":
        data = dict(fields)
        data["tol"] = args.tol
        data["final_relres"] = report.final_relres
        data["converged"] = report.converged
        data["history"] = report.history
        if show_time:
            data["wall_seconds"] = wall
        print(json.dumps(data, indent=2, sort_keys=True))
    elif args.out == "csv":
        lines = []
        if show_time:
            lines.append(f"# generated {_timestamp()}")
        lines.append(",".join(str(k) for k, _ in fields))
        lines.append(",".join(str(v) for _, v in fields))
        print("\n".join(lines))
    else:
        width = max(len(k) for k, _ in fields)
        print("\n".join(f"{k:<{width}}  {v}" for k, v in fields))


def cmd_bench(args):
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    try:
        plan = BenchPlan(
            table=args.table,
            cells=args.dims,
            methods=methods,
            cf=_default_cf(args.table, args.cf),
            config=_solve_config(args),
            mem_limit=args.mem_limit,
        )
    except ValueError as exc:
        print(f"hssorkit bench: {exc}", file=sys.stderr)
        return 1
    results = run_bench(plan, progress=lambda msg: print(f"... {msg}", file=sys.stderr))
    include_times = not args.no_timestamp
    stamp = _timestamp() if include_times else None
    csv_text = render_csv(results, include_times=include_times, timestamp=stamp)
    md_text = render_markdown(results, include_times=include_times)
    csv_path = f"{args.out_prefix}.csv"
    md_path = f"{args.out_prefix}.md"
    with open(csv_path, "w") as fh:
        fh.write(csv_text)
    with open(md_path, "w") as fh:
        fh.write(md_text)
    print(md_text, end="")
    print(f"wrote {csv_path} and {md_path}", file=sys.stderr)
    return 0


def _fmt(x):
    return format(float(x), ".17g")


def cmd_analyze(args):
    if args.n < 3:
        print("hssorkit analyze: --n must be at least 3", file=sys.stderr)
        return 1
    if min(args.l1, args.l2, args.l3) < 0 or max(args.l1, args.l2, args.l3) == 0:
        print("hssorkit analyze: coefficients must be nonnegative, not all zero",
              file=sys.stderr)
        return 1
    l = (args.l1, args.l2, args.l3)
    iso = l == (1.0, 1.0, 1.0)
    g = symbol_grid(args.n, 3, args.mode, args.convention, l)
    ext = spectrum_extremes(args.n, args.mode, args.convention, 3, l)
    lines = []
    if not args.no_timestamp:
        lines.append(f"# generated {_timestamp()}")
    lines.append("s,t,r,theta,phi,xi,lamA,lamT,lamP,lamB,lamBmA,lamBinvA")
    s_idx = g["s"]
    denom = args.n + 1 if args.convention == "paper" else args.n
    angles = 2.0 * np.pi * s_idx / denom
    for a_i, s in enumerate(s_idx):
        for b_i, t in enumerate(s_idx):
            for c_i, r in enumerate(s_idx):
                lines.append(
                    f"{s},{t},{r},{_fmt(angles[a_i])},{_fmt(angles[b_i])},"
                    f"{_fmt(angles[c_i])},{_fmt(g['A'][a_i, b_i, c_i])},"
                    f"{_fmt(g['T'][a_i, b_i, c_i])},{_fmt(g['P'][a_i, b_i, c_i])},"
                    f"{_fmt(g['B'][a_i, b_i, c_i])},{_fmt(g['BmA'][a_i, b_i, c_i])},"
                    f"{_fmt(g['BinvA'][a_i, b_i, c_i])}"
                )
    lines.append("#")
    lines.append(f"# summary: n={args.n} mode={args.mode} convention={args.convention} "
                 f"l=({args.l1:g},{args.l2:g},{args.l3:g})")
    null_count = int(g["null"].sum())
    lines.append(f"# modes scanned: {s_idx.shape[0] ** 3} (null modes excluded from "
                 f"extremes: {null_count})")
    for op in ("A", "T", "P", "B", "BmA", "BinvA"):
        e = ext[op]
        lines.append(
            f"# lam({op}): min={_fmt(e['min'])} at {e['min_mode'].indices} "
            f"max={_fmt(e['max'])} at {e['max_mode'].indices}"
        )
    cond = ext["BinvA"]["max"] / ext["BinvA"]["min"]
    h = 1.0 / denom
    lines.append(f"# discrete cond(B^-1 A) = {_fmt(cond)}")
    lines.append(f"# cond * h^2 = {_fmt(cond * h * h)}  (h = 1/{denom})")
    if iso:
        c = asymptotic_constant()
        lines.append(f"# asymptotic law: cond ~ C/h^2 with C = {_fmt(c)} "
                     f"-> {_fmt(c / (h * h))} at this h")
    if iso and args.mode == "paper":
        lines.append("# bound verdicts (closed-form, isotropic):")
        for row in bound_report(args.n):
            mark = "ok  " if row["holds"] else "FAIL"
            lines.append(
                f"#   [{mark}] {row['label']}: observed {_fmt(row['observed'])} "
                f"{row['comparator']} {_fmt(row['threshold'])}"
            )
    else:
        lines.append("# bound verdicts apply to the isotropic paper-mode chain only; "
                     "skipped")
    if args.convention == "circulant" and args.mode == "exact":
        if args.n * args.n <= DENSE_ASSEMBLY_LIMIT:
            res_a = max_eigenpair_residual("A", args.n, 3, l)
            res_b = max_eigenpair_residual("hssor_B", args.n, 3, l)
            lines.append("# eigenpair verification against assembled periodic "
                         "operators (all non-null modes):")
            lines.append(f"#   max residual A: {_fmt(res_a)}")
            lines.append(f"#   max residual hssor B: {_fmt(res_b)}")
            if args.n ** 3 <= DENSE_ASSEMBLY_LIMIT:
                res_c = max_eigenpair_residual("hssor_BinvA", args.n, 3, l)
                lines.append(f"#   max residual B^-1 A: {_fmt(res_c)}")
        else:
            lines.append("# eigenpair verification skipped: dense route refused "
                         f"beyond n^2 = {DENSE_ASSEMBLY_LIMIT}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        print(text, end="")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if args.command == "solve":
        return cmd_solve(args)
    if args.command == "bench":
        return cmd_bench(args)
    return cmd_analyze(args)


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
