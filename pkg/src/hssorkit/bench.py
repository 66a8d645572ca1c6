"""Benchmark campaigns over (dim, n) x preconditioner grids.

Each cell is one GMRES(30) solve with setup time included in the wall
clock.  Failures never abort a campaign: a cell that runs out of its
iteration budget renders as NC, one stopped by the memory guard as ME, and
the remaining cells still run.  Cells execute sequentially in row-major
order so repeated campaigns produce identical tables (wall times aside).
"""

import time
from dataclasses import dataclass, field

from .errors import MemoryLimitError, WorkbenchError
from .krylov import SolverConfig, gmres
from .multigrid import twogrid_apply, twogrid_setup
from .precond import DEFAULT_MEM_LIMIT, bssor_memory_estimate, make_preconditioner
from .problems import Constant, Dc1Field, GridSpec, build_problem

__all__ = [
    "METHODS",
    "BenchPlan",
    "CellResult",
    "build_preconditioner",
    "run_cell",
    "run_bench",
    "render_csv",
    "render_markdown",
]

# column order follows the report tables
METHODS = ("gmg-hs", "gmg-ss", "ilu0", "hssor", "ssor", "bssor")

TABLES = ("isotropic", "dc1")


@dataclass(frozen=True)
class BenchPlan:
    table: str = "isotropic"
    cells: tuple = ((3, 39),)
    methods: tuple = METHODS
    cf: float = 4.5
    config: SolverConfig = field(default_factory=SolverConfig)
    mem_limit: int = DEFAULT_MEM_LIMIT

    def __post_init__(self):
        if self.table not in TABLES:
            raise ValueError(f"table must be one of {TABLES}")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for m in self.methods:
            if m not in METHODS and m != "none":
                raise ValueError(f"unknown method {m!r}")
        for dim, n in self.cells:
            GridSpec(dim=dim, n=n)  # raises on invalid combos


@dataclass
class CellResult:
    table: str
    dim: int
    n: int
    method: str
    status: str  # ok | NC | ME | ERR
    iterations: int = None  # None when no solve ran (ME, ERR)
    wall_seconds: float = None
    detail: str = ""

    @property
    def one_over_h(self):
        return self.n + 1


def build_preconditioner(kind, matrix, cf=4.5, mem_limit=DEFAULT_MEM_LIMIT,
                         partition=None, dim=None):
    """Apply-callable for any method name the CLI accepts; setup included."""
    if kind in ("gmg-hs", "gmg-ss"):
        smoother = "hssor" if kind == "gmg-hs" else "ssor"
        op = twogrid_setup(matrix, smoother=smoother, cf=cf, dim=dim,
                           partition=partition)
        return lambda r: twogrid_apply(op, r)
    return make_preconditioner(kind, matrix, mem_limit=mem_limit)


def _make_spec(table, dim, n):
    if table == "dc1":
        return GridSpec(dim=dim, n=n, coeff=Dc1Field())
    coeff = Constant(1.0, 1.0, 1.0 if dim == 3 else 0.0)
    return GridSpec(dim=dim, n=n, coeff=coeff)


def run_cell(problem, method, cf=4.5, config=None, mem_limit=DEFAULT_MEM_LIMIT,
             partition=None):
    """One solve; every failure is folded into the cell status."""
    spec = problem.spec
    cell = CellResult(
        table="dc1" if isinstance(spec.coeff, Dc1Field) else "isotropic",
        dim=spec.dim,
        n=spec.n,
        method=method,
        status="ok",
    )
    t0 = time.perf_counter()
    try:
        if method == "bssor" and bssor_memory_estimate(problem.matrix) > mem_limit:
            # guard before touching any allocation, mirroring the ME cells
            raise MemoryLimitError(
                f"bssor estimate {bssor_memory_estimate(problem.matrix)} bytes "
                f"exceeds the limit {mem_limit}"
            )
        apply_m = build_preconditioner(
            method, problem.matrix, cf=cf, mem_limit=mem_limit,
            partition=partition, dim=spec.dim,
        )
        report = gmres(problem.matrix, problem.rhs, precond=apply_m,
                       config=config or SolverConfig(), precond_label=method)
        cell.wall_seconds = time.perf_counter() - t0
        cell.iterations = report.iterations
        if not report.converged:
            cell.status = "NC"
            cell.detail = f"relres {report.final_relres:.3e} after {report.iterations}"
    except MemoryLimitError as exc:
        cell.status = "ME"
        cell.detail = str(exc)
    except WorkbenchError as exc:
        cell.status = "ERR"
        cell.detail = f"{type(exc).__name__}: {exc}"
    return cell


def run_bench(plan, progress=None):
    """Row-major sweep; the problem is assembled once per (dim, n) row."""
    results = []
    for dim, n in plan.cells:
        problem = build_problem(_make_spec(plan.table, dim, n))
        for method in plan.methods:
            if progress is not None:
                progress(f"{plan.table} {dim}D n={n} {method}")
            results.append(
                run_cell(problem, method, cf=plan.cf, config=plan.config,
                         mem_limit=plan.mem_limit)
            )
    return results


def _its_cell(r):
    return str(r.iterations) if r.status == "ok" else r.status


def _time_cell(r, include_times):
    if r.status != "ok" or not include_times:
        return "NA"
    return f"{r.wall_seconds:.1f}"


def render_csv(results, include_times=True, timestamp=None):
    lines = []
    if timestamp:
        lines.append(f"# generated {timestamp}")
    lines.append("table,dim,n,one_over_h,method,status,iterations,wall_seconds")
    for r in results:
        its = str(r.iterations) if r.status == "ok" else ""
        wall = f"{r.wall_seconds:.3f}" if r.status == "ok" and include_times else ""
        lines.append(
            f"{r.table},{r.dim},{r.n},{r.one_over_h},{r.method},{r.status},{its},{wall}"
        )
    return "\n".join(lines) + "\n"


def render_markdown(results, include_times=True):
    """Report-style table: one row per grid, its/time pair per method."""
    methods = []
    for r in results:
        if r.method not in methods:
            methods.append(r.method)
    rows = []
    for r in results:
        key = (r.table, r.dim, r.n)
        if key not in rows:
            rows.append(key)
    header = "| matrix | 1/h |"
    rule = "|---|---|"
    for m in methods:
        header += f" {m} its | {m} time |"
        rule += "---|---|"
    lines = [header, rule]
    by_key = {(r.table, r.dim, r.n, r.method): r for r in results}
    for table, dim, n in rows:
        line = f"| {table} {dim}D | {n + 1} |"
        for m in methods:
            r = by_key.get((table, dim, n, m))
            if r is None:
                line += " NA | NA |"
            else:
                line += f" {_its_cell(r)} | {_time_cell(r, include_times)} |"
        lines.append(line)
    return "\n".join(lines) + "\n"
