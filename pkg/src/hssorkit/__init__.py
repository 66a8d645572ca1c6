"""Structured sparse workbench: hierarchical SSOR, Fourier symbol analysis,
aggregation two-grid, and Krylov solvers.

The usual workflow is build_problem -> make_preconditioner (or
twogrid_setup) -> gmres, with the fourier module supplying closed-form
spectra to check the solver behaviour against.
"""

from .errors import (
    DivergenceError,
    FactorBreakdownError,
    MemoryLimitError,
    NotSpdError,
    SingularFactorError,
    WorkbenchError,
)
from .fourier import (
    FourierMode,
    SymbolChain,
    asymptotic_constant,
    bound_report,
    cond_asymptotic,
    cond_discrete,
    spectrum_extremes,
    symbol_chain,
    symbol_grid,
    verify_eigenpair,
)
from .krylov import SolveReport, SolverConfig, cg, gmres, relres
from .multigrid import (
    AggregateMap,
    TwoGridOp,
    aggregate_matching,
    galerkin_coarse,
    twogrid_apply,
    twogrid_setup,
)
from .precond import (
    bssor_setup,
    hssor_apply,
    hssor_multiply,
    ilu0_setup,
    make_preconditioner,
    ssor_apply,
)
from .problems import (
    Constant,
    Dc1Field,
    GridSpec,
    Problem,
    build_problem,
    load_problem,
    save_problem,
)
from .sparse import (
    CsrMatrix,
    StencilMatrix,
    load_matrix_market,
    save_matrix_market,
    tri_solve,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateMap",
    "Constant",
    "CsrMatrix",
    "Dc1Field",
    "DivergenceError",
    "FactorBreakdownError",
    "FourierMode",
    "GridSpec",
    "MemoryLimitError",
    "NotSpdError",
    "Problem",
    "SingularFactorError",
    "SolveReport",
    "SolverConfig",
    "StencilMatrix",
    "SymbolChain",
    "TwoGridOp",
    "WorkbenchError",
    "aggregate_matching",
    "asymptotic_constant",
    "bound_report",
    "bssor_setup",
    "build_problem",
    "cg",
    "cond_asymptotic",
    "cond_discrete",
    "galerkin_coarse",
    "gmres",
    "hssor_apply",
    "hssor_multiply",
    "ilu0_setup",
    "load_matrix_market",
    "load_problem",
    "make_preconditioner",
    "relres",
    "save_matrix_market",
    "save_problem",
    "spectrum_extremes",
    "ssor_apply",
    "symbol_chain",
    "symbol_grid",
    "tri_solve",
    "twogrid_apply",
    "twogrid_setup",
    "verify_eigenpair",
]
