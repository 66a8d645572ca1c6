"""Two-grid correction with aggregation coarsening.

The preconditioner is one pre-smoothing step plus an exact coarse-grid
correction:

    B^-1 = S^-1 + P A_c^-1 P^T (I - A S^-1)

with S the smoother factor (point SSOR or the hierarchical factor),
P piecewise-constant interpolation over aggregates, and A_c = P^T A P the
Galerkin coarse operator, solved directly.  For a symmetric positive
definite A and an SPD smoother split this makes I - B^-1 A a contraction.

Aggregates come from repeated heavy-edge matching on the strength graph
|a_ij|: each round pairs every unmatched node with its strongest available
neighbor (ascending node order, ties to the smallest index), then the
matched graph is coarsened by Galerkin on the absolute values and the next
round runs there.  The final round stops pairing exactly when the target
count round(N / cf^dim) is reached, so the aggregate count is deterministic
and hits the requested coarsening factor as closely as integer rounding
allows.  A precomputed partition can be supplied instead, one aggregate id
per line, line i describing node i.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import _kernels
from .precond import hssor_apply, ssor_apply
from .sparse import CsrMatrix, StencilMatrix, spmv

__all__ = [
    "AggregateMap",
    "aggregate_matching",
    "build_interpolation",
    "galerkin_coarse",
    "TwoGridOp",
    "twogrid_setup",
    "twogrid_apply",
]

COARSE_DIRECT_LIMIT = 150_000

SMOOTHERS = ("hssor", "ssor")


@dataclass(frozen=True)
class AggregateMap:
    """node -> aggregate id, ids compact 0..n_aggregates-1, none empty."""

    part: np.ndarray
    n_aggregates: int

    def __post_init__(self):
        part = np.ascontiguousarray(self.part, dtype=np.int64)
        object.__setattr__(self, "part", part)
        if part.ndim != 1 or part.shape[0] == 0:
            raise ValueError("partition must be a nonempty 1-D array")
        if part.min() < 0 or part.max() >= self.n_aggregates:
            raise ValueError("aggregate ids must lie in [0, n_aggregates)")
        sizes = np.bincount(part, minlength=self.n_aggregates)
        if np.any(sizes == 0):
            empty = int(np.argmin(sizes))
            raise ValueError(f"aggregate {empty} is empty")

    @property
    def nnodes(self):
        return self.part.shape[0]

    @classmethod
    def from_array(cls, part):
        part = np.ascontiguousarray(part, dtype=np.int64)
        return cls(part=part, n_aggregates=int(part.max()) + 1 if part.size else 0)

    @classmethod
    def from_file(cls, path, nnodes=None):
        part = np.loadtxt(path, dtype=np.int64, ndmin=1)
        if nnodes is not None and part.shape[0] != nnodes:
            raise ValueError(
                f"partition file has {part.shape[0]} lines, expected {nnodes}"
            )
        return cls.from_array(part)


def _to_csr(a):
    if isinstance(a, StencilMatrix):
        return a.to_csr()
    if isinstance(a, CsrMatrix):
        return a
    raise TypeError(f"expected CsrMatrix or StencilMatrix, got {type(a).__name__}")


def _strength_graph(csr):
    """|off-diagonal| weights as a scipy CSR with sorted indices."""
    s = csr.to_scipy().copy()
    s.data = np.abs(s.data)
    s.setdiag(0.0)
    s.eliminate_zeros()
    s.sort_indices()
    return s


def _merge_pairs(partner, n):
    """Compact ids for matched pairs + singletons, ordered by smallest node."""
    nodes = np.arange(n, dtype=np.int64)
    reps = np.where((partner < 0) | (nodes < partner), nodes, partner)
    uniq = np.unique(reps)
    lut = np.empty(n, dtype=np.int64)
    lut[uniq] = np.arange(uniq.shape[0], dtype=np.int64)
    return lut[reps], uniq.shape[0]


def aggregate_matching(a, cf=4.5, dim=None):
    """Heavy-edge matching rounds down to round(N / cf**dim) aggregates."""
    csr = _to_csr(a)
    if dim is None:
        if isinstance(a, StencilMatrix):
            dim = 3 if a.dims[2] > 1 else 2
        else:
            raise ValueError("dim is required for CSR input")
    if cf <= 1.0:
        raise ValueError("coarsening factor must exceed 1")
    n = csr.nrows
    target = max(1, int(round(n / cf**dim)))
    fine_to_cur = np.arange(n, dtype=np.int64)
    cur_n = n
    graph = _strength_graph(csr)
    while cur_n > target:
        partner = np.full(cur_n, -1, dtype=np.int64)
        matched = _kernels.hem_round(
            graph.indptr.astype(np.int64),
            graph.indices.astype(np.int64),
            graph.data,
            cur_n - target,
            partner,
        )
        if matched == 0:
            # no edges left to contract: fold trailing ids pairwise
            partner[-2:] = [cur_n - 1, cur_n - 2]
        new_id, new_n = _merge_pairs(partner, cur_n)
        fine_to_cur = new_id[fine_to_cur]
        cur_n = new_n
        if cur_n <= target:
            break
        coo = graph.tocoo()
        graph = scipy.sparse.coo_matrix(
            (coo.data, (new_id[coo.row], new_id[coo.col])), shape=(cur_n, cur_n)
        ).tocsr()
        graph.setdiag(0.0)
        graph.eliminate_zeros()
        graph.sort_indices()
    return AggregateMap(part=fine_to_cur, n_aggregates=cur_n)


def build_interpolation(agg_map):
    """Piecewise-constant interpolation: P[i, part[i]] = 1."""
    n = agg_map.nnodes
    return CsrMatrix.from_coo(
        n,
        agg_map.n_aggregates,
        rows=np.arange(n, dtype=np.int64),
        cols=agg_map.part,
        vals=np.ones(n),
    )


def galerkin_coarse(a, agg_map):
    """A_c[I, J] = sum of a_ij over i in I, j in J (exactly P^T A P)."""
    csr = _to_csr(a)
    coo = csr.to_scipy().tocoo()
    nagg = agg_map.n_aggregates
    return CsrMatrix.from_coo(
        nagg, nagg, rows=agg_map.part[coo.row], cols=agg_map.part[coo.col], vals=coo.data
    )


@dataclass(eq=False)
class TwoGridOp:
    matrix: object
    smoother: str
    agg_map: AggregateMap
    coarse: CsrMatrix
    _coarse_lu: object = field(repr=False)

    @property
    def n_coarse(self):
        return self.coarse.nrows


def twogrid_setup(a, smoother="hssor", cf=4.5, dim=None, partition=None,
                  coarse_limit=COARSE_DIRECT_LIMIT):
    """Build the two-grid operator: aggregates, Galerkin coarse matrix, LU.

    smoother "hssor" needs banded stencil storage; "ssor" accepts anything.
    partition may be an AggregateMap, a node->aggregate array, or a path to
    a partition file; when given, cf is ignored.
    """
    if smoother not in SMOOTHERS:
        raise ValueError(f"smoother must be one of {SMOOTHERS}")
    if smoother == "hssor" and not isinstance(a, StencilMatrix):
        raise TypeError("the hierarchical smoother needs a StencilMatrix")
    if partition is None:
        agg_map = aggregate_matching(a, cf=cf, dim=dim)
    elif isinstance(partition, AggregateMap):
        agg_map = partition
    elif isinstance(partition, (str,)) or hasattr(partition, "__fspath__"):
        agg_map = AggregateMap.from_file(partition, nnodes=_to_csr(a).nrows)
    else:
        agg_map = AggregateMap.from_array(partition)
    if agg_map.nnodes != _to_csr(a).nrows:
        raise ValueError("partition size does not match the matrix")
    if agg_map.n_aggregates > coarse_limit:
        raise ValueError(
            f"coarse space of {agg_map.n_aggregates} exceeds the direct-solve "
            f"limit {coarse_limit}"
        )
    coarse = galerkin_coarse(a, agg_map)
    lu = scipy.sparse.linalg.splu(coarse.to_scipy().tocsc())
    return TwoGridOp(
        matrix=a, smoother=smoother, agg_map=agg_map, coarse=coarse, _coarse_lu=lu
    )


def twogrid_apply(op, r):
    """z = S^-1 r + P A_c^-1 P^T (r - A S^-1 r)."""
    r = np.ascontiguousarray(r, dtype=np.float64)
    if op.smoother == "hssor":
        z = hssor_apply(op.matrix, r)
    else:
        z = ssor_apply(op.matrix, r)
    defect = r - spmv(op.matrix, z)
    # P^T is aggregate summation, P is replication over aggregates
    coarse_rhs = np.bincount(op.agg_map.part, weights=defect,
                             minlength=op.agg_map.n_aggregates)
    correction = op._coarse_lu.solve(coarse_rhs)
    return z + correction[op.agg_map.part]
