"""Preconditioner setups and applications.

The hierarchical SSOR application is the reason this package exists: a
symmetric Gauss-Seidel-like splitting applied dimension by dimension.  With
``M`` the diagonal and ``L1, L2, L3`` the negative-offset couplings of a
symmetric stencil,

    T = (M + L1)(I + M^-1 L1^T)        lines
    P = (T + L2)(I + T^-1 L2^T)        planes
    B = (P + L3)(I + P^-1 L3^T)        volume

and ``B^-1 r`` is computed by nested forward/backward sweeps: bidiagonal
solves along x-lines, line sweeps across y, plane sweeps across z.  There is
no setup phase and no stored factor; the work arrays are two vectors.  In
2-D the z-level collapses (B = P) and in 1-D the whole hierarchy degenerates
to point SSOR, bit for bit.

Point SSOR (omega = 1), block SSOR with stored banded Cholesky factors of
the diagonal blocks, and ILU(0) on the stencil pattern are the competitors.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from . import _kernels
from .errors import FactorBreakdownError, MemoryLimitError, SingularFactorError
from .sparse import CsrMatrix, StencilMatrix, split_offsets

__all__ = [
    "identity_apply",
    "ssor_apply",
    "hssor_apply",
    "hssor_multiply",
    "Ilu0Factors",
    "ilu0_setup",
    "ilu0_apply",
    "BssorFactors",
    "bssor_setup",
    "bssor_apply",
    "bssor_memory_estimate",
    "make_preconditioner",
]

#: default allocation guard for stored block factors (bytes)
DEFAULT_MEM_LIMIT = 4 * 2**30

#: relative pivot threshold below which ILU(0) declares breakdown
ILU0_PIVOT_TOL = 1e-14


def identity_apply(r):
    """No preconditioning; returns a copy so callers may mutate the result."""
    return np.array(r, dtype=np.float64, copy=True)


def _to_csr(a):
    if isinstance(a, StencilMatrix):
        return a.to_csr()
    if isinstance(a, CsrMatrix):
        return a
    raise TypeError(f"expected CsrMatrix or StencilMatrix, got {type(a)!r}")


def ssor_apply(a, r):
    """z = B^-1 r for point SSOR at omega = 1, B = (D+L) D^-1 (D+U).

    Forward sweep solves (D+L) y = r; the backward sweep solves the
    algebraically identical unit-diagonal system (I + D^-1 U) z = y.
    Nothing is factored or stored.  StencilMatrix input is converted per
    call; convert once via ``make_preconditioner`` in iteration loops.
    """
    csr = _to_csr(a)
    if csr.nrows != csr.ncols:
        raise ValueError("ssor needs a square matrix")
    r = np.ascontiguousarray(r, dtype=np.float64)
    if r.shape != (csr.nrows,):
        raise ValueError("right-hand side length mismatch")
    y = np.empty_like(r)
    bad = _kernels.ssor_forward(csr.indptr, csr.indices, csr.values, r, y)
    if bad >= 0:
        raise SingularFactorError(f"zero or missing diagonal at row {bad}")
    z = np.empty_like(r)
    bad = _kernels.ssor_backward(csr.indptr, csr.indices, csr.values, y, z)
    if bad >= 0:
        raise SingularFactorError(f"zero or missing diagonal at row {bad}")
    return z


def _hssor_bands(a):
    if not isinstance(a, StencilMatrix):
        raise TypeError("hierarchical sweeps need a StencilMatrix (grid structure)")
    if a.periodic:
        raise ValueError("hierarchical sweeps are defined for Dirichlet (masked) bands")
    if np.any(a.center == 0.0):
        raise SingularFactorError("zero diagonal entry")
    s = split_offsets(a)
    nx, ny, nz = a.dims
    shape3 = (nz, ny, nx)
    return (
        s.diag.reshape(shape3),
        s.l1.reshape(shape3),
        s.l2.reshape(shape3),
        s.l3.reshape(shape3),
    )


def hssor_apply(a, r):
    """z = B^-1 r by the nested hierarchical sweeps described above."""
    m, l1, l2, l3 = _hssor_bands(a)
    r = np.ascontiguousarray(r, dtype=np.float64)
    if r.shape != (a.n,):
        raise ValueError("right-hand side length mismatch")
    z = np.empty_like(r)
    _kernels.hssor_solve(m, l1, l2, l3, r.reshape(m.shape), z.reshape(m.shape))
    return z


def hssor_multiply(a, x):
    """y = B x, the forward counterpart of ``hssor_apply``.

    Computed factor by factor: w = (I + P^-1 L3^T) x, then y = (P + L3) w.
    ``hssor_apply(a, hssor_multiply(a, x))`` recovers x to rounding.
    """
    m, l1, l2, l3 = _hssor_bands(a)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (a.n,):
        raise ValueError("operand length mismatch")
    y = np.empty_like(x)
    _kernels.hssor_mult(m, l1, l2, l3, x.reshape(m.shape), y.reshape(m.shape))
    return y


# ---------------------------------------------------------------------------
# ILU(0)


@dataclass(eq=False)
class Ilu0Factors:
    """Unit-lower L (diagonal stored as ones) and upper U on the pattern of A."""

    lower: CsrMatrix
    upper: CsrMatrix


def _diag_positions(csr):
    rows = np.repeat(np.arange(csr.nrows), np.diff(csr.indptr))
    hits = csr.indices == rows
    found_rows = rows[hits]
    if found_rows.shape[0] != csr.nrows:
        missing = np.setdiff1d(np.arange(csr.nrows), found_rows)[0]
        raise SingularFactorError(f"missing diagonal entry at row {missing}")
    pos = np.nonzero(hits)[0]
    return rows, pos


def ilu0_setup(a):
    """IKJ incomplete factorization with fill restricted to the pattern of A.

    A pivot smaller than ILU0_PIVOT_TOL times the row's infinity norm
    raises ``FactorBreakdownError`` naming the row.
    """
    csr = _to_csr(a)
    if csr.nrows != csr.ncols:
        raise ValueError("ilu0 needs a square matrix")
    rows, diag_pos = _diag_positions(csr)
    values = csr.values.copy()
    bad = _kernels.ilu0_factor(csr.indptr, csr.indices, values, diag_pos, ILU0_PIVOT_TOL)
    if bad >= 0:
        raise FactorBreakdownError(f"ilu0 pivot below threshold at row {bad}")
    lower_mask = csr.indices < rows
    upper_mask = ~lower_mask
    n = csr.nrows
    l_rows = np.concatenate([rows[lower_mask], np.arange(n)])
    l_cols = np.concatenate([csr.indices[lower_mask], np.arange(n)])
    l_vals = np.concatenate([values[lower_mask], np.ones(n)])
    lower = CsrMatrix.from_coo(n, n, l_rows, l_cols, l_vals)
    upper = CsrMatrix.from_coo(n, n, rows[upper_mask], csr.indices[upper_mask], values[upper_mask])
    return Ilu0Factors(lower=lower, upper=upper)


def ilu0_apply(factors, r):
    """z = U^-1 L^-1 r (kernels invoked directly; factors are trusted)."""
    r = np.ascontiguousarray(r, dtype=np.float64)
    low, up = factors.lower, factors.upper
    y = np.empty_like(r)
    _kernels.csr_solve_lower(low.indptr, low.indices, low.values, r, y, True)
    z = np.empty_like(r)
    bad = _kernels.csr_solve_upper(up.indptr, up.indices, up.values, y, z, False)
    if bad >= 0:
        raise SingularFactorError(f"zero diagonal in U at row {bad}")
    return z


# ---------------------------------------------------------------------------
# Block SSOR


@dataclass(eq=False)
class BssorFactors:
    """Stored per-block factorizations for block SSOR.

    Diagonal blocks are banded Cholesky factors (upper form); blocks must be
    symmetric positive definite, which every model problem here satisfies.
    Couplings to earlier/later blocks are kept as sparse slices so the
    sweeps touch each off-block entry once.
    """

    n_blocks: int
    block_size: int
    bandwidth: int
    cho: list
    lower_links: list
    upper_links: list


def _default_block_size(a):
    if isinstance(a, StencilMatrix):
        nx, ny, nz = a.dims
        return nx * ny if nz > 1 else nx
    raise ValueError("block_size is required for CSR input")


def bssor_memory_estimate(a, block_size=None):
    """Bytes of banded LU storage: n_blocks * block_size * (2*bandwidth + 1) * 8.

    For a 3-D stencil with plane blocks this is n^3 * (2n+1) doubles.
    """
    if block_size is None:
        block_size = _default_block_size(a)
    n = a.n if isinstance(a, StencilMatrix) else a.nrows
    if n % block_size:
        raise ValueError("block_size must divide the matrix dimension")
    if isinstance(a, StencilMatrix):
        nx, ny, nz = a.dims
        bandwidth = nx if block_size == nx * ny and nz > 1 else 1
    else:
        bandwidth = _csr_block_bandwidth(a, block_size)
    return (n // block_size) * block_size * (2 * bandwidth + 1) * 8


def _csr_block_bandwidth(csr, block_size):
    rows = np.repeat(np.arange(csr.nrows), np.diff(csr.indptr))
    same = rows // block_size == csr.indices // block_size
    if not np.any(same):
        return 0
    return int(np.max(np.abs(rows[same] - csr.indices[same])))


def bssor_setup(a, block_size=None, mem_limit=DEFAULT_MEM_LIMIT):
    """Factor the diagonal blocks; 3-D stencils get plane blocks, 2-D line blocks.

    Raises ``MemoryLimitError`` when the storage estimate exceeds
    ``mem_limit`` (pass None to disable the guard).
    """
    if block_size is None:
        block_size = _default_block_size(a)
    estimate = bssor_memory_estimate(a, block_size)
    if mem_limit is not None and estimate > mem_limit:
        raise MemoryLimitError(
            f"block factors need ~{estimate} bytes, over the {mem_limit} byte guard"
        )
    csr = _to_csr(a).to_scipy()
    n = csr.shape[0]
    n_blocks = n // block_size
    cho = []
    lower_links = []
    upper_links = []
    bandwidth = 0
    for b in range(n_blocks):
        start, end = b * block_size, (b + 1) * block_size
        block = csr[start:end, start:end].tocoo()
        bw = int(np.max(np.abs(block.row - block.col))) if block.nnz else 0
        bandwidth = max(bandwidth, bw)
        ab = np.zeros((bw + 1, block_size))
        upper = block.row <= block.col
        ab[bw + block.row[upper] - block.col[upper], block.col[upper]] = block.data[upper]
        try:
            cho.append(scipy.linalg.cholesky_banded(ab, lower=False))
        except scipy.linalg.LinAlgError as exc:
            raise SingularFactorError(f"diagonal block {b} is not positive definite") from exc
        lower_links.append(csr[start:end, :start].tocsr())
        upper_links.append(csr[start:end, end:].tocsr())
    return BssorFactors(
        n_blocks=n_blocks,
        block_size=block_size,
        bandwidth=bandwidth,
        cho=cho,
        lower_links=lower_links,
        upper_links=upper_links,
    )


def bssor_apply(factors, r):
    """Block forward sweep, then the unit block-backward sweep."""
    r = np.ascontiguousarray(r, dtype=np.float64)
    bs = factors.block_size
    y = np.empty_like(r)
    for b in range(factors.n_blocks):
        start, end = b * bs, (b + 1) * bs
        rhs = r[start:end]
        link = factors.lower_links[b]
        if link.nnz:
            rhs = rhs - link.dot(y[:start])
        y[start:end] = scipy.linalg.cho_solve_banded((factors.cho[b], False), rhs)
    z = np.empty_like(r)
    for b in range(factors.n_blocks - 1, -1, -1):
        start, end = b * bs, (b + 1) * bs
        link = factors.upper_links[b]
        if link.nnz:
            t = link.dot(z[end:])
            z[start:end] = y[start:end] - scipy.linalg.cho_solve_banded(
                (factors.cho[b], False), t
            )
        else:
            z[start:end] = y[start:end]
    return z


# ---------------------------------------------------------------------------
# Factory used by the solver front ends


def make_preconditioner(kind, matrix, mem_limit=DEFAULT_MEM_LIMIT):
    """Return an apply-callable for one of: none, ssor, hssor, ilu0, bssor.

    Two-grid preconditioners are built in ``hssorkit.multigrid`` (they need
    a coarsening factor).  Setup work happens here, so time this call for
    setup cost.
    """
    if kind == "none":
        return identity_apply
    if kind == "ssor":
        csr = _to_csr(matrix)
        return lambda r: ssor_apply(csr, r)
    if kind == "hssor":
        return lambda r: hssor_apply(matrix, r)
    if kind == "ilu0":
        factors = ilu0_setup(matrix)
        return lambda r: ilu0_apply(factors, r)
    if kind == "bssor":
        factors = bssor_setup(matrix, mem_limit=mem_limit)
        return lambda r: bssor_apply(factors, r)
    raise ValueError(f"unknown preconditioner kind {kind!r}")
