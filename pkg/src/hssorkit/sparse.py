"""Sparse storage for structured grids: canonical CSR and 7-band stencils.

Two matrix representations back the workbench.  ``CsrMatrix`` is canonical
compressed-sparse-row (sorted, duplicate-free column indices) used wherever
generic sparsity is enough.  ``StencilMatrix`` stores the seven bands of a
lexicographically ordered grid operator (x fastest, then y, then z) and is
the representation the hierarchical sweeps need, because the bands separate
the per-dimension couplings without any index arithmetic.

``split_offsets`` exposes that separation as the diagonal plus the three
negative-offset bands; the positive offsets of a symmetric operator are the
same arrays read one position over, which is how the sweep kernels consume
them.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse

from . import _kernels
from .errors import SingularFactorError

__all__ = [
    "CsrMatrix",
    "StencilMatrix",
    "OffsetSplit",
    "spmv",
    "tri_solve",
    "split_offsets",
    "assemble_dense",
    "save_matrix_market",
    "load_matrix_market",
]

#: assemble_dense refuses anything bigger than this (dense probing is a
#: test/verification tool, not a solver path)
DENSE_ASSEMBLY_LIMIT = 5000

_BAND_NAMES = ("center", "xm", "xp", "ym", "yp", "zm", "zp")


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _as_i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


@dataclass(eq=False)
class CsrMatrix:
    """Canonical CSR: per row, column indices strictly increasing.

    Duplicates are forbidden; the ``from_*`` constructors normalize their
    input (summing duplicates where the source format allows them).
    Explicitly stored zeros are permitted, so factorization patterns
    survive value updates.
    """

    nrows: int
    ncols: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    _scipy: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.indptr = _as_i64(self.indptr)
        self.indices = _as_i64(self.indices)
        self.values = _as_f64(self.values)
        if self.indptr.shape != (self.nrows + 1,):
            raise ValueError("indptr length must be nrows + 1")
        if self.indptr[0] != 0 or self.indptr[-1] != self.indices.shape[0]:
            raise ValueError("indptr endpoints inconsistent with indices")
        if self.values.shape != self.indices.shape:
            raise ValueError("values and indices length mismatch")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("indptr must be nondecreasing")
        if self.indices.size:
            if self.indices.min() < 0 or self.indices.max() >= self.ncols:
                raise ValueError("column index out of range")
            rows = np.repeat(np.arange(self.nrows), np.diff(self.indptr))
            same_row = rows[1:] == rows[:-1]
            if np.any(np.diff(self.indices)[same_row] <= 0):
                raise ValueError("columns must be strictly increasing per row (canonical CSR)")

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_coo(cls, nrows, ncols, rows, cols, vals):
        """Build from triplets; duplicate entries are summed."""
        m = scipy.sparse.coo_matrix(
            (_as_f64(vals), (_as_i64(rows), _as_i64(cols))), shape=(nrows, ncols)
        ).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(nrows, ncols, m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("dense input must be 2-D")
        rows, cols = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])

    @classmethod
    def from_scipy(cls, m):
        m = m.tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr, m.indices, m.data)

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    # -- accessors --------------------------------------------------------

    @property
    def nnz(self):
        return int(self.indices.shape[0])

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    def to_scipy(self):
        if self._scipy is None:
            self._scipy = scipy.sparse.csr_matrix(
                (self.values, self.indices, self.indptr), shape=self.shape, copy=False
            )
        return self._scipy

    def to_dense(self):
        return self.to_scipy().toarray()

    def transpose(self):
        return CsrMatrix.from_scipy(self.to_scipy().T.tocsr())

    def diagonal(self):
        return self.to_scipy().diagonal()


@dataclass(eq=False)
class StencilMatrix:
    """Seven-band grid operator, lexicographic ordering with x fastest.

    ``dims = (nx, ny, nz)``; flat index of node (i, j, k) is
    ``i + nx*j + nx*ny*k``.  Band arrays hold the coupling to the neighbor
    named by the band (``xm`` couples to i-1, ``zp`` to k+1, ...).  With
    Dirichlet boundaries the entries that would leave the grid are exact
    zeros; with ``periodic=True`` they wrap around instead.  2-D problems
    use nz=1 with zero z-bands, 1-D additionally ny=1.
    """

    dims: tuple
    center: np.ndarray
    xm: np.ndarray
    xp: np.ndarray
    ym: np.ndarray
    yp: np.ndarray
    zm: np.ndarray
    zp: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        nx, ny, nz = self.dims
        if min(nx, ny, nz) < 1:
            raise ValueError("grid dims must be positive")
        self.dims = (int(nx), int(ny), int(nz))
        n = nx * ny * nz
        for name in _BAND_NAMES:
            band = _as_f64(getattr(self, name))
            if band.shape != (n,):
                raise ValueError(f"band {name} must have shape ({n},)")
            setattr(self, name, band)
        if not self.periodic:
            checks = (
                (self.band3("xm")[:, :, 0], "xm at i=0"),
                (self.band3("xp")[:, :, -1], "xp at i=nx-1"),
                (self.band3("ym")[:, 0, :], "ym at j=0"),
                (self.band3("yp")[:, -1, :], "yp at j=ny-1"),
                (self.band3("zm")[0], "zm at k=0"),
                (self.band3("zp")[-1], "zp at k=nz-1"),
            )
            for arr, what in checks:
                if np.any(arr != 0.0):
                    raise ValueError(f"Dirichlet boundary mask violated: {what} must be zero")

    @property
    def n(self):
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def shape(self):
        return (self.n, self.n)

    def band3(self, name):
        """Band reshaped to (nz, ny, nx); a view, not a copy."""
        nx, ny, nz = self.dims
        return getattr(self, name).reshape(nz, ny, nx)

    def to_csr(self):
        """Equivalent canonical CSR (masked zero entries are dropped)."""
        nx, ny, nz = self.dims
        n = self.n
        idx = np.arange(n, dtype=np.int64)
        i = idx % nx
        j = (idx // nx) % ny
        k = idx // (nx * ny)
        shifts = {
            "xm": (i - 1, j, k),
            "xp": (i + 1, j, k),
            "ym": (i, j - 1, k),
            "yp": (i, j + 1, k),
            "zm": (i, j, k - 1),
            "zp": (i, j, k + 1),
        }
        rows = [idx]
        cols = [idx]
        vals = [self.center]
        for name, (ii, jj, kk) in shifts.items():
            band = getattr(self, name)
            keep = band != 0.0
            if not np.any(keep):
                continue
            ii, jj, kk = ii[keep] % nx, jj[keep] % ny, kk[keep] % nz
            rows.append(idx[keep])
            cols.append(ii + nx * jj + nx * ny * kk)
            vals.append(band[keep])
        return CsrMatrix.from_coo(
            n, n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        )

    def to_dense(self):
        return self.to_csr().to_dense()


@dataclass(eq=False)
class OffsetSplit:
    """Diagonal plus per-dimension negative-offset bands of a symmetric stencil.

    ``diag + L1 + L1^T + L2 + L2^T + L3 + L3^T`` reassembles the source
    matrix; the transpose bands are the stored ones read one grid position
    over, which is exact because the source is symmetric.
    """

    dims: tuple
    diag: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    l3: np.ndarray
    periodic: bool = False

    def _b3(self, a):
        nx, ny, nz = self.dims
        return a.reshape(nz, ny, nx)

    def reassemble(self):
        return StencilMatrix(
            dims=self.dims,
            center=self.diag.copy(),
            xm=self.l1.copy(),
            xp=np.roll(self._b3(self.l1), -1, axis=2).reshape(-1),
            ym=self.l2.copy(),
            yp=np.roll(self._b3(self.l2), -1, axis=1).reshape(-1),
            zm=self.l3.copy(),
            zp=np.roll(self._b3(self.l3), -1, axis=0).reshape(-1),
            periodic=self.periodic,
        )


def split_offsets(a):
    """Split a symmetric ``StencilMatrix`` into diagonal and offset bands.

    Returns views, not copies.  Symmetry is assumed, not checked: the
    positive bands are ignored and reconstructed by mirroring on demand.
    """
    if not isinstance(a, StencilMatrix):
        raise TypeError("split_offsets expects a StencilMatrix")
    return OffsetSplit(
        dims=a.dims, diag=a.center, l1=a.xm, l2=a.ym, l3=a.zm, periodic=a.periodic
    )


def spmv(a, x):
    """Matrix-vector product for either representation.

    The stencil path accumulates bands in ascending-column order
    (zm, ym, xm, center, xp, yp, zp), which for Dirichlet grids reproduces
    the canonical-CSR summation order exactly.
    """
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] != a.shape[1]:
        raise ValueError(f"operand length {x.shape} incompatible with {a.shape}")
    if isinstance(a, CsrMatrix):
        return a.to_scipy().dot(x)
    if isinstance(a, StencilMatrix):
        nx, ny, nz = a.dims
        x3 = x.reshape(nz, ny, nx)
        out = a.band3("zm") * np.roll(x3, 1, axis=0)
        out += a.band3("ym") * np.roll(x3, 1, axis=1)
        out += a.band3("xm") * np.roll(x3, 1, axis=2)
        out += a.band3("center") * x3
        out += a.band3("xp") * np.roll(x3, -1, axis=2)
        out += a.band3("yp") * np.roll(x3, -1, axis=1)
        out += a.band3("zp") * np.roll(x3, -1, axis=0)
        return out.reshape(-1)
    raise TypeError(f"unsupported matrix type {type(a)!r}")


def tri_solve(a, b, shape="lower", diag="stored"):
    """Solve a triangular CSR system by substitution.

    Parameters
    ----------
    a : CsrMatrix
        Triangular matrix of the requested shape (entries on the wrong
        side are rejected).
    b : array
        Right-hand side.
    shape : "lower" | "upper"
    diag : "stored" | "unit"
        With "unit" the diagonal is taken as one and any stored diagonal
        entries are ignored; with "stored" a missing or zero diagonal
        raises ``SingularFactorError``.
    """
    if shape not in ("lower", "upper"):
        raise ValueError("shape must be 'lower' or 'upper'")
    if diag not in ("stored", "unit"):
        raise ValueError("diag must be 'stored' or 'unit'")
    if a.nrows != a.ncols:
        raise ValueError("triangular solve needs a square matrix")
    b = _as_f64(b)
    if b.shape != (a.nrows,):
        raise ValueError("right-hand side length mismatch")
    if a.nnz:
        rows = np.repeat(np.arange(a.nrows), np.diff(a.indptr))
        off = a.indices > rows if shape == "lower" else a.indices < rows
        if np.any(off):
            raise ValueError(f"matrix is not {shape} triangular")
    out = np.empty_like(b)
    kernel = _kernels.csr_solve_lower if shape == "lower" else _kernels.csr_solve_upper
    bad = kernel(a.indptr, a.indices, a.values, b, out, diag == "unit")
    if bad >= 0:
        raise SingularFactorError(f"zero or missing diagonal at row {bad}")
    return out


def assemble_dense(apply_fn, n):
    """Assemble the dense matrix of a linear operator by probing unit vectors.

    Refuses n > DENSE_ASSEMBLY_LIMIT; this is a verification tool and a
    dense matrix of that size would be a mistake, not a computation.
    """
    if n > DENSE_ASSEMBLY_LIMIT:
        raise ValueError(
            f"refusing dense assembly at n={n} (limit {DENSE_ASSEMBLY_LIMIT})"
        )
    e = np.zeros(n)
    e[0] = 1.0
    first = np.asarray(apply_fn(e))
    out = np.empty((n, n), dtype=first.dtype)
    out[:, 0] = first
    for j in range(1, n):
        e[:] = 0.0
        e[j] = 1.0
        out[:, j] = apply_fn(e)
    return out


def save_matrix_market(a, path, comment=""):
    """Write in Matrix Market coordinate format.

    precision=17 keeps 17 significant digits, enough for every float64 to
    survive the text round trip bit for bit.
    """
    if isinstance(a, StencilMatrix):
        a = a.to_csr()
    scipy.io.mmwrite(str(path), a.to_scipy().tocoo(), comment=comment, precision=17)


def load_matrix_market(path):
    m = scipy.io.mmread(str(path))
    return CsrMatrix.from_scipy(scipy.sparse.csr_matrix(m))
