"""Model problem assembly on the unit square/cube.

Constant-coefficient diffusion discretized with the h^2-scaled 7-point
(5-point in 2-D) stencil on an n^3 (n^2) interior grid, h = 1/(n+1),
Dirichlet or periodic closure; and the piecewise-constant "dc1" field
discretized by finite volumes with harmonic-mean face transmissibilities.
Right-hand sides are fixed to b = A @ ones with zero initial guess, so runs
are reproducible without an RNG.
"""

import json
from dataclasses import dataclass

import numpy as np

from .sparse import StencilMatrix, load_matrix_market, save_matrix_market, spmv

__all__ = [
    "Constant",
    "Dc1Field",
    "GridSpec",
    "Problem",
    "kappa_dc1",
    "build_laplacian",
    "build_dc1",
    "build_matrix",
    "build_rhs",
    "build_problem",
    "save_problem",
    "load_problem",
]


@dataclass(frozen=True)
class Constant:
    """Directional diffusion coefficients (l1, l2, l3), all nonnegative."""

    l1: float = 1.0
    l2: float = 1.0
    l3: float = 0.0

    def __post_init__(self):
        if min(self.l1, self.l2, self.l3) < 0:
            raise ValueError("coefficients must be nonnegative")


@dataclass(frozen=True)
class Dc1Field:
    """Piecewise-constant field: kappa = 1000*(floor(10*x2)+1) on cells where
    floor(10*x_i) is even for every coordinate, and 1 elsewhere."""


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n: int
    boundary: str = "dirichlet"
    coeff: object = None

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if self.coeff is None:
            object.__setattr__(
                self, "coeff", Constant(1.0, 1.0, 1.0 if self.dim == 3 else 0.0)
            )
        if self.boundary not in ("dirichlet", "periodic"):
            raise ValueError("boundary must be 'dirichlet' or 'periodic'")
        if isinstance(self.coeff, Constant) and self.dim == 2 and self.coeff.l3 != 0.0:
            raise ValueError("2-D problems must have l3 == 0")

    @property
    def h(self):
        return 1.0 / (self.n + 1)

    @property
    def nunknowns(self):
        return self.n**self.dim


@dataclass
class Problem:
    spec: GridSpec
    matrix: StencilMatrix
    rhs: np.ndarray


def kappa_dc1(x):
    """Evaluate the dc1 coefficient at one point of [0,1)^dim."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0.0) or np.any(x >= 1.0):
        raise ValueError(f"point {x} outside [0,1)^dim")
    cells = np.floor(10.0 * x).astype(np.int64)
    if np.all(cells % 2 == 0):
        return 1000.0 * (cells[1] + 1)
    return 1.0


def _node_dims(spec):
    n = spec.n
    return (n, n, n) if spec.dim == 3 else (n, n, 1)


def build_laplacian(spec):
    """Constant-coefficient stencil; periodic wraps the bands, Dirichlet masks them."""
    if not isinstance(spec.coeff, Constant):
        raise ValueError("build_laplacian needs a Constant coefficient")
    nx, ny, nz = _node_dims(spec)
    n_total = nx * ny * nz
    l1, l2 = spec.coeff.l1, spec.coeff.l2
    l3 = spec.coeff.l3 if spec.dim == 3 else 0.0
    center = np.full(n_total, 2.0 * (l1 + l2 + l3))
    bands = {
        "xm": np.full(n_total, -l1),
        "xp": np.full(n_total, -l1),
        "ym": np.full(n_total, -l2),
        "yp": np.full(n_total, -l2),
        "zm": np.full(n_total, -l3) if spec.dim == 3 else np.zeros(n_total),
        "zp": np.full(n_total, -l3) if spec.dim == 3 else np.zeros(n_total),
    }
    periodic = spec.boundary == "periodic"
    if not periodic:
        for name, axis, edge in (
            ("xm", 2, 0), ("xp", 2, -1), ("ym", 1, 0), ("yp", 1, -1),
            ("zm", 0, 0), ("zp", 0, -1),
        ):
            b3 = bands[name].reshape(nz, ny, nx)
            if axis == 2:
                b3[:, :, edge] = 0.0
            elif axis == 1:
                b3[:, edge, :] = 0.0
            else:
                b3[edge] = 0.0
    if spec.dim == 2:
        bands["zm"][:] = 0.0
        bands["zp"][:] = 0.0
    return StencilMatrix(dims=(nx, ny, nz), center=center, periodic=periodic, **bands)


def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


def build_dc1(spec):
    """Finite-volume discretization of the dc1 field, homogeneous Dirichlet.

    Nodes act as cell centers at coordinates (i+1)h; interior faces get the
    harmonic mean of the two adjacent kappa values, boundary faces reuse the
    cell's own kappa (so kappa == 1 degenerates to the isotropic stencil
    exactly).
    """
    if not isinstance(spec.coeff, Dc1Field):
        raise ValueError("build_dc1 needs a Dc1Field coefficient")
    if spec.boundary != "dirichlet":
        raise ValueError("dc1 problems are Dirichlet only")
    nx, ny, nz = _node_dims(spec)
    h = spec.h
    i = np.arange(nx)
    j = np.arange(ny)
    k = np.arange(nz)
    xi = (i + 1.0) * h
    yj = (j + 1.0) * h
    zk = (k + 1.0) * h if spec.dim == 3 else np.zeros(nz)

    ci = np.floor(10.0 * xi).astype(np.int64)
    cj = np.floor(10.0 * yj).astype(np.int64)
    ck = np.floor(10.0 * zk).astype(np.int64) if spec.dim == 3 else np.zeros(nz, np.int64)
    even = (
        (ci % 2 == 0)[None, None, :]
        & (cj % 2 == 0)[None, :, None]
        & ((ck % 2 == 0)[:, None, None] if spec.dim == 3 else np.ones((nz, 1, 1), bool))
    )
    kappa = np.where(even, 1000.0 * (cj[None, :, None] + 1.0), 1.0)

    def face_band(axis):
        # transmissibility toward the negative neighbor along `axis`
        t = np.empty_like(kappa)
        sl_lo = [slice(None)] * 3
        sl_hi = [slice(None)] * 3
        sl_lo[axis] = slice(1, None)
        sl_hi[axis] = slice(None, -1)
        t[tuple(sl_lo)] = _harmonic(kappa[tuple(sl_lo)], kappa[tuple(sl_hi)])
        sl_edge = [slice(None)] * 3
        sl_edge[axis] = 0
        t[tuple(sl_edge)] = kappa[tuple(sl_edge)]
        return t

    tx = face_band(2)
    ty = face_band(1)
    tz = face_band(0) if spec.dim == 3 else np.zeros_like(kappa)

    # mirror to the positive side; the outermost positive face is a boundary face
    def mirrored(t, axis):
        out = np.empty_like(t)
        sl_lo = [slice(None)] * 3
        sl_hi = [slice(None)] * 3
        sl_lo[axis] = slice(1, None)
        sl_hi[axis] = slice(None, -1)
        out[tuple(sl_hi)] = t[tuple(sl_lo)]
        sl_edge = [slice(None)] * 3
        sl_edge[axis] = -1
        out[tuple(sl_edge)] = kappa[tuple(sl_edge)]
        return out

    tx_p = mirrored(tx, 2)
    ty_p = mirrored(ty, 1)
    tz_p = mirrored(tz, 0) if spec.dim == 3 else np.zeros_like(kappa)

    center = tx + tx_p + ty + ty_p + tz + tz_p

    def masked(t, axis, edge):
        out = -t
        sl = [slice(None)] * 3
        sl[axis] = edge
        out[tuple(sl)] = 0.0
        return out.reshape(-1)

    return StencilMatrix(
        dims=(nx, ny, nz),
        center=center.reshape(-1),
        xm=masked(tx, 2, 0),
        xp=masked(tx_p, 2, -1),
        ym=masked(ty, 1, 0),
        yp=masked(ty_p, 1, -1),
        zm=masked(tz, 0, 0) if spec.dim == 3 else np.zeros(nx * ny * nz),
        zp=masked(tz_p, 0, -1) if spec.dim == 3 else np.zeros(nx * ny * nz),
        periodic=False,
    )


def build_matrix(spec):
    if isinstance(spec.coeff, Dc1Field):
        return build_dc1(spec)
    return build_laplacian(spec)


def build_rhs(spec, matrix=None):
    """b = A @ ones; the companion initial guess is the zero vector."""
    if matrix is None:
        matrix = build_matrix(spec)
    return spmv(matrix, np.ones(matrix.n))


def build_problem(spec):
    matrix = build_matrix(spec)
    return Problem(spec=spec, matrix=matrix, rhs=build_rhs(spec, matrix))


def _coeff_to_json(coeff):
    if isinstance(coeff, Constant):
        return {"kind": "constant", "l1": coeff.l1, "l2": coeff.l2, "l3": coeff.l3}
    return {"kind": "dc1"}


def _coeff_from_json(d):
    if d["kind"] == "constant":
        return Constant(d["l1"], d["l2"], d["l3"])
    if d["kind"] == "dc1":
        return Dc1Field()
    raise ValueError(f"unknown coefficient kind {d['kind']!r}")


def save_problem(problem, base_path):
    """Write <base>.mtx plus a <base>.json sidecar that regenerates the spec."""
    base = str(base_path)
    save_matrix_market(problem.matrix, base + ".mtx")
    sidecar = {
        "dim": problem.spec.dim,
        "n": problem.spec.n,
        "boundary": problem.spec.boundary,
        "coeff": _coeff_to_json(problem.spec.coeff),
        "rhs": "matrix @ ones",
        "x0": "zeros",
        "ordering": "lexicographic, x fastest",
    }
    with open(base + ".json", "w") as f:
        json.dump(sidecar, f, indent=2, sort_keys=True)
        f.write("\n")


def load_problem(base_path):
    """Rebuild a problem from its sidecar (the .mtx is for external consumers)."""
    base = str(base_path)
    with open(base + ".json") as f:
        sidecar = json.load(f)
    spec = GridSpec(
        dim=sidecar["dim"],
        n=sidecar["n"],
        boundary=sidecar["boundary"],
        coeff=_coeff_from_json(sidecar["coeff"]),
    )
    return build_problem(spec)
