"""Symbol analysis of the hierarchical splitting on the periodic model operator.

Each level of the hierarchy has a scalar symbol per Fourier mode.  With
``m = 2(l1+l2+l3)`` and folded angles theta, phi, xi:

    lam(A)   = 4 (l1 sin^2(theta/2) + l2 sin^2(phi/2) + l3 sin^2(xi/2))
    lam(T)   = m - 2 l1 cos(theta)            [+ l1^2/m in 'exact' mode]
    lam(P)   = lam(T) - 2 l2 cos(phi) + l2^2 / lam(T)
    lam(B)   = lam(P) - 2 l3 cos(xi)  + l3^2 / lam(P)
    lam(B-A) = [l1^2/m] + l2^2/lam(T) + l3^2/lam(P)
    lam(B^-1 A) = lam(A) / lam(B)

Two analysis modes: ``"paper"`` keeps the simplified line-level symbol
``m - 2 l1 cos(theta)``; ``"exact"`` adds the cross term ``l1^2/m``, which
makes the whole chain match the assembled periodic operator to rounding.

Two mode conventions: ``"paper"`` uses theta_s = 2 pi s/(n+1) for
s = 1..n; ``"circulant"`` uses theta_s = 2 pi s/n for s = 0..n-1, the exact
eigenangles of the size-n circulant blocks.  The all-zero circulant mode is
the null mode of the periodic operator and is flagged/excluded wherever a
ratio would divide by zero.

Trigonometry is evaluated on folded indices (s and its mirror share one
angle bitwise), so mirrored modes tie exactly and scans resolve ties to the
lexicographically smallest index.

The verification route is deliberately independent of these formulas: the
periodic operators are assembled from their factored definitions (dense
circulant blocks, LU solves) and applied to explicit Fourier vectors.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .problems import Constant, GridSpec, build_laplacian
from .sparse import DENSE_ASSEMBLY_LIMIT, assemble_dense, spmv

__all__ = [
    "FourierMode",
    "SymbolChain",
    "mode_grid",
    "lambda_a",
    "lambda_t",
    "lambda_p",
    "lambda_b",
    "lambda_b_minus_a",
    "lambda_binv_a",
    "symbol_chain",
    "symbol_grid",
    "spectrum_extremes",
    "cond_discrete",
    "cond_asymptotic",
    "asymptotic_constant",
    "fourier_vector",
    "periodic_operator",
    "verify_eigenpair",
    "max_eigenpair_residual",
    "bound_report",
]

ANALYSIS_MODES = ("paper", "exact")
CONVENTIONS = ("paper", "circulant")


@dataclass(frozen=True)
class FourierMode:
    """One grid mode: integer indices plus the convention that angles them."""

    indices: tuple
    n: int
    convention: str = "paper"

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        if len(self.indices) not in (2, 3):
            raise ValueError("modes are 2-D or 3-D")
        object.__setattr__(self, "indices", tuple(int(s) for s in self.indices))
        lo, hi = (1, self.n) if self.convention == "paper" else (0, self.n - 1)
        for s in self.indices:
            if not lo <= s <= hi:
                raise ValueError(
                    f"index {s} outside [{lo}, {hi}] for convention {self.convention!r}"
                )

    @property
    def dim(self):
        return len(self.indices)

    @property
    def denominator(self):
        return self.n + 1 if self.convention == "paper" else self.n

    @property
    def angles(self):
        d = self.denominator
        return tuple(2.0 * math.pi * s / d for s in self.indices)

    @property
    def is_null(self):
        return self.convention == "circulant" and all(s == 0 for s in self.indices)

    def folded_cos(self):
        d = self.denominator
        return tuple(math.cos(2.0 * math.pi * min(s, d - s) / d) for s in self.indices)

    def folded_sin_half_sq(self):
        d = self.denominator
        return tuple(
            math.sin(math.pi * min(s, d - s) / d) ** 2 for s in self.indices
        )


def mode_grid(n, dim=3, convention="paper"):
    """All modes of the grid in lexicographic order."""
    lo = 1 if convention == "paper" else 0
    rng = range(lo, lo + n)
    if dim == 2:
        return [FourierMode((s, t), n, convention) for s in rng for t in rng]
    return [
        FourierMode((s, t, r), n, convention) for s in rng for t in rng for r in rng
    ]


def _coeffs(l, dim):
    if isinstance(l, Constant):
        l = (l.l1, l.l2, l.l3)
    l = tuple(float(v) for v in l)
    if len(l) == 2:
        l = (l[0], l[1], 0.0)
    if dim == 2:
        return l[0], l[1], 0.0
    return l


def _check_mode(analysis_mode):
    if analysis_mode not in ANALYSIS_MODES:
        raise ValueError(f"analysis_mode must be one of {ANALYSIS_MODES}")


def lambda_a(mode, l=(1.0, 1.0, 1.0)):
    l1, l2, l3 = _coeffs(l, mode.dim)
    s2 = mode.folded_sin_half_sq()
    out = 4.0 * (l1 * s2[0] + l2 * s2[1])
    if mode.dim == 3:
        out += 4.0 * l3 * s2[2]
    return out


def _m_of(l1, l2, l3, dim):
    return 2.0 * (l1 + l2 + l3) if dim == 3 else 2.0 * (l1 + l2)


def lambda_t(mode, analysis_mode="paper", l=(1.0, 1.0, 1.0)):
    _check_mode(analysis_mode)
    l1, l2, l3 = _coeffs(l, mode.dim)
    m = _m_of(l1, l2, l3, mode.dim)
    lam = m - 2.0 * l1 * mode.folded_cos()[0]
    if analysis_mode == "exact":
        lam += l1 * l1 / m
    return lam


def _lift(lam_prev, coupling, cos_angle):
    # one hierarchy level: lam + coupling^2/lam - 2*coupling*cos; increasing
    # in lam for lam > coupling, which keeps the recursion monotone
    return lam_prev - 2.0 * coupling * cos_angle + coupling * coupling / lam_prev


def lambda_p(mode, analysis_mode="paper", l=(1.0, 1.0, 1.0)):
    l1, l2, l3 = _coeffs(l, mode.dim)
    return _lift(lambda_t(mode, analysis_mode, l), l2, mode.folded_cos()[1])


def lambda_b(mode, analysis_mode="paper", l=(1.0, 1.0, 1.0)):
    lam_p = lambda_p(mode, analysis_mode, l)
    if mode.dim == 2:
        return lam_p
    l1, l2, l3 = _coeffs(l, mode.dim)
    return _lift(lam_p, l3, mode.folded_cos()[2])


def lambda_b_minus_a(mode, analysis_mode="paper", l=(1.0, 1.0, 1.0)):
    _check_mode(analysis_mode)
    l1, l2, l3 = _coeffs(l, mode.dim)
    m = _m_of(l1, l2, l3, mode.dim)
    out = l2 * l2 / lambda_t(mode, analysis_mode, l)
    if mode.dim == 3:
        out += l3 * l3 / lambda_p(mode, analysis_mode, l)
    if analysis_mode == "exact":
        out += l1 * l1 / m
    return out


def lambda_binv_a(mode, analysis_mode="paper", l=(1.0, 1.0, 1.0)):
    """lam(A)/lam(B); exactly 0 at the (flagged) circulant null mode."""
    if mode.is_null:
        return 0.0
    return lambda_a(mode, l) / lambda_b(mode, analysis_mode, l)


@dataclass(frozen=True)
class SymbolChain:
    mode: FourierMode
    lam_a: float
    lam_t: float
    lam_p: float
    lam_b: float
    lam_b_minus_a: float
    lam_binv_a: float


def symbol_chain(mode, analysis_mode="paper", l=(1.0, 1.0, 1.0)):
    return SymbolChain(
        mode=mode,
        lam_a=lambda_a(mode, l),
        lam_t=lambda_t(mode, analysis_mode, l),
        lam_p=lambda_p(mode, analysis_mode, l),
        lam_b=lambda_b(mode, analysis_mode, l),
        lam_b_minus_a=lambda_b_minus_a(mode, analysis_mode, l),
        lam_binv_a=lambda_binv_a(mode, analysis_mode, l),
    )


def _folded_trig(n, convention):
    d = n + 1 if convention == "paper" else n
    s = np.arange(1, n + 1) if convention == "paper" else np.arange(n)
    sf = np.minimum(s, d - s)
    ang = 2.0 * np.pi * sf / d
    return s, np.cos(ang), np.sin(ang / 2.0) ** 2


def symbol_grid(n, dim=3, analysis_mode="paper", convention="paper", l=(1.0, 1.0, 1.0)):
    """Vectorized chain over the whole mode grid.

    Returns a dict of arrays indexed [s, t(, r)] plus the index vector under
    key "s" and a "null" boolean mask (all False under the paper convention).
    """
    _check_mode(analysis_mode)
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    l1, l2, l3 = _coeffs(l, dim)
    m = _m_of(l1, l2, l3, dim)
    s, c, s2 = _folded_trig(n, convention)

    lam_t = m - 2.0 * l1 * c
    if analysis_mode == "exact":
        lam_t = lam_t + l1 * l1 / m

    if dim == 2:
        t1 = lam_t[:, None]
        lam_p = t1 - 2.0 * l2 * c[None, :] + l2 * l2 / t1
        lam_b = lam_p
        lam_a = 4.0 * (l1 * s2[:, None] + l2 * s2[None, :])
        lam_bma = l2 * l2 / t1 + (l1 * l1 / m if analysis_mode == "exact" else 0.0)
        lam_bma = np.broadcast_to(lam_bma, lam_b.shape).copy()
        lam_t_full = np.broadcast_to(t1, lam_b.shape).copy()
        null = np.zeros(lam_b.shape, dtype=bool)
        if convention == "circulant":
            null[0, 0] = True
    else:
        t1 = lam_t[:, None]
        lam_p2 = t1 - 2.0 * l2 * c[None, :] + l2 * l2 / t1
        p1 = lam_p2[:, :, None]
        lam_b = p1 - 2.0 * l3 * c[None, None, :] + l3 * l3 / p1
        lam_a = 4.0 * (
            l1 * s2[:, None, None] + l2 * s2[None, :, None] + l3 * s2[None, None, :]
        )
        lam_bma = l2 * l2 / lam_t[:, None, None] + l3 * l3 / p1
        if analysis_mode == "exact":
            lam_bma = lam_bma + l1 * l1 / m
        lam_bma = np.broadcast_to(lam_bma, lam_b.shape).copy()
        lam_p = np.broadcast_to(p1, lam_b.shape).copy()
        lam_t_full = np.broadcast_to(lam_t[:, None, None], lam_b.shape).copy()
        null = np.zeros(lam_b.shape, dtype=bool)
        if convention == "circulant":
            null[(0,) * dim] = True

    with np.errstate(invalid="ignore", divide="ignore"):
        lam_ratio = np.where(null, 0.0, lam_a / lam_b)

    return {
        "s": s,
        "A": lam_a,
        "T": lam_t_full,
        "P": lam_p,
        "B": lam_b,
        "BmA": lam_bma,
        "BinvA": lam_ratio,
        "null": null,
    }


def _arg_to_mode(flat_idx, shape, s, n, convention):
    idx = np.unravel_index(flat_idx, shape)
    return FourierMode(tuple(int(s[i]) for i in idx), n, convention)


def spectrum_extremes(n, analysis_mode="paper", convention="paper", dim=3, l=(1.0, 1.0, 1.0)):
    """Exhaustive scan; ties resolve to the lexicographically smallest mode.

    The circulant null mode is excluded from every operator's scan (it is
    the kernel of the periodic operator, not a bound).
    """
    g = symbol_grid(n, dim, analysis_mode, convention, l)
    out = {}
    for op in ("A", "T", "P", "B", "BmA", "BinvA"):
        arr = np.array(g[op], dtype=np.float64)
        if convention == "circulant":
            arr[g["null"]] = np.nan
        imin = int(np.nanargmin(arr))
        imax = int(np.nanargmax(arr))
        out[op] = {
            "min": float(arr.flat[imin]),
            "min_mode": _arg_to_mode(imin, arr.shape, g["s"], n, convention),
            "max": float(arr.flat[imax]),
            "max_mode": _arg_to_mode(imax, arr.shape, g["s"], n, convention),
        }
    return out


def cond_discrete(n, analysis_mode="paper", convention="paper", dim=3, l=(1.0, 1.0, 1.0)):
    """max/min of lam(B^-1 A) over the grid, null mode excluded."""
    ext = spectrum_extremes(n, analysis_mode, convention, dim, l)["BinvA"]
    return ext["max"] / ext["min"]


def asymptotic_constant():
    """Leading constant of the h^-2 law for the isotropic 3-D problem."""
    sigma = 5.0 + 5.0 * math.pi**2 + math.pi**4
    return 25.0 * sigma / (144.0 * (3.0 * math.pi**2 * sigma + 4.0 + math.pi**2))


def cond_asymptotic(h):
    if not 0.0 < h < 0.5:
        raise ValueError("mesh width h must be in (0, 0.5)")
    return asymptotic_constant() / (h * h)


def fourier_vector(mode):
    """Unit-norm discrete Fourier vector; circulant convention only.

    Under the paper convention these are not eigenvectors of anything
    assembled here, so asking for one is an error, not an approximation.
    """
    if mode.convention != "circulant":
        raise ValueError("fourier_vector is defined for the circulant convention only")
    n = mode.n
    phases = [np.exp(2j * np.pi * s * np.arange(n) / n) for s in mode.indices]
    if mode.dim == 2:
        # indices (s, t) act on coordinates (i, j); grid axes are [j, i], x fastest
        v = (phases[1][:, None] * phases[0][None, :]).reshape(-1)
        return v / math.sqrt(n**2)
    vx, vy, vz = phases
    v3 = vz[:, None, None] * vy[None, :, None] * vx[None, None, :]
    return v3.reshape(-1) / math.sqrt(n**3)


def _lu_solve_maybe_complex(lu_piv, b):
    if np.iscomplexobj(b):
        return scipy.linalg.lu_solve(lu_piv, b.real) + 1j * scipy.linalg.lu_solve(
            lu_piv, b.imag
        )
    return scipy.linalg.lu_solve(lu_piv, b)


def _periodic_plane_factor(n, l1, l2, m):
    """Dense plane-level factor P0 = (That + L2hat)(I + That^-1 L2hat^T)."""
    if n * n > DENSE_ASSEMBLY_LIMIT:
        raise ValueError(f"dense periodic factors refused beyond n^2 = {DENSE_ASSEMBLY_LIMIT}")
    t0 = np.zeros((n, n))
    np.fill_diagonal(t0, m + l1 * l1 / m)
    for i in range(n):
        t0[i, (i - 1) % n] += -l1
        t0[i, (i + 1) % n] += -l1
    that = np.kron(np.eye(n), t0)
    shift = np.zeros((n, n))
    for j in range(n):
        shift[j, (j - 1) % n] = 1.0
    l2hat = -l2 * np.kron(shift, np.eye(n))
    return (that + l2hat) @ (np.eye(n * n) + np.linalg.solve(that, l2hat.T))


def periodic_operator(kind, n, dim=3, l=(1.0, 1.0, 1.0)):
    """Apply-callable for an assembled periodic operator.

    kind "A": the wrapped-band stencil.  kind "hssor_B": the factored
    hierarchical operator built from dense circulant blocks (plane factor
    applied per z-plane with LU solves for the inner inverse).  kind
    "hssor_BinvA": composition via a dense LU of B.  These are the
    independent verification route for the symbol formulas: no FFT, no
    symbol arithmetic, just the factored definitions.
    """
    l1, l2, l3 = _coeffs(l, dim)
    m = _m_of(l1, l2, l3, dim)
    if kind == "A":
        spec = GridSpec(
            dim=dim, n=n, boundary="periodic",
            coeff=Constant(l1, l2, l3 if dim == 3 else 0.0),
        )
        a = build_laplacian(spec)
        return lambda x: spmv(a, x)
    if kind == "hssor_B":
        p0 = _periodic_plane_factor(n, l1, l2, m)
        if dim == 2:
            return lambda x: p0 @ x
        lu = scipy.linalg.lu_factor(p0)

        def apply_b(x):
            x3 = np.asarray(x).reshape(n, n * n)
            w = np.empty_like(x3, dtype=np.result_type(x3.dtype, np.float64))
            for k in range(n):
                w[k] = x3[k] + _lu_solve_maybe_complex(lu, -l3 * x3[(k + 1) % n])
            y = np.empty_like(w)
            for k in range(n):
                y[k] = p0 @ w[k] + (-l3) * w[(k - 1) % n]
            return y.reshape(-1)

        return apply_b
    if kind == "hssor_BinvA":
        apply_a = periodic_operator("A", n, dim, l)
        apply_b = periodic_operator("hssor_B", n, dim, l)
        n_total = n**dim
        b_dense = assemble_dense(apply_b, n_total)
        lu = scipy.linalg.lu_factor(b_dense)
        return lambda x: _lu_solve_maybe_complex(lu, apply_a(x))
    raise ValueError(f"unknown periodic operator kind {kind!r}")


def verify_eigenpair(apply_fn, mode, expected):
    """2-norm residual of one eigenpair claim against an actual operator."""
    v = fourier_vector(mode)
    return float(np.linalg.norm(apply_fn(v) - expected * v))


def max_eigenpair_residual(kind, n, dim=3, l=(1.0, 1.0, 1.0)):
    """Worst eigenpair residual over all non-null circulant modes.

    Symbols are taken in exact mode, the one that matches assembled
    operators; ~1e-12 is healthy, anything above 1e-10 means a mismatch.
    """
    apply_fn = periodic_operator(kind, n, dim, l)
    worst = 0.0
    for mode in mode_grid(n, dim, "circulant"):
        if mode.is_null:
            continue
        if kind == "A":
            lam = lambda_a(mode, l)
        elif kind == "hssor_B":
            lam = lambda_b(mode, "exact", l)
        elif kind == "hssor_BinvA":
            lam = lambda_binv_a(mode, "exact", l)
        else:
            raise ValueError(f"unknown kind {kind!r}")
        worst = max(worst, verify_eigenpair(apply_fn, mode, lam))
    return worst


# ---------------------------------------------------------------------------
# Closed-form bound verdicts (isotropic 3-D, paper analysis mode)


def bound_report(n):
    """Strict-bound verdicts over the paper-convention grid at size n.

    Each row: (label, observed value, comparator, threshold, holds).  The
    min-of-B row is checked against both published candidates: 25/36 (the
    value the recursion actually attains in the zero-angle limit) holds,
    95/36 fails and is kept as a documented discrepancy.
    """
    ext = spectrum_extremes(n, "paper", "paper", 3, (1.0, 1.0, 1.0))
    rows = [
        ("min lam(A) > 0", ext["A"]["min"], ">", 0.0),
        ("max lam(A) < 12", ext["A"]["max"], "<", 12.0),
        ("min lam(T) > 4", ext["T"]["min"], ">", 4.0),
        ("max lam(T) < 8", ext["T"]["max"], "<", 8.0),
        ("min lam(P) > 9/4", ext["P"]["min"], ">", 9.0 / 4.0),
        ("max lam(P) < 81/8", ext["P"]["max"], "<", 81.0 / 8.0),
        ("min lam(B) > 25/36", ext["B"]["min"], ">", 25.0 / 36.0),
        ("min lam(B) > 95/36 (documented discrepancy)", ext["B"]["min"], ">", 95.0 / 36.0),
        ("max lam(B) < 7921/648", ext["B"]["max"], "<", 7921.0 / 648.0),
        ("min lam(B-A) > 145/648", ext["BmA"]["min"], ">", 145.0 / 648.0),
        ("max lam(B-A) < 25/36", ext["BmA"]["max"], "<", 25.0 / 36.0),
        ("min lam(B^-1 A) > 0", ext["BinvA"]["min"], ">", 0.0),
        ("max lam(B^-1 A) < 7776/7921", ext["BinvA"]["max"], "<", 7776.0 / 7921.0),
    ]
    report = []
    for label, observed, cmp_op, threshold in rows:
        holds = observed > threshold if cmp_op == ">" else observed < threshold
        report.append(
            {
                "label": label,
                "observed": observed,
                "comparator": cmp_op,
                "threshold": threshold,
                "holds": bool(holds),
            }
        )
    return report
