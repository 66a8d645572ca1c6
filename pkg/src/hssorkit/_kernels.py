"""Compiled sequential kernels.

Everything here is an intrinsically ordered recurrence (triangular solves,
nested dimension-by-dimension sweeps, incomplete elimination), so the loops
are written out explicitly and compiled with numba. Wrappers in the public
modules own validation and error raising; kernels return an offending row
index (-1 on success) where a pivot can fail.

Order of floating-point operations is part of the contract: the 1D
hierarchical sweep must reproduce the point-SSOR sweep bit for bit, so the
per-entry arithmetic in ``_t_solve_inplace`` mirrors ``ssor_forward`` /
``ssor_backward`` exactly (single product, then divide by the diagonal).
"""

import numpy as np
from numba import njit


# ---------------------------------------------------------------------------
# CSR triangular solves


@njit(cache=True)
def csr_solve_lower(indptr, indices, values, b, out, unit_diag):
    n = b.shape[0]
    for i in range(n):
        acc = b[i]
        pivot = 0.0
        has_pivot = False
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j < i:
                acc -= values[jj] * out[j]
            elif j == i:
                pivot = values[jj]
                has_pivot = True
        if unit_diag:
            out[i] = acc
        else:
            if (not has_pivot) or pivot == 0.0:
                return i
            out[i] = acc / pivot
    return -1


@njit(cache=True)
def csr_solve_upper(indptr, indices, values, b, out, unit_diag):
    n = b.shape[0]
    for i in range(n - 1, -1, -1):
        acc = b[i]
        pivot = 0.0
        has_pivot = False
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j > i:
                acc -= values[jj] * out[j]
            elif j == i:
                pivot = values[jj]
                has_pivot = True
        if unit_diag:
            out[i] = acc
        else:
            if (not has_pivot) or pivot == 0.0:
                return i
            out[i] = acc / pivot
    return -1


# ---------------------------------------------------------------------------
# Point SSOR sweeps on a full CSR matrix (lower/upper parts read in place,
# nothing is factored or stored)


@njit(cache=True)
def ssor_forward(indptr, indices, values, r, y):
    n = r.shape[0]
    for i in range(n):
        acc = r[i]
        pivot = 0.0
        has_pivot = False
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j < i:
                acc -= values[jj] * y[j]
            elif j == i:
                pivot = values[jj]
                has_pivot = True
        if (not has_pivot) or pivot == 0.0:
            return i
        y[i] = acc / pivot
    return -1


@njit(cache=True)
def ssor_backward(indptr, indices, values, y, z):
    # Solves (I + D^-1 U) z = y, the unit-diagonal form of the back sweep;
    # algebraically identical to scaling by D and solving (D + U).
    n = y.shape[0]
    for i in range(n - 1, -1, -1):
        acc = 0.0
        pivot = 0.0
        has_pivot = False
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if j > i:
                acc += values[jj] * z[j]
            elif j == i:
                pivot = values[jj]
                has_pivot = True
        if (not has_pivot) or pivot == 0.0:
            return i
        z[i] = y[i] - acc / pivot
    return -1


# ---------------------------------------------------------------------------
# Hierarchical sweeps. Band arrays are shaped (nz, ny, nx); l1/l2/l3 are the
# negative-offset couplings (entries at the low boundary are exact zeros for
# Dirichlet masks, wraparound values for periodic never reach these kernels).
# The transpose couplings are read from the same arrays shifted by one, which
# is exact because the splitting is defined for symmetric matrices.


@njit(cache=True)
def _t_solve_inplace(m, l1, x):
    nx = m.shape[0]
    x[0] = x[0] / m[0]
    for i in range(1, nx):
        acc = x[i]
        acc -= l1[i] * x[i - 1]
        x[i] = acc / m[i]
    for i in range(nx - 2, -1, -1):
        acc = l1[i + 1] * x[i + 1]
        x[i] = x[i] - acc / m[i]


@njit(cache=True)
def _p_solve_inplace(m, l1, l2, s, tmp):
    ny, nx = m.shape
    _t_solve_inplace(m[0], l1[0], s[0])
    for j in range(1, ny):
        for i in range(nx):
            s[j, i] -= l2[j, i] * s[j - 1, i]
        _t_solve_inplace(m[j], l1[j], s[j])
    for j in range(ny - 2, -1, -1):
        for i in range(nx):
            tmp[i] = l2[j + 1, i] * s[j + 1, i]
        _t_solve_inplace(m[j], l1[j], tmp)
        for i in range(nx):
            s[j, i] -= tmp[i]


@njit(cache=True)
def hssor_solve(m, l1, l2, l3, r, z):
    nz, ny, nx = m.shape
    tmp = np.empty(nx)
    plane = np.empty((ny, nx))
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                z[k, j, i] = r[k, j, i]
    _p_solve_inplace(m[0], l1[0], l2[0], z[0], tmp)
    for k in range(1, nz):
        for j in range(ny):
            for i in range(nx):
                z[k, j, i] -= l3[k, j, i] * z[k - 1, j, i]
        _p_solve_inplace(m[k], l1[k], l2[k], z[k], tmp)
    for k in range(nz - 2, -1, -1):
        for j in range(ny):
            for i in range(nx):
                plane[j, i] = l3[k + 1, j, i] * z[k + 1, j, i]
        _p_solve_inplace(m[k], l1[k], l2[k], plane, tmp)
        for j in range(ny):
            for i in range(nx):
                z[k, j, i] -= plane[j, i]


@njit(cache=True)
def _t_mult_inplace(m, l1, x):
    nx = m.shape[0]
    for i in range(nx - 1):
        x[i] = x[i] + (l1[i + 1] * x[i + 1]) / m[i]
    for i in range(nx - 1, 0, -1):
        x[i] = m[i] * x[i] + l1[i] * x[i - 1]
    x[0] = m[0] * x[0]


@njit(cache=True)
def _p_mult_inplace(m, l1, l2, s, tmp):
    ny, nx = m.shape
    for j in range(ny - 1):
        for i in range(nx):
            tmp[i] = l2[j + 1, i] * s[j + 1, i]
        _t_solve_inplace(m[j], l1[j], tmp)
        for i in range(nx):
            s[j, i] += tmp[i]
    for j in range(ny - 1, 0, -1):
        _t_mult_inplace(m[j], l1[j], s[j])
        for i in range(nx):
            s[j, i] += l2[j, i] * s[j - 1, i]
    _t_mult_inplace(m[0], l1[0], s[0])


@njit(cache=True)
def hssor_mult(m, l1, l2, l3, x, y):
    nz, ny, nx = m.shape
    tmp = np.empty(nx)
    plane = np.empty((ny, nx))
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                y[k, j, i] = x[k, j, i]
    for k in range(nz - 1):
        for j in range(ny):
            for i in range(nx):
                plane[j, i] = l3[k + 1, j, i] * y[k + 1, j, i]
        _p_solve_inplace(m[k], l1[k], l2[k], plane, tmp)
        for j in range(ny):
            for i in range(nx):
                y[k, j, i] += plane[j, i]
    for k in range(nz - 1, 0, -1):
        _p_mult_inplace(m[k], l1[k], l2[k], y[k], tmp)
        for j in range(ny):
            for i in range(nx):
                y[k, j, i] += l3[k, j, i] * y[k - 1, j, i]
    _p_mult_inplace(m[0], l1[0], l2[0], y[0], tmp)


# ---------------------------------------------------------------------------
# ILU(0): in-place IKJ elimination restricted to the pattern of A


@njit(cache=True)
def _find_col(indices, lo, hi, col):
    while lo < hi:
        mid = (lo + hi) // 2
        v = indices[mid]
        if v == col:
            return mid
        if v < col:
            lo = mid + 1
        else:
            hi = mid
    return -1


@njit(cache=True)
def ilu0_factor(indptr, indices, values, diag_pos, rel_tol):
    n = indptr.shape[0] - 1
    for i in range(n):
        row_start = indptr[i]
        row_end = indptr[i + 1]
        row_norm = 0.0
        for jj in range(row_start, row_end):
            av = abs(values[jj])
            if av > row_norm:
                row_norm = av
        for kk in range(row_start, row_end):
            k = indices[kk]
            if k >= i:
                break
            lik = values[kk] / values[diag_pos[k]]
            values[kk] = lik
            for pp in range(diag_pos[k] + 1, indptr[k + 1]):
                pos = _find_col(indices, kk + 1, row_end, indices[pp])
                if pos >= 0:
                    values[pos] -= lik * values[pp]
        if abs(values[diag_pos[i]]) < rel_tol * row_norm:
            return i
    return -1


# ---------------------------------------------------------------------------
# One round of heavy-edge matching on an aggregate graph


@njit(cache=True)
def hem_round(indptr, indices, weights, max_matches, partner):
    n = indptr.shape[0] - 1
    count = 0
    for u in range(n):
        if partner[u] != -1:
            continue
        best = -1
        best_w = -1.0
        for jj in range(indptr[u], indptr[u + 1]):
            v = indices[jj]
            if v == u or partner[v] != -1:
                continue
            w = weights[jj]
            if w > best_w:
                best = v
                best_w = w
        if best >= 0:
            partner[u] = best
            partner[best] = u
            count += 1
            if count >= max_matches:
                return count
    return count
