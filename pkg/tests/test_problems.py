import json

import numpy as np
import pytest

from hssorkit.problems import (
    Constant,
    Dc1Field,
    GridSpec,
    build_dc1,
    build_laplacian,
    build_problem,
    build_rhs,
    kappa_dc1,
    load_problem,
    save_problem,
)
from hssorkit.sparse import spmv


def test_grid_spec_basics():
    spec = GridSpec(dim=3, n=7)
    assert spec.h == 1.0 / 8.0
    assert spec.nunknowns == 343
    assert spec.coeff == Constant(1.0, 1.0, 1.0)


def test_grid_spec_2d_default_coeff():
    assert GridSpec(dim=2, n=4).coeff == Constant(1.0, 1.0, 0.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dim=1, n=5),
        dict(dim=3, n=2),
        dict(dim=3, n=5, boundary="neumann"),
        dict(dim=2, n=5, coeff=Constant(1.0, 1.0, 1.0)),
    ],
)
def test_grid_spec_rejects(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_laplacian_2d_hand_checked():
    # n=3 five-point stencil, lexicographic x-fastest
    a = build_laplacian(GridSpec(dim=2, n=3)).to_dense()
    assert a.shape == (9, 9)
    row4 = np.zeros(9)
    row4[[1, 3, 5, 7]] = -1.0
    row4[4] = 4.0
    np.testing.assert_array_equal(a[4], row4)
    corner = np.zeros(9)
    corner[0] = 4.0
    corner[[1, 3]] = -1.0
    np.testing.assert_array_equal(a[0], corner)


def test_laplacian_anisotropic_entries():
    a = build_laplacian(GridSpec(dim=2, n=4, coeff=Constant(2.0, 3.0, 0.0)))
    assert a.center[0] == 10.0
    assert a.xp[0] == -2.0
    assert a.yp[0] == -3.0


def test_laplacian_3d_spd():
    a = build_laplacian(GridSpec(dim=3, n=3)).to_dense()
    np.testing.assert_array_equal(a, a.T)
    assert np.linalg.eigvalsh(a).min() > 0.0


def test_periodic_row_sums_zero():
    a = build_laplacian(GridSpec(dim=3, n=4, boundary="periodic"))
    sums = spmv(a, np.ones(64))
    np.testing.assert_array_equal(sums, np.zeros(64))


def test_periodic_line_is_circulant():
    a = build_laplacian(GridSpec(dim=2, n=4, boundary="periodic", coeff=Constant(1.0, 0.0, 0.0)))
    d = a.to_dense()
    np.testing.assert_array_equal(d[0, :4], [2.0, -1.0, 0.0, -1.0])


@pytest.mark.parametrize(
    "x, expected",
    [
        ((0.05, 0.05), 1000.0),
        ((0.15, 0.05), 1.0),
        ((0.25, 0.45, 0.65), 5000.0),
        ((0.95, 0.05), 1.0),
    ],
)
def test_kappa_dc1_values(x, expected):
    assert kappa_dc1(np.asarray(x)) == expected


def test_kappa_dc1_domain():
    with pytest.raises(ValueError):
        kappa_dc1(np.array([1.0, 0.5]))


def test_dc1_symmetric_spd():
    a = build_dc1(GridSpec(dim=2, n=9, coeff=Dc1Field())).to_dense()
    np.testing.assert_allclose(a, a.T, atol=0.0)
    assert np.linalg.eigvalsh(a).min() > 0.0


def test_dc1_harmonic_face_value():
    # a face between cells with kappa 1000 and 1 carries the harmonic mean
    a = build_dc1(GridSpec(dim=2, n=19, coeff=Dc1Field()))
    expected = 2.0 * 1000.0 * 1.0 / 1001.0
    vals = np.unique(np.abs(a.xm[a.xm != 0.0]))
    assert np.any(np.isclose(vals, expected, rtol=1e-12))


def test_rhs_is_matrix_times_ones():
    spec = GridSpec(dim=3, n=4)
    a = build_laplacian(spec)
    np.testing.assert_array_equal(build_rhs(spec, a), spmv(a, np.ones(64)))


def test_dc1_interior_rhs_vanishes():
    # constant solution: interior rows of A @ 1 cancel to rounding (the
    # center is a separate accumulation of the face couplings)
    spec = GridSpec(dim=2, n=9, coeff=Dc1Field())
    prob = build_problem(spec)
    r = prob.rhs.reshape(9, 9)
    scale = np.abs(prob.matrix.center).max()
    assert np.abs(r[1:-1, 1:-1]).max() <= 1e-14 * scale


def test_save_load_round_trip(tmp_path):
    spec = GridSpec(dim=2, n=5, coeff=Constant(2.0, 1.0, 0.0))
    prob = build_problem(spec)
    base = tmp_path / "prob"
    save_problem(prob, base)
    assert (tmp_path / "prob.mtx").exists()
    meta = json.loads((tmp_path / "prob.json").read_text())
    assert meta["n"] == 5
    back = load_problem(base)
    np.testing.assert_array_equal(back.matrix.to_dense(), prob.matrix.to_dense())
    np.testing.assert_array_equal(back.rhs, prob.rhs)
    assert back.spec == prob.spec
