import numpy as np
import pytest

from hssorkit.multigrid import (
    AggregateMap,
    aggregate_matching,
    build_interpolation,
    galerkin_coarse,
    twogrid_apply,
    twogrid_setup,
)
from hssorkit.problems import GridSpec, build_laplacian
from hssorkit.sparse import CsrMatrix, assemble_dense, spmv


def tridiag(n):
    d = np.diag(np.full(n, 2.0))
    d += np.diag(np.full(n - 1, -1.0), 1) + np.diag(np.full(n - 1, -1.0), -1)
    return CsrMatrix.from_dense(d)


def test_aggregate_map_validation():
    with pytest.raises(ValueError):
        AggregateMap(part=np.array([0, 2]), n_aggregates=3)  # aggregate 1 empty
    with pytest.raises(ValueError):
        AggregateMap(part=np.array([-1, 0]), n_aggregates=1)
    with pytest.raises(ValueError):
        AggregateMap(part=np.array([0, 1]), n_aggregates=1)


def test_aggregate_map_from_file(tmp_path):
    path = tmp_path / "part.txt"
    path.write_text("0\n0\n1\n1\n")
    amap = AggregateMap.from_file(path, nnodes=4)
    np.testing.assert_array_equal(amap.part, [0, 0, 1, 1])
    with pytest.raises(ValueError):
        AggregateMap.from_file(path, nnodes=5)


def test_galerkin_hand_checked_chain():
    # pairs {0,1} and {2,3} on the 4-point chain give the 2-point chain
    amap = AggregateMap.from_array([0, 0, 1, 1])
    ac = galerkin_coarse(tridiag(4), amap)
    np.testing.assert_array_equal(ac.to_dense(), [[2.0, -1.0], [-1.0, 2.0]])


def test_galerkin_equals_ptap():
    a = build_laplacian(GridSpec(dim=2, n=12))
    amap = aggregate_matching(a, cf=2.0)
    p = build_interpolation(amap).to_scipy()
    ptap = (p.T @ a.to_csr().to_scipy() @ p).toarray()
    gc = galerkin_coarse(a, amap).to_dense()
    assert np.abs(gc - ptap).max() <= 1e-13


def test_matching_hits_target_count():
    a = build_laplacian(GridSpec(dim=2, n=12))
    assert aggregate_matching(a, cf=2.0).n_aggregates == 36
    a3 = build_laplacian(GridSpec(dim=3, n=40))
    assert aggregate_matching(a3, cf=4.5).n_aggregates == 702


def test_matching_is_deterministic():
    spec = GridSpec(dim=2, n=20)
    p1 = aggregate_matching(build_laplacian(spec), cf=4.5).part
    p2 = aggregate_matching(build_laplacian(spec), cf=4.5).part
    np.testing.assert_array_equal(p1, p2)


def test_matching_rejects_bad_cf():
    a = build_laplacian(GridSpec(dim=2, n=5))
    with pytest.raises(ValueError):
        aggregate_matching(a, cf=1.0)


def test_matching_needs_dim_for_csr():
    with pytest.raises(ValueError):
        aggregate_matching(tridiag(8), cf=2.0)


def test_interpolation_is_piecewise_constant():
    amap = AggregateMap.from_array([0, 1, 0, 2, 1])
    p = build_interpolation(amap).to_dense()
    assert p.shape == (5, 3)
    np.testing.assert_array_equal(p.sum(axis=1), np.ones(5))
    for i, agg in enumerate([0, 1, 0, 2, 1]):
        assert p[i, agg] == 1.0


def test_setup_rejects_csr_for_hierarchical_smoother():
    with pytest.raises(TypeError):
        twogrid_setup(tridiag(8), smoother="hssor", dim=2)


def test_setup_rejects_unknown_smoother():
    a = build_laplacian(GridSpec(dim=2, n=5))
    with pytest.raises(ValueError):
        twogrid_setup(a, smoother="jacobi")


def test_setup_rejects_oversize_coarse_space():
    a = build_laplacian(GridSpec(dim=2, n=8))
    with pytest.raises(ValueError, match="direct-solve"):
        twogrid_setup(a, cf=1.1, coarse_limit=10)


def test_setup_rejects_partition_size_mismatch():
    a = build_laplacian(GridSpec(dim=2, n=5))
    with pytest.raises(ValueError):
        twogrid_setup(a, partition=np.zeros(7, dtype=np.int64))


@pytest.mark.parametrize("smoother", ["hssor", "ssor"])
def test_twogrid_error_contraction(smoother):
    # one smoothing pass + exact coarse correction must contract for SPD A
    a = build_laplacian(GridSpec(dim=2, n=16))
    op = twogrid_setup(a, smoother=smoother, cf=2.0)
    e = assemble_dense(lambda x: x - twogrid_apply(op, spmv(a, x)), 256)
    rho = np.abs(np.linalg.eigvals(e)).max()
    assert rho < 1.0


def test_explicit_partition_matches_file(tmp_path):
    a = build_laplacian(GridSpec(dim=2, n=10))
    amap = aggregate_matching(a, cf=2.0)
    path = tmp_path / "p.txt"
    np.savetxt(path, amap.part, fmt="%d")
    op_arr = twogrid_setup(a, smoother="ssor", partition=amap.part)
    op_file = twogrid_setup(a, smoother="ssor", partition=path)
    r = np.arange(100, dtype=np.float64) + 1.0
    np.testing.assert_array_equal(twogrid_apply(op_arr, r), twogrid_apply(op_file, r))


def test_twogrid_apply_formula(iso2d_small):
    # z = S^-1 r + P Ac^-1 P^T (r - A S^-1 r), checked against dense algebra
    _, a = iso2d_small
    op = twogrid_setup(a, smoother="ssor", cf=2.0)
    from conftest import dense_ssor_factor

    ad = a.to_dense()
    s = dense_ssor_factor(ad)
    p = build_interpolation(op.agg_map).to_dense()
    ac = p.T @ ad @ p
    r = np.linspace(-1.0, 1.0, 25)
    z_s = np.linalg.solve(s, r)
    ref = z_s + p @ np.linalg.solve(ac, p.T @ (r - ad @ z_s))
    np.testing.assert_allclose(twogrid_apply(op, r), ref, rtol=1e-12, atol=1e-13)
