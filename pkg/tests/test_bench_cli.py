"""Bench campaign plumbing and the CLI contract (exit codes, formats)."""

import json
import math

import numpy as np
import pytest

from hssorkit.bench import (
    METHODS,
    BenchPlan,
    CellResult,
    render_csv,
    render_markdown,
    run_bench,
)
from hssorkit.cli import main
from hssorkit.fourier import symbol_grid
from hssorkit.krylov import SolverConfig


def tiny_plan(**overrides):
    base = dict(
        table="isotropic",
        cells=((3, 6),),
        methods=("hssor", "ssor"),
        config=SolverConfig(tol=1e-10, restart=30, maxit=200),
    )
    base.update(overrides)
    return BenchPlan(**base)


class TestBenchPlan:
    def test_rejects_unknown_method(self):
        with pytest.raises(ValueError, match="unknown method"):
            tiny_plan(methods=("hssor", "bogus"))

    def test_rejects_empty_methods(self):
        with pytest.raises(ValueError, match="methods"):
            tiny_plan(methods=())

    def test_rejects_bad_cell(self):
        # cells are validated through GridSpec, so dim=4 must not survive
        with pytest.raises(ValueError):
            tiny_plan(cells=((4, 6),))

    def test_one_over_h_convention(self):
        res = CellResult(table="isotropic", dim=3, n=39, method="hssor",
                         status="ok", iterations=1, wall_seconds=0.0)
        assert res.one_over_h == 40


class TestRunBench:
    def test_all_ok_row_major(self):
        plan = tiny_plan(cells=((3, 6), (2, 8)))
        results = run_bench(plan)
        assert [(r.dim, r.n, r.method) for r in results] == [
            (3, 6, "hssor"), (3, 6, "ssor"), (2, 8, "hssor"), (2, 8, "ssor"),
        ]
        assert all(r.status == "ok" for r in results)
        assert all(r.iterations > 0 for r in results)

    def test_memory_guard_yields_me_without_solving(self):
        plan = tiny_plan(methods=("bssor",), mem_limit=512)
        (res,) = run_bench(plan)
        assert res.status == "ME"
        assert res.iterations is None
        assert "exceeds the limit" in res.detail

    def test_starved_budget_yields_nc(self):
        plan = tiny_plan(
            methods=("ssor",),
            cells=((2, 30),),
            config=SolverConfig(tol=1e-12, restart=5, maxit=3),
        )
        (res,) = run_bench(plan)
        assert res.status == "NC"

    def test_failures_do_not_abort_campaign(self):
        # bssor trips the guard, hssor (zero setup storage) still runs
        plan = tiny_plan(methods=("bssor", "hssor"), mem_limit=512)
        assert [r.status for r in run_bench(plan)] == ["ME", "ok"]


@pytest.fixture(scope="module")
def mixed_results():
    # one ok cell (hssor) and one guarded ME cell (bssor)
    plan = tiny_plan(cells=((3, 6),), methods=("hssor", "bssor"),
                     mem_limit=10_000)
    return run_bench(plan)


class TestRendering:

    def test_csv_header_and_blank_cells(self, mixed_results):
        text = render_csv(mixed_results, include_times=False)
        lines = text.strip().split("\n")
        assert lines[0] == "table,dim,n,one_over_h,method,status,iterations,wall_seconds"
        ok_row = lines[1].split(",")
        me_row = lines[2].split(",")
        assert ok_row[4:6] == ["hssor", "ok"] and ok_row[7] == ""
        assert me_row[4:6] == ["bssor", "ME"] and me_row[6] == me_row[7] == ""

    def test_csv_timestamp_line_is_isolated(self, mixed_results):
        stamped = render_csv(mixed_results, timestamp="2024-01-01T00:00:00")
        bare = render_csv(mixed_results, include_times=False)
        assert stamped.startswith("# generated 2024-01-01T00:00:00\n")
        # everything except the comment and the wall column is shared
        assert stamped.split("\n")[1] == bare.split("\n")[0]

    def test_csv_deterministic_without_times(self, mixed_results):
        plan = tiny_plan(cells=((3, 6),), methods=("hssor", "bssor"),
                         mem_limit=10_000)
        again = run_bench(plan)
        assert render_csv(again, include_times=False) == render_csv(
            mixed_results, include_times=False)

    def test_markdown_shape(self, mixed_results):
        text = render_markdown(mixed_results, include_times=False)
        lines = text.strip().split("\n")
        assert lines[0] == ("| matrix | 1/h | hssor its | hssor time "
                            "| bssor its | bssor time |")
        assert lines[1] == "|---|---|---|---|---|---|"
        its = mixed_results[0].iterations
        assert lines[2] == f"| isotropic 3D | 7 | {its} | NA | ME | NA |"

    def test_markdown_times_format(self, mixed_results):
        text = render_markdown(mixed_results, include_times=True)
        row = text.strip().split("\n")[2]
        cells = [c.strip() for c in row.strip("|").split("|")]
        float(cells[3])  # hssor wall formats as a number
        assert cells[5] == "NA"  # ME cell never gets a time


class TestCliSolve:
    def test_converged_exit_zero(self, capsys):
        code = main(["solve", "--problem", "iso3d", "--n", "6",
                     "--precond", "hssor", "--no-timestamp"])
        out = capsys.readouterr().out
        assert code == 0
        assert "status        converged" in out
        assert "one_over_h    7" in out

    def test_nc_exit_two(self, capsys):
        code = main(["solve", "--problem", "iso3d", "--n", "6",
                     "--precond", "ssor", "--maxit", "2", "--no-timestamp"])
        assert code == 2
        assert "NC" in capsys.readouterr().out

    def test_me_exit_three(self, capsys):
        code = main(["solve", "--problem", "iso3d", "--n", "16",
                     "--precond", "bssor", "--mem-limit", "1K"])
        assert code == 3
        assert capsys.readouterr().out.startswith("status: ME")

    def test_usage_exit_one(self, capsys):
        assert main(["solve", "--problem", "iso3d"]) == 1  # --n missing
        assert main(["solve", "--problem", "nope", "--n", "4"]) == 1
        assert main([]) == 1
        assert main(["solve", "--problem", "iso3d", "--n", "4",
                     "--mem-limit", "4X"]) == 1
        capsys.readouterr()

    def test_json_report(self, capsys):
        code = main(["solve", "--problem", "iso2d", "--n", "8",
                     "--precond", "gmg-hs", "--out", "json", "--no-timestamp"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["converged"] is True
        assert data["problem"] == "iso2d"
        assert data["one_over_h"] == 9
        assert data["history"][0] == 1.0
        assert len(data["history"]) == data["iterations"] + 1
        assert data["final_relres"] < 1e-10
        assert "wall_seconds" not in data

    def test_csv_deterministic(self, capsys):
        argv = ["solve", "--problem", "iso3d", "--n", "6", "--precond", "ilu0",
                "--out", "csv", "--no-timestamp"]
        main(argv)
        first = capsys.readouterr().out
        main(argv)
        assert capsys.readouterr().out == first
        assert not first.startswith("#")

    def test_csv_timestamp_header(self, capsys):
        main(["solve", "--problem", "iso3d", "--n", "6", "--out", "csv"])
        out = capsys.readouterr().out
        assert out.startswith("# generated ")
        assert "wall_seconds" in out.split("\n")[1]


class TestCliBench:
    def test_writes_csv_and_markdown(self, tmp_path, capsys):
        prefix = str(tmp_path / "camp")
        code = main(["bench", "--table", "isotropic", "--dims", "3:6",
                     "--methods", "hssor,ssor", "--out-prefix", prefix,
                     "--no-timestamp"])
        assert code == 0
        csv_text = (tmp_path / "camp.csv").read_text()
        md_text = (tmp_path / "camp.md").read_text()
        assert csv_text.startswith("table,dim,n,")
        assert "isotropic,3,6,7,hssor,ok," in csv_text
        assert md_text.startswith("| matrix | 1/h |")
        assert capsys.readouterr().out == md_text

    def test_deterministic_across_runs(self, tmp_path, capsys):
        texts = []
        for tag in ("a", "b"):
            prefix = str(tmp_path / tag)
            main(["bench", "--dims", "3:6", "--methods", "ilu0,hssor",
                  "--out-prefix", prefix, "--no-timestamp"])
            texts.append((tmp_path / f"{tag}.csv").read_bytes())
        capsys.readouterr()
        assert texts[0] == texts[1]

    def test_bad_dims_exit_one(self, capsys):
        assert main(["bench", "--dims", "3x6"]) == 1
        assert main(["bench", "--methods", "hssor,bogus"]) == 1
        capsys.readouterr()


class TestCliAnalyze:
    def run(self, capsys, *extra):
        code = main(["analyze", "--n", "6", "--no-timestamp", *extra])
        assert code == 0
        return capsys.readouterr().out

    def test_grid_rows_match_symbols(self, capsys):
        out = self.run(capsys)
        rows = [ln for ln in out.strip().split("\n") if not ln.startswith("#")]
        header, body = rows[0], rows[1:]
        assert header == "s,t,r,theta,phi,xi,lamA,lamT,lamP,lamB,lamBmA,lamBinvA"
        assert len(body) == 6 ** 3
        g = symbol_grid(6, 3, "paper", "paper")
        first = body[0].split(",")
        assert first[:3] == ["1", "1", "1"]
        # %.17g columns must round-trip float64 exactly
        assert float(first[6]) == g["A"][0, 0, 0]
        assert float(first[11]) == g["BinvA"][0, 0, 0]
        # independent check of one hand-computable entry
        assert float(first[6]) == pytest.approx(12.0 * math.sin(math.pi / 7) ** 2,
                                                rel=1e-15)

    def test_summary_sections(self, capsys):
        out = self.run(capsys)
        assert "# discrete cond(B^-1 A) = " in out
        assert "# cond * h^2 = " in out
        assert "# asymptotic law: cond ~ C/h^2" in out
        assert "[ok  ] min lam(B) > 25/36" in out
        assert "max lam(B^-1 A) < 7776/7921" in out

    def test_circulant_exact_verification(self, capsys):
        out = self.run(capsys, "--mode", "exact", "--convention", "circulant")
        assert "null modes excluded from extremes: 1" in out
        residual_lines = [ln for ln in out.split("\n") if "max residual" in ln]
        assert len(residual_lines) == 3
        for line in residual_lines:
            assert float(line.split(":")[1]) < 1e-12

    def test_anisotropic_skips_isotropic_bounds(self, capsys):
        out = self.run(capsys, "--l1", "2", "--l2", "1", "--l3", "0.5")
        assert "bound verdicts apply to the isotropic" in out
        assert "asymptotic law" not in out

    def test_deterministic_bytes(self, capsys, tmp_path):
        f1, f2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        main(["analyze", "--n", "5", "--no-timestamp", "--out", f1])
        main(["analyze", "--n", "5", "--no-timestamp", "--out", f2])
        capsys.readouterr()
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_rejects_tiny_n_and_bad_coeffs(self, capsys):
        assert main(["analyze", "--n", "2"]) == 1
        assert main(["analyze", "--n", "6", "--l1", "-1"]) == 1
        assert main(["analyze", "--n", "6", "--l1", "0", "--l2", "0",
                     "--l3", "0"]) == 1
        capsys.readouterr()


def test_method_order_matches_report_columns():
    assert METHODS == ("gmg-hs", "gmg-ss", "ilu0", "hssor", "ssor", "bssor")


def test_np_seed_free():
    # bench and cli must not touch global RNG state
    state = np.random.get_state()[1].copy()
    run_bench(tiny_plan())
    assert np.array_equal(np.random.get_state()[1], state)
