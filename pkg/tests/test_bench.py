"""Harness behavior: instance generation, grids, CSV, fits, demo, CLI."""

import csv
import json

import numpy as np
import pytest

from loweig import (
    BenchConfig,
    BenchRecord,
    demo_learner,
    fit_scaling,
    generate_instance,
    normalized_flatness,
    read_records_csv,
    run_grid,
)
from loweig.bench import CSV_HEADER, resolve_rank
from loweig.cli import main, parse_m_grid


class TestGenerateInstance:
    def test_deterministic(self):
        a1, f1, d1 = generate_instance(42, 20, 2, 3, 1)
        a2, f2, d2 = generate_instance(42, 20, 2, 3, 1)
        assert a1 == a2
        assert np.array_equal(f1.Q, f2.Q) and np.array_equal(f1.B, f2.B)
        assert np.array_equal(d1.X, d2.X) and np.array_equal(d1.Y, d2.Y)

    def test_basis_orthonormal(self):
        _, factor, _ = generate_instance(7, 50, 5, 0, 0)
        assert np.linalg.norm(factor.Q.T @ factor.Q - np.eye(5)) <= 1e-10

    def test_all_empty(self):
        alpha, factor, data = generate_instance(0, 8, 0, 0, 0)
        assert alpha == 1.0
        assert factor.rank == 0
        assert data.X.shape == (8, 0) and data.Y.shape == (8, 0)

    def test_rank_overflow_rejected(self):
        with pytest.raises(ValueError):
            generate_instance(0, 4, 2, 2, 2)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            BenchConfig(m_grid=())
        with pytest.raises(ValueError):
            BenchConfig(m_grid=(64, 32))
        with pytest.raises(ValueError):
            BenchConfig(m_grid=(32,), repeats=0)
        with pytest.raises(ValueError):
            BenchConfig(m_grid=(32,), algorithms=("magic",))
        with pytest.raises(ValueError):
            BenchConfig(m_grid=(32,), n=0, nx=0, ny=0)

    def test_resolve_rank(self):
        assert resolve_rank("m/3", 100) == 33
        assert resolve_rank(4, 100) == 4
        with pytest.raises(ValueError):
            resolve_rank("m/2", 100)
        with pytest.raises(ValueError):
            resolve_rank(-1, 100)


class TestRunGrid:
    def test_dense_only_shape(self):
        cfg = BenchConfig(m_grid=(64, 128), repeats=3, seed=5, algorithms=("dense",))
        records = run_grid(cfg)
        assert len(records) == 6
        for r in records:
            assert r.algorithm == "dense"
            assert r.seconds > 0.0
            assert r.normalized_seconds == pytest.approx(
                r.seconds / (r.m * (r.n + r.nx + r.ny) ** 2)
            )

    def test_svd_cells_fold_rank_into_x(self):
        cfg = BenchConfig(m_grid=(32,), n=2, nx=1, ny=1, repeats=1, algorithms=("svd",))
        (record,) = run_grid(cfg)
        assert (record.n, record.nx, record.ny) == (0, 4, 0)

    def test_csv_schema_and_determinism(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        for out in (out1, out2):
            cfg = BenchConfig(m_grid=(32, 64), repeats=2, seed=9,
                              algorithms=("feigh",), out=str(out))
            run_grid(cfg)
        rows1 = list(csv.reader(out1.open()))
        rows2 = list(csv.reader(out2.open()))
        assert rows1[0] == CSV_HEADER
        assert len(rows1) == 5
        # identical apart from the timing columns
        for a, b in zip(rows1[1:], rows2[1:]):
            assert a[:6] == b[:6]
        summary = tmp_path / "a.summary.csv"
        assert summary.exists()
        srows = list(csv.reader(summary.open()))
        assert srows[0][:2] == ["algorithm", "m"]
        assert len(srows) == 3

    def test_failing_cells_are_tagged_and_skipped(self, tmp_path):
        out = tmp_path / "r.csv"
        # n + nx + ny > m at m=4: the fast path must refuse, run continues
        cfg = BenchConfig(m_grid=(4, 32), n=2, nx=2, ny=2, repeats=1,
                          algorithms=("feigh",), out=str(out))
        records = run_grid(cfg)
        assert {r.m for r in records} == {32}
        srows = list(csv.reader((tmp_path / "r.summary.csv").open()))
        error_rows = [row for row in srows[1:] if row[-1]]
        assert len(error_rows) == 1 and error_rows[0][1] == "4"

    def test_roundtrip(self, tmp_path):
        out = tmp_path / "r.csv"
        cfg = BenchConfig(m_grid=(32, 64), repeats=2, algorithms=("feigh",), out=str(out))
        records = run_grid(cfg)
        back = read_records_csv(str(out))
        assert len(back) == len(records)
        assert {(r.algorithm, r.m, r.repeat) for r in back} == {
            (r.algorithm, r.m, r.repeat) for r in records
        }


def synthetic_records(exponent, ms=(64, 128, 256, 512, 1024, 2048), repeats=1):
    records = []
    for m in ms:
        for rep in range(repeats):
            records.append(BenchRecord("feigh", m, 1, 1, 1, rep, 1e-9 * m**exponent))
    return records


class TestFitScaling:
    def test_linear_power_law(self):
        slopes = fit_scaling(synthetic_records(1))
        assert slopes["feigh"] == pytest.approx(1.0, abs=1e-9)

    def test_cubic_power_law(self):
        slopes = fit_scaling(synthetic_records(3))
        assert slopes["feigh"] == pytest.approx(3.0, abs=1e-9)

    def test_needs_four_points(self):
        with pytest.raises(ValueError):
            fit_scaling(synthetic_records(1, ms=(64, 128, 256)))

    def test_warmup_repeat_excluded(self):
        records = []
        for m in (64, 128, 256, 512):
            for rep in range(3):
                secs = 1.0 if rep == 0 else 1e-9 * m  # wild warm-up outlier
                records.append(BenchRecord("feigh", m, 1, 1, 1, rep, secs))
        slopes = fit_scaling(records)
        assert slopes["feigh"] == pytest.approx(1.0, abs=1e-9)

    def test_flatness_of_exact_law(self):
        ratios = normalized_flatness(synthetic_records(1))
        assert ratios["feigh"] == pytest.approx(1.0, abs=1e-9)


class TestDemoLearner:
    def test_zero_iterations(self, tmp_path):
        out = tmp_path / "report.json"
        report = demo_learner(m=16, rank_cap=4, iters=0, seed=1, out=str(out))
        assert report["iterations"] == []
        assert report["accuracy"] is None
        assert report["model"]["alpha"] == 1.0
        assert json.loads(out.read_text())["iters"] == 0

    def test_zero_gain_keeps_distances_constant(self):
        report = demo_learner(m=16, rank_cap=4, iters=4, seed=2, decay=1.0, gain=0.0)
        reg = [it["regular_distance"] for it in report["iterations"]]
        irr = [it["irregular_distance"] for it in report["iterations"]]
        assert reg == [reg[0]] * 4
        assert irr == [irr[0]] * 4

    def test_default_scenario_regression(self):
        # fixed-seed regression; the accuracy value was recorded from the
        # first computation of this exact scenario
        report = demo_learner(m=64, rank_cap=8, iters=20, seed=0)
        assert report["accuracy"] >= 0.9
        assert report["accuracy"] == pytest.approx(1.0, abs=1e-12)


class TestCli:
    def test_run_and_fit(self, tmp_path):
        out = tmp_path / "results.csv"
        code = main([
            "run", "--m-grid", "16,32,64,128", "--repeats", "2", "--seed", "3",
            "--algorithms", "feigh,svd", "--out", str(out),
        ])
        assert code == 0
        assert out.exists()
        assert main(["fit", "--in", str(out)]) == 0

    def test_demo_subcommand(self, tmp_path):
        out = tmp_path / "demo.json"
        code = main([
            "demo-learner", "--m", "16", "--rank-cap", "4", "--iters", "2",
            "--seed", "1", "--out", str(out),
        ])
        assert code == 0
        assert json.loads(out.read_text())["iters"] == 2

    def test_bad_config_exits_nonzero(self, tmp_path):
        code = main([
            "run", "--m-grid", "64:32:x2", "--out", str(tmp_path / "x.csv"),
        ])
        assert code == 1

    def test_parse_m_grid(self):
        assert parse_m_grid("1024:8192:x2") == (1024, 2048, 4096, 8192)
        assert parse_m_grid("64,128") == (64, 128)
        with pytest.raises(ValueError):
            parse_m_grid("64:128")
