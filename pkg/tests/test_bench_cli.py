import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings as hyp_settings, strategies as st

import splitqp as sq
from splitqp.bench import (check_optimality, normalized_ratios, run_bench,
                           shifted_geometric_mean, solve_instance)
from splitqp.settings import Settings

from conftest import random_box_qp


class TestShiftedGeometricMean:
    def test_single_element_identity(self):
        for t in (0.0, 0.3, 4.0, 1e3):
            assert shifted_geometric_mean([t]) == pytest.approx(t, abs=1e-12)

    def test_constant_array_identity(self):
        assert shifted_geometric_mean([4.0, 4.0]) == pytest.approx(4.0)

    def test_reference_value(self):
        assert shifted_geometric_mean([1.0, 9.0]) == pytest.approx(
            3.4721359550, abs=1e-9)
        assert shifted_geometric_mean([1.0, 9.0]) == pytest.approx(
            np.sqrt(20.0) - 1.0, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            shifted_geometric_mean([])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            shifted_geometric_mean([-1.0])

    @given(st.lists(st.floats(0.0, 1e6), min_size=1, max_size=40),
           st.floats(0.5, 10.0))
    @hyp_settings(max_examples=60, deadline=None)
    def test_between_min_and_max(self, times, shift):
        g = shifted_geometric_mean(times, shift=shift)
        slack = 1e-9 + 1e-12 * (max(times) + shift)   # log/exp round-off
        assert min(times) - slack <= g <= max(times) + slack

    def test_normalized_ratios(self):
        gm = {"a": shifted_geometric_mean([1.0, 2.0]),
              "b": shifted_geometric_mean([2.0, 4.0]),
              "c": shifted_geometric_mean([1.5, 3.0])}
        ratios = normalized_ratios(gm)
        assert min(ratios.values()) == 1.0
        assert ratios["a"] == 1.0
        assert all(r >= 1.0 for r in ratios.values())


class TestExternalCheck:
    def test_accepts_every_solver_solved_point(self):
        for seed in range(30):
            p = random_box_qp(seed)
            res = sq.solve(p)
            assert res.is_solved
            ok_p, ok_d, _, _ = check_optimality(p, res.x, res.y, res.z)
            assert ok_p and ok_d, seed

    def test_rejects_wrong_point(self):
        p = sq.problem_from_dense([[1.0]], [1.0], [[1.0]], [0.0], [np.inf])
        ok_p, ok_d, _, _ = check_optimality(p, np.array([-5.0]),
                                            np.array([3.0]))
        assert not (ok_p and ok_d)

    def test_infinite_bounds_ignored(self):
        p = sq.problem_from_dense([[1.0]], [0.0], [[1.0]], [-np.inf], [np.inf])
        ok_p, ok_d, viol, _ = check_optimality(p, np.zeros(1), np.zeros(1))
        assert ok_p and ok_d and viol == 0.0


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    for seed in range(3):
        sq.write_qp(sq.gen_random_qp(2, seed), out / f"rand_{seed}.json")
        sq.write_qp(sq.gen_svm(2, seed, samples_per_feature=2),
                    out / f"svm_{seed}.json")
    return out


class TestBenchHarness:
    def test_single_trivial_instance_no_failures(self, tmp_path):
        p = sq.problem_from_dense([[1.0]], [0.0], [[1.0]], [-1.0], [1.0],
                                  metadata={"class": "trivial"})
        sq.write_qp(p, tmp_path / "t.json")
        report = run_bench(tmp_path)
        assert len(report.records) == 1
        agg = report.aggregate()[0]
        assert agg["failures"] == 0
        assert agg["class"] == "trivial"

    def test_corpus_aggregation_and_csv(self, corpus_dir, tmp_path):
        report = run_bench(corpus_dir, repeat=2)
        assert len(report.records) == 6
        assert not any(r.failure for r in report.records)
        classes = {row["class"] for row in report.aggregate()}
        assert classes == {"random_qp", "svm"}
        csv_path = tmp_path / "agg.csv"
        report.to_csv(csv_path)
        assert csv_path.read_text().startswith("class,")
        table = report.table()
        assert "random_qp" in table and "svm" in table

    def test_failure_charged_at_cap(self):
        # starve the solver so the external check cannot pass
        p = sq.gen_random_qp(2, 0)
        rec = solve_instance(p, Settings(max_iter=1, polish=False),
                             time_cap=123.0)
        assert rec.failure
        assert rec.charged_time == 123.0

    def test_deliberately_wrong_result_fails_check(self):
        p = sq.gen_random_qp(2, 1)
        ok_p, ok_d, _, _ = check_optimality(p, np.full(p.n, 1e3),
                                            np.zeros(p.m))
        assert not (ok_p and ok_d)


class TestWarmStartStudy:
    def test_desk_scale_ratios(self):
        stats = sq.run_lasso_path(n=5, n_lambdas=12, seed=0,
                                  settings=Settings(polish=False),
                                  samples_per_feature=20)
        assert stats["warm"]["total_iterations"] > 0
        # at toy scale the termination-check interval floors the warm
        # iteration counts; the full-scale ratio is asserted in acceptance
        assert stats["iteration_improvement"] >= 1.5
        warm = stats["warm"]
        assert warm["symbolic_factorizations"] == 1
        assert warm["numeric_factorizations"] == 1 + warm["rho_updates"]
        assert all(s in ("solved", "solved_inaccurate")
                   for s in warm["statuses"])


def run_cli(*args):
    proc = subprocess.run([sys.executable, "-m", "splitqp.cli", *args],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


class TestCli:
    def test_solve_trivial_instance(self, tmp_path):
        p = sq.problem_from_dense([[1.0]], [0.0], [[1.0]], [-1.0], [1.0])
        path = tmp_path / "box.json"
        sq.write_qp(p, path)
        code, out, _ = run_cli("solve", str(path))
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] == "solved"
        assert abs(doc["objective"]) <= 1e-9

    def test_high_accuracy_flags(self, tmp_path):
        p = sq.gen_random_qp(2, 0)
        path = tmp_path / "r.json"
        sq.write_qp(p, path)
        code, out, _ = run_cli("solve", str(path), "--eps-abs", "1e-5",
                               "--eps-rel", "1e-5", "--no-polish")
        assert code == 0
        doc = json.loads(out)
        assert doc["status"] in ("solved", "solved_inaccurate")
        assert doc["polish_succeeded"] is False
        ok_p, ok_d, _, _ = check_optimality(p, np.array(doc["x"]),
                                            np.array(doc["y"]),
                                            eps_abs=1e-5, eps_rel=1e-5)
        assert ok_p and ok_d

    def test_solve_missing_file_errors(self):
        code, _, err = run_cli("solve", "/nonexistent/file.json")
        assert code == 1
        assert "error" in err

    def test_generate_sweep_counts(self, tmp_path):
        out = tmp_path / "gen"
        code, msg, _ = run_cli("generate", "random_qp", "--dims", "2,3",
                               "--seeds", "0:5", "--out-dir", str(out))
        assert code == 0
        files = sorted(os.listdir(out))
        assert len(files) == 10   # 2 dims x 5 seeds
        assert "wrote 10" in msg
        meta = json.loads((out / files[0]).read_text())["metadata"]
        assert set(meta) >= {"class", "dim", "seed"}

    def test_generate_all_classes_sweep_count(self, tmp_path):
        # 7 classes x 1 dim x 10 seeds
        out = tmp_path / "all"
        code, msg, _ = run_cli("generate", "all", "--dims", "2",
                               "--seeds", "0:10", "--out-dir", str(out))
        assert code == 0
        assert len(os.listdir(out)) == 70
        assert "wrote 70" in msg

    def test_generate_files_bit_identical_across_runs(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            code, _, _ = run_cli("generate", "huber", "--dims", "2",
                                 "--seeds", "7", "--out-dir", str(out))
            assert code == 0
        f1 = out1 / os.listdir(out1)[0]
        f2 = out2 / os.listdir(out2)[0]
        assert f1.read_bytes() == f2.read_bytes()

    def test_bench_corpus(self, corpus_dir, tmp_path):
        csv_path = tmp_path / "summary.csv"
        code, out, _ = run_cli("bench", str(corpus_dir), "--csv",
                               str(csv_path))
        assert code == 0
        assert "random_qp" in out
        assert csv_path.exists()

    def test_bench_warm_start_study(self):
        code, out, _ = run_cli("bench", "--warm-start-study", "lasso",
                               "--dim", "3", "--n-lambdas", "5",
                               "--no-polish")
        assert code == 0
        doc = json.loads(out)
        assert doc["warm_symbolic_factorizations"] == 1
        assert doc["cold_iterations"] >= doc["warm_iterations"]

    def test_unknown_class_rejected(self, tmp_path):
        code, _, err = run_cli("generate", "nope", "--dims", "2",
                               "--out-dir", str(tmp_path / "x"))
        assert code == 1 and "unknown class" in err
