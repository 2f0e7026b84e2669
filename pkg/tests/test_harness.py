import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from bilinop import __version__
from bilinop.exceptions import NyquistViolation, PreconditionError
from bilinop.harness import (
    ExperimentConfig,
    run,
    run_bench,
    run_counterexample,
    run_lp_check,
    run_norm_ratio_probe,
    run_paraproduct_study,
    to_csv,
    to_json,
    without_timing,
)
from bilinop.harness.cli import main
from bilinop.harness.trials import grid_for_coverage, grid_for_frequency, random_band, trial_rng
from bilinop.grid import GridSpec
from bilinop.symbols import Multiplier


def cfg(kind, **kw):
    return ExperimentConfig.defaults_for(kind).replace(**kw)


class TestConfig:
    def test_defaults(self):
        c = ExperimentConfig.defaults_for("counterexample")
        assert (c.n, c.scale_l, c.j_max, c.j_min) == (32768, 12.0, 9, 4)
        assert ExperimentConfig.defaults_for("norm-probe").sizes == (4096, 8192, 16384)

    def test_unknown_kind(self):
        with pytest.raises(PreconditionError):
            ExperimentConfig.defaults_for("nope")

    def test_unknown_key(self):
        with pytest.raises(PreconditionError):
            ExperimentConfig().replace(bogus=1)

    def test_none_overrides_ignored(self):
        assert ExperimentConfig().replace(n=None).n == 32768

    def test_load_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"n": 8192, "j_max": 7, "coefficients": [1, 2, 3, 4], "kind": "ignored"}))
        c = ExperimentConfig.load("counterexample", path, seed=5)
        assert (c.n, c.j_max, c.seed, c.coefficients, c.kind) == (8192, 7, 5, (1.0, 2.0, 3.0, 4.0), "counterexample")

    def test_load_rejects_non_object(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1, 2]")
        with pytest.raises(PreconditionError):
            ExperimentConfig.load("counterexample", path)

    def test_round_trip(self):
        c = ExperimentConfig.defaults_for("bench")
        assert ExperimentConfig(**c.to_dict()) == c


class TestTrials:
    def test_rng_streams(self):
        a = trial_rng(3, 1, 2).standard_normal(4)
        assert np.array_equal(a, trial_rng(3, 1, 2).standard_normal(4))
        assert not np.array_equal(a, trial_rng(3, 2, 1).standard_normal(4))

    def test_random_band(self, rng):
        grid = GridSpec(1024, 12.0)
        c = random_band(grid, 2.0, 3.0, rng)
        idx, _ = c.nonzero()
        assert idx.min() == 24 and idx.max() == 36

    def test_random_band_nyquist(self, rng):
        with pytest.raises(NyquistViolation):
            random_band(GridSpec(256, 12.0), 0, 20, rng)

    def test_grid_sizing(self):
        assert grid_for_frequency(10.0, 12.0).nyquist > 10
        assert grid_for_frequency(10.0, 12.0).N == 256
        g = grid_for_coverage(100.0, 12.0)
        assert 2 ** (math.floor(math.log2(g.nyquist)) - 1) >= 100


class TestLPCheck:
    def test_report(self):
        rep = run_lp_check(cfg("lp-check"))
        assert rep["results"]["maxPartitionError"] <= 1e-12
        assert rep["results"]["supportViolations"] == 0
        assert rep["experiment"] == "lp-check" and rep["version"] == __version__


class TestCounterexample:
    def test_default(self):
        rep = run_counterexample(cfg("counterexample"))
        ident, growth = rep["results"]["identity"], rep["results"]["growth"]
        assert ident["relError"] <= 1e-8
        assert 1.5 <= growth["ratioGrowth"] <= 2.5
        assert growth["monotone"] and growth["withinSqrtLaw25pct"]
        assert [r["m"] for r in rep["rows"]] == [4, 8, 16]

    def test_single_term(self):
        rep = run_counterexample(cfg("counterexample", coefficients="single", m_values=()))
        ident = rep["results"]["identity"]
        assert ident["sumCoefficients"] == 1.0
        assert ident["relError"] <= 1e-10

    def test_alternating(self):
        rep = run_counterexample(cfg("counterexample", coefficients="alternating", j_max=9, m_values=()))
        ident = rep["results"]["identity"]
        assert ident["sumCoefficients"] == 0.0
        assert ident["absError"] <= 1e-10

    @pytest.mark.parametrize("strategy", ["dense", "quadrature"])
    def test_other_strategies(self, strategy):
        rep = run_counterexample(cfg("counterexample", n=4096, j_max=6, strategy=strategy, m_values=()))
        assert rep["results"]["identity"]["relError"] <= 1e-8

    def test_explicit_coefficients(self):
        rep = run_counterexample(cfg("counterexample", j_max=6, coefficients=(1.0, -0.5, 2.0), m_values=()))
        assert rep["results"]["identity"]["sumCoefficients"] == 2.5
        with pytest.raises(PreconditionError):
            run_counterexample(cfg("counterexample", j_max=6, coefficients=(1.0,), m_values=()))

    def test_nyquist(self):
        with pytest.raises(NyquistViolation):
            run_counterexample(cfg("counterexample", n=2048))


class TestNormProbe:
    def test_identity_symbol_bounded(self):
        c = cfg("norm-probe", symbol="identity", sizes=(4096,), scale_exponents=(4, 6, 8), trials=2)
        rep = run_norm_ratio_probe(c)
        res = rep["results"]
        assert res["bounded"]
        assert len(rep["rows"]) == 3 * 2
        assert all(r["ratio"] >= 0 for r in rep["rows"])

    def test_custom_symbol(self):
        c = cfg("norm-probe", sizes=(4096,), scale_exponents=(4, 5), trials=1)
        rep = run_norm_ratio_probe(c, symbol=lambda frame: Multiplier(lambda a, b: np.ones_like(a)))
        assert rep["results"]["maxRatio"] > 0

    def test_scale_past_frame(self):
        with pytest.raises(NyquistViolation):
            run_norm_ratio_probe(cfg("norm-probe", sizes=(1024,), scale_exponents=(9,), trials=1))

    def test_smoothness_sweep(self):
        c = cfg("norm-probe", symbol="identity", sizes=(4096,), scale_exponents=(4, 6), trials=1,
                s_values=(0.25, 0.5))
        sweep = run_norm_ratio_probe(c)["results"]["smoothnessSweep"]
        assert [r["s"] for r in sweep] == [0.25, 0.5]

    def test_unknown_symbol(self):
        with pytest.raises(PreconditionError):
            run_norm_ratio_probe(cfg("norm-probe", symbol="mystery", sizes=(4096,), trials=1))


@pytest.fixture(scope="module")
def para_report():
    return run_paraproduct_study(cfg("paraproduct", scale_exponents=(5, 6, 7), trials=2))


class TestParaproductStudy:
    def test_defect_paths_agree(self, para_report):
        assert para_report["results"]["defect"]["maxPathDeviation"] <= 1e-10

    def test_defect_flat_product_growing(self, para_report):
        d = para_report["results"]["defect"]
        assert d["slopeDefectNorm"] <= 0.2
        assert d["slopeProductNorm"] >= 1.5

    def test_swapped_bounded(self, para_report):
        assert para_report["results"]["classical"]["maxOverMinSwapped"] <= 4
        assert para_report["results"]["improved"]["maxOverMinSwapped"] <= 4

    def test_rows(self, para_report):
        studies = [r["study"] for r in para_report["rows"]]
        assert studies.count("defect") == 3
        assert studies.count("classical") == studies.count("improved") == 6

    def test_requires_s_above_one_over_t(self):
        with pytest.raises(PreconditionError):
            run_paraproduct_study(cfg("paraproduct", s=0.25))


class TestBench:
    def test_accuracy_rows(self):
        rep = run_bench(cfg("bench", sizes=(1024, 2048), repeats=1))
        assert rep["results"]["maxDevDenseDiagonal"] <= 1e-8
        assert rep["results"]["maxDevSparseDense"] <= 1e-10
        assert [r["N"] for r in rep["timing"]["rows"]] == [1024, 2048]
        assert rep["timing"]["denseScaling"][0]["from"] == 1024

    @pytest.mark.slow
    def test_dense_quadratic_scaling(self):
        rep = run_bench(cfg("bench", sizes=(2048, 4096, 8192), repeats=3))
        ratios = [s["denseRatio"] for s in rep["timing"]["denseScaling"]]
        assert all(2.5 <= r <= 6 for r in ratios)


class TestReports:
    def test_json_canonical(self):
        rep = run_lp_check(cfg("lp-check", n=1024))
        text = to_json(rep)
        assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"
        assert "timing" not in json.loads(to_json(rep, include_timing=False))
        assert set(json.loads(text)) == {"experiment", "version", "config", "results", "rows", "timing"}

    def test_non_finite(self):
        rep = {"experiment": "x", "results": {"a": float("inf"), "b": np.float64(1.5), "c": np.int64(2)}}
        assert json.loads(to_json(rep))["results"] == {"a": "inf", "b": 1.5, "c": 2}

    def test_csv_long_format(self):
        rep = run_counterexample(cfg("counterexample"))
        rows = list(csv.DictReader(io.StringIO(to_csv(rep))))
        assert len(rows) == 3
        assert rows[0]["experiment"] == "counterexample"
        assert {"m", "ratio", "normT"} <= set(rows[0])

    def test_csv_bench_merges_timing(self):
        rep = run_bench(cfg("bench", sizes=(1024,), repeats=1))
        row = next(csv.DictReader(io.StringIO(to_csv(rep))))
        assert "denseSeconds" in row and "maxDevDenseDiagonal" in row

    def test_determinism(self):
        c = cfg("counterexample", coefficients="random", seed=11)
        assert to_json(without_timing(run(c))) == to_json(without_timing(run(c)))


class TestCLI:
    def test_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["counterexample", "--jmax", "8", "--seed", "3", "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["config"]["j_max"] == 8 and rep["config"]["seed"] == 3

    def test_stdout_csv(self, capsys):
        assert main(["lp-check", "--n", "1024", "--format", "csv"]) == 0
        assert capsys.readouterr().out.startswith("experiment")

    def test_precondition_exit_two(self, capsys):
        assert main(["counterexample", "--n", "2048"]) == 2
        assert "precondition failed" in capsys.readouterr().err

    def test_bad_n_exit_two(self, capsys):
        assert main(["lp-check", "--n", "1000"]) == 2

    def test_bad_exponent_exit_two(self, capsys):
        assert main(["norm-probe", "--p", "2", "--q", "2", "--t", "1"]) == 2
        assert "invalid configuration" in capsys.readouterr().err

    def test_config_file(self, tmp_path):
        conf = tmp_path / "c.json"
        conf.write_text(json.dumps({"sizes": [4096], "scale_exponents": [4], "trials": 1, "symbol": "identity"}))
        out = tmp_path / "r.json"
        assert main(["norm-probe", "--config", str(conf), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["config"]["sizes"] == [4096]

    def test_unknown_config_key(self, tmp_path):
        conf = tmp_path / "c.json"
        conf.write_text(json.dumps({"wrong": 1}))
        assert main(["lp-check", "--config", str(conf)]) == 2

    def test_entry_point(self, tmp_path):
        out = tmp_path / "r.json"
        proc = subprocess.run(
            [sys.executable, "-m", "bilinop.harness.cli", "lp-check", "--n", "1024", "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert json.loads(out.read_text())["results"]["maxPartitionError"] <= 1e-12
