"""End-to-end acceptance checks; each records one PASS/FAIL line for the terminal summary."""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from bilinop.frames import build_lp_frame
from bilinop.grid import GridSpec, SampledFunction, analyze, lebesgue_norm, pairing
from bilinop.harness import ExperimentConfig, run_counterexample, run_norm_ratio_probe, run_paraproduct_study
from bilinop.harness.experiments import gaussian_kernel
from bilinop.harness.trials import random_band_function, trial_rng
from bilinop.operators import (
    EvalStrategy,
    apply_bilinear,
    apply_diagonal_convolution,
    defect_symbol,
    diagonal_weights,
    multiplication_defect,
    truncation_radius,
)
from bilinop.symbols import (
    Multiplier,
    SamplePlan,
    SymbolClassParams,
    check_class_estimate,
    make_counterexample_symbol,
    transpose_symbol,
)

from conftest import ACCEPTANCE


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, f"criterion {k}: {detail}"


def best_time(fn, repeats=3):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def test_01_partition_of_unity():
    t0 = time.perf_counter()
    frame = build_lp_frame(GridSpec(4096, 12.0))
    err = frame.partition_error()
    elapsed = time.perf_counter() - t0
    record(1, err <= 1e-12 and elapsed < 1.0, f"max error {err:.2e}, {elapsed:.3f} s")


def test_02_counterexample_identity():
    cfg = ExperimentConfig.defaults_for("counterexample").replace(n=32768, scale_l=12.0, j_max=9, m_values=())
    t0 = time.perf_counter()
    ident = run_counterexample(cfg)["results"]["identity"]
    elapsed = time.perf_counter() - t0
    ok = ident["relError"] <= 1e-8 and elapsed < 30 and ident["strategy"] == "sparse"
    record(2, ok, f"relative L2 error {ident['relError']:.2e}, {elapsed:.3f} s")


def test_03_sqrt_growth():
    cfg = ExperimentConfig.defaults_for("counterexample").replace(
        coefficients="ones", p=4.0, q=4.0, t=2.0, m_values=(4, 8, 16)
    )
    rows = run_counterexample(cfg)["rows"]
    ratio = {r["m"]: r["ratio"] for r in rows}
    growth = ratio[16] / ratio[4]
    monotone = ratio[4] < ratio[8] < ratio[16]
    record(3, 1.5 <= growth <= 2.5 and monotone, f"ratio(16)/ratio(4) = {growth:.3f}, monotone={monotone}")


def test_04_constant_symbol_product():
    grid = GridSpec(1024, 12.0)
    one = Multiplier(lambda xi, eta: np.ones(np.broadcast(xi, eta).shape))
    worst = 0.0
    for trial in range(100):
        rng = trial_rng(4, trial)
        f = random_band_function(grid, -10.0, 10.0, rng)
        g = random_band_function(grid, -10.0, 10.0, rng)
        out = apply_bilinear(one, f, g)
        worst = max(worst, float(np.max(np.abs(out.values - f.values * g.values))))
    record(4, worst <= 1e-12, f"max |T1(f,g) - fg| = {worst:.2e} over 100 pairs")


def test_05_defect_strips():
    grid = GridSpec(2048, 12.0)
    tau = defect_symbol()
    worst, tau_max = 0.0, 0.0
    for trial in range(50):
        rng = trial_rng(5, trial)
        # f above g by at least 2 on both diagonals: xi - eta >= 2 and xi + eta >= 2
        lo_g = rng.uniform(0.0, 10.0)
        lo_f = lo_g + rng.uniform(2.0, 2.0 + 10.0) + 1.0
        g = random_band_function(grid, lo_g, lo_g + 1.0, rng)
        f = random_band_function(grid, lo_f, lo_f + 1.0, rng)
        sign = rng.choice([-1.0, 1.0])
        if sign < 0:
            # mirror both spectra; the strips are symmetric
            f, g = f.conj(), g.conj()
        if trial % 2:
            f, g = g, f
        idf, _ = analyze(f).nonzero(1e-12)
        idg, _ = analyze(g).nonzero(1e-12)
        weights = tau.multiplier(idf[:, None] / grid.L, idg[None, :] / grid.L)
        tau_max = max(tau_max, float(np.max(np.abs(weights))))
        worst = max(worst, float(np.max(np.abs(multiplication_defect(f, g).values))))
    record(5, worst <= 1e-11 and tau_max == 0, f"max |D(f,g)| = {worst:.2e}, max tau on support = {tau_max:.1e}")


def test_06_diagonal_convolution():
    grid = GridSpec(4096, 12.0)
    kernel = gaussian_kernel(6.0)
    radius = truncation_radius(diagonal_weights(kernel.m, grid))
    rng = trial_rng(6)
    edge = (grid.N // 4 - 1) / grid.L
    f = random_band_function(grid, -edge, edge, rng)
    g = random_band_function(grid, -edge, edge, rng)
    dense = apply_bilinear(kernel, f, g, EvalStrategy.DENSE)
    diag = apply_diagonal_convolution(kernel, f, g)
    dev = float(np.max(np.abs(dense.values - diag.values)))
    t_dense = best_time(lambda: apply_bilinear(kernel, f, g, EvalStrategy.DENSE))
    t_diag = best_time(lambda: apply_diagonal_convolution(kernel, f, g))
    speedup = t_dense / t_diag
    ok = dev <= 1e-8 and radius <= grid.N // 64 and speedup >= 5
    record(6, ok, f"max deviation {dev:.2e}, R = {radius} <= {grid.N // 64}, speedup {speedup:.1f}x")


def test_07_duality():
    grid = GridSpec(512, 12.0)
    sigma = Multiplier(lambda xi, eta: np.exp(-((xi - 0.5 * eta) ** 2) / 50) * (1 + 1j * np.sin(xi + eta)))
    worst = 0.0
    for trial in range(100):
        rng = trial_rng(7, trial)
        f, g, h = (random_band_function(grid, -6.0, 6.0, rng) for _ in range(3))
        scale = lebesgue_norm(f, 2) * lebesgue_norm(g, 2) * lebesgue_norm(h, 2)
        lhs = pairing(apply_bilinear(sigma, f, g), h)
        first = pairing(apply_bilinear(transpose_symbol(sigma, 1), h, g), f)
        second = pairing(apply_bilinear(transpose_symbol(sigma, 2), f, h), g)
        worst = max(worst, abs(lhs - first) / scale, abs(lhs - second) / scale)
    record(7, worst <= 1e-10, f"max relative pairing gap {worst:.2e} over 100 triples, both transposes")


def test_08_sobolev_probe():
    cfg = ExperimentConfig.defaults_for("norm-probe").replace(
        symbol="reduced", s=1.0, p=4.0, q=4.0, t=2.0, sizes=(4096, 8192, 16384), scale_exponents=(4, 5, 6, 7, 8, 9)
    )
    res = run_norm_ratio_probe(cfg)["results"]
    record(8, res["maxOverMin"] <= 4, f"max/min of scale maxima = {res['maxOverMin']:.3f}")


def test_09_defect_gain():
    cfg = ExperimentConfig.defaults_for("paraproduct").replace(
        s=1.0, t=2.0, p=4.0, q=4.0, scale_exponents=(5, 6, 7, 8, 9, 10), trials=1
    )
    d = run_paraproduct_study(cfg)["results"]["defect"]
    ok = d["slopeDefectNorm"] <= 0.2 and d["slopeProductNorm"] >= 1.5
    record(9, ok, f"slope ||D|| = {d['slopeDefectNorm']:.3f}, slope ||fg|| = {d['slopeProductNorm']:.3f}")


def test_10_class_discrimination():
    grid = GridSpec(32768, 12.0)
    plan = SamplePlan.for_grid(grid, shells=range(0, 11), per_shell=16, n_x=8)
    s011 = SymbolClassParams(0.0, 1.0, 1.0, math.pi / 4)
    s010 = SymbolClassParams(0.0, 1.0, 0.0, math.pi / 4)
    levels = (6, 7, 8, 9)
    c11, c10 = {}, {}
    for jm in levels:
        sym = make_counterexample_symbol(grid, jm)
        c11[jm] = check_class_estimate(sym, s011, 2, plan).constants
        c10[jm] = check_class_estimate(sym, s010, 1, plan).constants[(1, 0, 0)]
    stable = max(
        max(c11[j][k] for j in levels) / min(c11[j][k] for j in levels)
        for k in c11[6]
        if min(c11[j][k] for j in levels) > 0
    )
    growth_ok = all(c10[b] >= 2.0 ** (b - a - 1) * c10[a] for a in levels for b in levels if b > a)
    ok = stable <= 2 and growth_ok
    detail = (
        f"S0_11 spread {stable:.3f}; S0_10 alpha=1 constants "
        + ", ".join(f"{c10[j]:.1f}" for j in levels)
    )
    record(10, ok, detail)


def test_11_determinism(tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "bilinop.harness.cli", "counterexample", "--seed", "7", "--out", str(path)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        report = json.loads(path.read_text())
        report.pop("timing")
        outs.append(json.dumps(report, sort_keys=True, indent=2).encode())
    record(11, outs[0] == outs[1], f"{len(outs[0])} bytes, identical={outs[0] == outs[1]}")
