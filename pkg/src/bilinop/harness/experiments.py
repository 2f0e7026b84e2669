"""Experiment runners.  Each returns a report dictionary (see ``docs/reports.md``)."""

from __future__ import annotations

import math
import time

import numpy as np

from .. import __version__
from ..exceptions import NyquistViolation, PreconditionError
from ..frames import BumpProfile, build_theta
from ..grid import (
    GridSpec,
    SampledFunction,
    SpectralCoefficients,
    convolve_spectra,
    lebesgue_norm,
    pointwise_product,
    synthesize,
)
from ..operators import (
    EvalStrategy,
    ExponentTriple,
    SobolevParams,
    apply_bilinear,
    apply_bilinear_spectral,
    apply_diagonal_convolution,
    classical_paraproduct,
    diagonal_weights,
    improved_paraproduct,
    multiplication_defect,
    sobolev_norm,
    truncation_radius,
)
from ..symbols import (
    DiagonalKernel,
    Multiplier,
    counterexample_psi1,
    make_counterexample_symbol,
    make_reduced_symbol,
)
from .config import ExperimentConfig
from .trials import (
    frame_for,
    grid_for_coverage,
    grid_for_frequency,
    normalized,
    random_band,
    random_band_function,
    trial_rng,
)

#: "bounded" verdict of the ratio-across-scales rule
BOUNDED_MAX_OVER_MIN = 4.0


def _report(cfg: ExperimentConfig, results: dict, rows: list, timing: dict) -> dict:
    return {
        "experiment": cfg.kind,
        "version": __version__,
        "config": cfg.to_dict(),
        "results": results,
        "rows": rows,
        "timing": timing,
    }


def _slope(xs, ys) -> float:
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    good = (xs > 0) & (ys > 0)
    if good.sum() < 2:
        return 0.0
    return float(np.polyfit(np.log(xs[good]), np.log(ys[good]), 1)[0])


def _max_over_min(values) -> float:
    values = [v for v in values]
    lo = min(values)
    return float(max(values) / lo) if lo > 0 else float("nan")


# --------------------------------------------------------------------------
# lp-check


def run_lp_check(cfg: ExperimentConfig) -> dict:
    start = time.perf_counter()
    grid = GridSpec(cfg.n, cfg.scale_l)
    frame = frame_for(grid, cfg.order)
    results = {
        "maxPartitionError": frame.partition_error(),
        "maxPartitionErrorHomogeneous": frame.partition_error(homogeneous=True),
        "kMax": frame.k_max,
        "kMin": frame.k_min,
        "supportViolations": frame.support_violations(),
    }
    # one row per dyadic shell 2^(k-1) <= |xi| < 2^k (k = 0 holds |xi| < 1)
    xi = np.abs(grid.frequencies)
    err = np.abs(frame.partition_sum() - 1.0)
    rows = []
    for k in range(0, frame.k_max + 1):
        shell = (xi < 2.0**k) & (xi >= (2.0 ** (k - 1) if k else 0.0))
        rows.append({"k": k, "latticePoints": int(shell.sum()), "maxError": float(err[shell].max())})
    return _report(cfg, results, rows, {"seconds": time.perf_counter() - start})


# --------------------------------------------------------------------------
# counterexample


def _coefficient_pattern(cfg: ExperimentConfig) -> np.ndarray:
    count = cfg.j_max - cfg.j_min + 1
    pattern = cfg.coefficients
    js = np.arange(cfg.j_min, cfg.j_max + 1)
    if isinstance(pattern, (list, tuple)):
        a = np.asarray(pattern, dtype=float)
        if a.size != count:
            raise PreconditionError(f"{a.size} coefficients given for {count} terms")
        return a
    if pattern == "ones":
        return np.ones(count)
    if pattern == "alternating":
        return (-1.0) ** js
    if pattern == "single":
        return (js == cfg.j_min).astype(float)
    if pattern == "random":
        return trial_rng(cfg.seed, 0).standard_normal(count)
    raise PreconditionError(f"unknown coefficient pattern {pattern!r}")


def counterexample_input(grid: GridSpec, psi1: SpectralCoefficients, a, j_min: int) -> SpectralCoefficients:
    """Coefficients of ``f = sum_j a_j exp(i 2^j x) psi1``."""
    total = SpectralCoefficients.zeros(grid)
    for j, aj in zip(range(j_min, j_min + len(a)), a):
        total = total + psi1.shift(int(round(2.0**j * grid.L))).scale(aj)
    return total.to_sparse()


def _norm(c: SpectralCoefficients, p: float) -> float:
    if p == int(p) and int(p) % 2 == 0:
        return lebesgue_norm(c, p)
    if c.grid.N <= 1 << 22:
        return lebesgue_norm(synthesize(c), p)
    raise PreconditionError(f"L^{p:g} on N={c.grid.N} needs an even integer exponent")


def run_counterexample(cfg: ExperimentConfig) -> dict:
    """Exact identity check plus the growth of the operator ratio with the term count."""
    timing = {}
    start = time.perf_counter()
    profile = BumpProfile(cfg.order)
    grid = GridSpec(cfg.n, cfg.scale_l)
    sigma = make_counterexample_symbol(grid, cfg.j_max, j_min=cfg.j_min)
    psi1 = counterexample_psi1(grid, profile)
    a = _coefficient_pattern(cfg)
    f = counterexample_input(grid, psi1, a, cfg.j_min)
    out = apply_bilinear_spectral(sigma, f, psi1, cfg.strategy)
    square = convolve_spectra(psi1, psi1)
    expected = square.scale(a.sum())
    diff = (out + expected.scale(-1)).l2_energy()
    abs_err = math.sqrt(grid.period * diff)
    ref = math.sqrt(grid.period * expected.l2_energy())
    base = math.sqrt(grid.period * square.l2_energy())
    identity = {
        "coefficients": a.tolist(),
        "sumCoefficients": float(a.sum()),
        "absError": abs_err,
        "relError": abs_err / (ref if ref > 0 else base),
        "strategy": EvalStrategy(cfg.strategy).value,
    }
    timing["identitySeconds"] = time.perf_counter() - start

    triple = ExponentTriple(cfg.p, cfg.q, cfg.t)
    rows = []
    start = time.perf_counter()
    for m in cfg.m_values:
        if m < 1:
            raise PreconditionError("term counts must be >= 1")
        j_max = cfg.j_min + m - 1
        g_m = grid_for_frequency(2.0**j_max * 5.0 / 3.0, cfg.scale_l)
        sig_m = make_counterexample_symbol(g_m, j_max, j_min=cfg.j_min)
        p1 = counterexample_psi1(g_m, profile)
        f_m = counterexample_input(g_m, p1, np.ones(m), cfg.j_min)
        t_m = apply_bilinear_spectral(sig_m, f_m, p1, EvalStrategy.SPARSE)
        nt, nf, ng = _norm(t_m, triple.t), _norm(f_m, triple.p), _norm(p1, triple.q)
        rows.append({"m": m, "jMax": j_max, "N": g_m.N, "normT": nt, "normF": nf, "normPsi1": ng,
                     "ratio": nt / (nf * ng)})
    timing["growthSeconds"] = time.perf_counter() - start
    growth = {}
    if rows:
        ms = [r["m"] for r in rows]
        ratios = [r["ratio"] for r in rows]
        lo, hi = int(np.argmin(ms)), int(np.argmax(ms))
        observed = ratios[hi] / ratios[lo]
        expected_sqrt = math.sqrt(ms[hi] / ms[lo])
        order = np.argsort(ms)
        growth = {
            "exponent": _slope(ms, ratios),
            "ratioGrowth": observed,
            "sqrtLawGrowth": expected_sqrt,
            "withinSqrtLaw25pct": bool(abs(observed / expected_sqrt - 1) <= 0.25),
            "monotone": bool(np.all(np.diff(np.asarray(ratios)[order]) > 0)),
        }
    return _report(cfg, {"identity": identity, "growth": growth}, rows, timing)


# --------------------------------------------------------------------------
# norm-ratio probe


def reduced_coefficients(k_max: int, seed: int):
    """``m_j(y) = 1 + cos(y/4 + phi_j)/2`` for ``j >= 2`` and ``m_j = 1`` below (fixed ``C^r`` bounds)."""
    phases = trial_rng(seed, 1 << 20).uniform(0.0, 2 * math.pi, 64)
    coeffs = []
    for j in range(k_max + 1):
        if j < 2:
            coeffs.append(lambda y: np.ones_like(np.asarray(y, dtype=float)))
        else:
            coeffs.append(lambda y, ph=phases[j]: 1.0 + 0.5 * np.cos(np.asarray(y) / 4.0 + ph))
    return coeffs


def probe_symbol(name: str, frame, cfg: ExperimentConfig):
    if name == "identity":
        return Multiplier(lambda xi, eta: np.ones(np.broadcast(xi, eta).shape))
    if name == "reduced":
        return make_reduced_symbol(reduced_coefficients(frame.k_max, cfg.seed), frame)
    if name == "counterexample":
        top = int(math.floor(math.log2(frame.grid.nyquist * 3 / 5 - 1e-9)))
        return make_counterexample_symbol(frame.grid, min(cfg.j_max, top), j_min=cfg.j_min)
    raise PreconditionError(f"unknown probe symbol {name!r}")


def run_norm_ratio_probe(cfg: ExperimentConfig, symbol=None) -> dict:
    """Sobolev norm ratios of ``T_sigma`` over random pairs across grids and scales.

    Each trial pairs a random function on ``[lam, (1 + band_width) lam]`` with a
    random function on ``[-low_band, low_band]``; odd trials swap the slots.
    Inputs are normalized to unit ``W^{s,p}`` and ``W^{s,q}`` norm, so the
    ratio is ``||T(f, g)||_{W^{s,t}}``.  ``symbol`` is a callable
    ``frame -> Symbol`` or ``None`` to use ``cfg.symbol``.
    """
    triple = ExponentTriple(cfg.p, cfg.q, cfg.t)
    rows, scale_max = [], []
    start = time.perf_counter()
    for N in cfg.sizes:
        grid = GridSpec(N, cfg.scale_l)
        frame = frame_for(grid, cfg.order)
        sigma = symbol(frame) if symbol is not None else probe_symbol(cfg.symbol, frame, cfg)
        sp = SobolevParams(cfg.s, triple.p, frame)
        sq = SobolevParams(cfg.s, triple.q, frame)
        st = SobolevParams(cfg.s, triple.t, frame)
        for e in cfg.scale_exponents:
            lam = 2.0**e
            top = (1 + cfg.band_width) * lam + cfg.low_band
            if top > 2.0**frame.k_max:
                raise NyquistViolation(
                    f"scale 2^{e}: band edge {top:g} exceeds the frame coverage 2^{frame.k_max} (N={N})"
                )
            best = 0.0
            for trial in range(cfg.trials):
                rng = trial_rng(cfg.seed, N, e, trial)
                high = random_band_function(grid, lam, (1 + cfg.band_width) * lam, rng)
                low = random_band_function(grid, -cfg.low_band, cfg.low_band, rng)
                f, g = (high, low) if trial % 2 == 0 else (low, high)
                nf, ng = sobolev_norm(f, sp), sobolev_norm(g, sq)
                f, g = normalized(f, nf), normalized(g, ng)
                out = apply_bilinear(sigma, f, g, cfg.strategy)
                nt = sobolev_norm(out, st)
                best = max(best, nt)
                rows.append({"N": N, "lambda": lam, "trial": trial, "highSlot": "f" if trial % 2 == 0 else "g",
                             "rawNormF": nf, "rawNormG": ng, "normT": nt, "ratio": nt})
            scale_max.append({"N": N, "lambda": lam, "maxRatio": best})
    maxima = [r["maxRatio"] for r in scale_max]
    mom = _max_over_min(maxima)
    results = {
        "symbol": cfg.symbol if symbol is None else getattr(symbol, "__name__", "custom"),
        "scaleMax": scale_max,
        "maxRatio": max(maxima),
        "maxOverMin": mom,
        "bounded": bool(mom <= BOUNDED_MAX_OVER_MIN),
        "slopeVsLambda": _slope([r["lambda"] for r in scale_max], maxima),
    }
    if cfg.s_values:
        # smoothness sweep: trends only, no verdict on sharpness
        sweep = []
        for s in cfg.s_values:
            sub = run_norm_ratio_probe(cfg.replace(s=s, s_values=()), symbol)["results"]
            sweep.append({"s": s, "maxRatio": sub["maxRatio"], "maxOverMin": sub["maxOverMin"],
                          "slopeVsLambda": sub["slopeVsLambda"]})
        results["smoothnessSweep"] = sweep
    return _report(cfg, results, rows, {"seconds": time.perf_counter() - start})


# --------------------------------------------------------------------------
# paraproduct study


def defect_pair(grid: GridSpec, lam: float, profile: BumpProfile, t: float):
    """``f = e^{i lam x} phi`` and ``g = e^{-i lam x} phi + e^{i lam x / 2} phi``, unit ``L^t``.

    ``phi`` has spectrum in ``[0, 1/3]``.  The pair meets the anti-diagonal
    strip (the ``-lam`` component) and a cone away from both strips (the
    ``lam / 2`` component), so ``D(f, g)`` keeps only the low-frequency part
    while ``fg`` carries a component at ``3 lam / 2``.
    """
    phi = counterexample_psi1(grid, profile)
    shift = lam * grid.L
    if abs(shift / 2 - round(shift / 2)) > 1e-9:
        raise NyquistViolation(f"lam/2 = {lam / 2:g} is not a lattice frequency for L={grid.L:g}")
    f = synthesize(phi.shift(int(round(shift))))
    g = synthesize(phi.shift(-int(round(shift))) + phi.shift(int(round(shift / 2))))
    return normalized(f, lebesgue_norm(f, t)), normalized(g, lebesgue_norm(g, t))


def run_paraproduct_study(cfg: ExperimentConfig) -> dict:
    """Classical and improved paraproduct ratios and the defect regularity gain.

    (a) classical: ``b`` random on ``[-low_band, low_band]`` with unit sup norm,
        ``h`` random at scale ``lam`` with unit ``W^{s,p}`` norm.  Reports
        ``||Pi_b(h)||`` (literal slots, ``b`` must carry the high frequency) and
        ``||Pi_h(b)||`` (``h`` carries it) in ``W^{s,p}``.
    (b) improved: same pair with ``b`` in unit ``W^{eps,p}`` and ``h`` in unit
        ``W^{s,q}``; reports both slot orders of the improved paraproduct in ``W^{s,t}``.
    (c) defect: the pair of :func:`defect_pair`; ``||D||_{W^{2s,t}}``,
        ``||fg||_{W^{2s,t}}`` and the classical error in ``W^{2s-1/t,t}``.
    """
    triple = ExponentTriple(cfg.p, cfg.q, cfg.t)
    if cfg.s < 1.0 / triple.t:
        raise PreconditionError(f"the defect study needs s >= 1/t, got s={cfg.s}, t={triple.t}")
    profile = BumpProfile(cfg.order)
    theta = build_theta(profile)
    rows = []
    start = time.perf_counter()
    summary = {"classical": [], "improved": [], "defect": []}
    for e in cfg.scale_exponents:
        lam = 2.0**e
        grid = grid_for_coverage(max(1.5 * lam + 1, (1 + cfg.band_width) * lam + cfg.low_band), cfg.scale_l)
        frame = frame_for(grid, cfg.order)
        sp = SobolevParams(cfg.s, triple.p, frame)
        sq = SobolevParams(cfg.s, triple.q, frame)
        st = SobolevParams(cfg.s, triple.t, frame)
        se = SobolevParams(cfg.epsilon, triple.p, frame)
        worst = {"classicalLiteral": 0.0, "classicalSwapped": 0.0, "improvedLiteral": 0.0, "improvedSwapped": 0.0}
        for trial in range(cfg.trials):
            rng = trial_rng(cfg.seed, e, trial)
            high = random_band_function(grid, lam, (1 + cfg.band_width) * lam, rng)
            low = random_band_function(grid, -cfg.low_band, cfg.low_band, rng)
            b = normalized(low, lebesgue_norm(low, math.inf))
            h = normalized(high, sobolev_norm(high, sp))
            lit = sobolev_norm(classical_paraproduct(b, h, frame), sp)
            swp = sobolev_norm(classical_paraproduct(h, b, frame), sp)
            rows.append({"study": "classical", "lambda": lam, "N": grid.N, "trial": trial,
                         "ratioLiteral": lit, "ratioSwapped": swp})
            bi = normalized(low, sobolev_norm(low, se))
            hi = normalized(high, sobolev_norm(high, sq))
            ilit = sobolev_norm(improved_paraproduct(bi, hi, theta, cfg.strategy), st)
            iswp = sobolev_norm(improved_paraproduct(hi, bi, theta, cfg.strategy), st)
            rows.append({"study": "improved", "lambda": lam, "N": grid.N, "trial": trial,
                         "ratioLiteral": ilit, "ratioSwapped": iswp})
            worst["classicalLiteral"] = max(worst["classicalLiteral"], lit)
            worst["classicalSwapped"] = max(worst["classicalSwapped"], swp)
            worst["improvedLiteral"] = max(worst["improvedLiteral"], ilit)
            worst["improvedSwapped"] = max(worst["improvedSwapped"], iswp)
        summary["classical"].append({"lambda": lam, "maxLiteral": worst["classicalLiteral"],
                                     "maxSwapped": worst["classicalSwapped"]})
        summary["improved"].append({"lambda": lam, "maxLiteral": worst["improvedLiteral"],
                                    "maxSwapped": worst["improvedSwapped"]})

        f, g = defect_pair(grid, lam, profile, triple.t)
        s2 = SobolevParams(2 * cfg.s, triple.t, frame)
        sc = SobolevParams(2 * cfg.s - 1.0 / triple.t, triple.t, frame)
        d_sym = multiplication_defect(f, g, theta, strategy=cfg.strategy)
        d_par = multiplication_defect(f, g, theta, method="paraproduct", strategy=cfg.strategy)
        fg = pointwise_product(f, g)
        classical_err = fg - classical_paraproduct(f, g, frame) - classical_paraproduct(g, f, frame)
        nfs, ngs = sobolev_norm(f, st), sobolev_norm(g, st)
        dn, pn, cn = sobolev_norm(d_sym, s2), sobolev_norm(fg, s2), sobolev_norm(classical_err, sc)
        entry = {"study": "defect", "lambda": lam, "N": grid.N, "defectNorm": dn, "productNorm": pn,
                 "classicalErrorNorm": cn, "defectRatio": dn / (nfs * ngs), "classicalRatio": cn / (nfs * ngs),
                 "pathDeviation": float(np.max(np.abs(d_sym.values - d_par.values)))}
        rows.append(entry)
        summary["defect"].append(entry)

    lams = [r["lambda"] for r in summary["defect"]]
    results = {
        "epsilon": cfg.epsilon,
        "classical": {
            "scaleMax": summary["classical"],
            "maxOverMinSwapped": _max_over_min([r["maxSwapped"] for r in summary["classical"]]),
            "slopeLiteral": _slope(lams, [r["maxLiteral"] for r in summary["classical"]]),
            "slopeSwapped": _slope(lams, [r["maxSwapped"] for r in summary["classical"]]),
        },
        "improved": {
            "scaleMax": summary["improved"],
            "maxOverMinSwapped": _max_over_min([r["maxSwapped"] for r in summary["improved"]]),
            "slopeLiteral": _slope(lams, [r["maxLiteral"] for r in summary["improved"]]),
            "slopeSwapped": _slope(lams, [r["maxSwapped"] for r in summary["improved"]]),
        },
        "defect": {
            "slopeDefectNorm": _slope(lams, [r["defectNorm"] for r in summary["defect"]]),
            "slopeProductNorm": _slope(lams, [r["productNorm"] for r in summary["defect"]]),
            "slopeClassicalErrorNorm": _slope(lams, [r["classicalErrorNorm"] for r in summary["defect"]]),
            "slopeDefectRatio": _slope(lams, [r["defectRatio"] for r in summary["defect"]]),
            "slopeClassicalRatio": _slope(lams, [r["classicalRatio"] for r in summary["defect"]]),
            "maxPathDeviation": max(r["pathDeviation"] for r in summary["defect"]),
        },
    }
    return _report(cfg, results, rows, {"seconds": time.perf_counter() - start})


# --------------------------------------------------------------------------
# bench


def gaussian_kernel(width: float, cutoff: float = 8.0) -> DiagonalKernel:
    """``m(u) = exp(-u^2 / (2 width^2))`` on ``|u| <= cutoff * width``, zero beyond."""
    radius = cutoff * width

    def m(u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= radius, np.exp(-0.5 * (u / width) ** 2), 0.0)

    return DiagonalKernel(m, radius)


def _timed(fn, repeats):
    best, out = math.inf, None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def run_bench(cfg: ExperimentConfig) -> dict:
    """Timing and cross-strategy accuracy for a Gaussian diagonal kernel."""
    kernel = gaussian_kernel(cfg.kernel_width)
    rows, timing_rows = [], []
    for N in cfg.sizes:
        grid = GridSpec(N, cfg.scale_l)
        rng = trial_rng(cfg.seed, N)
        edge = (N // 4 - 1) / grid.L
        f = random_band_function(grid, -edge, edge, rng)
        g = random_band_function(grid, -edge, edge, rng)
        R = truncation_radius(diagonal_weights(kernel.m, grid))
        dense, t_dense = _timed(lambda: apply_bilinear(kernel, f, g, EvalStrategy.DENSE), cfg.repeats)
        diag, t_diag = _timed(lambda: apply_diagonal_convolution(kernel, f, g), cfg.repeats)
        idx = np.sort(rng.choice(np.arange(-(N // 4) + 1, N // 4), size=2 * cfg.sparse_nnz, replace=False))
        cf = SpectralCoefficients(grid, indices=idx[::2], values=rng.standard_normal(cfg.sparse_nnz))
        cg = SpectralCoefficients(grid, indices=idx[1::2], values=rng.standard_normal(cfg.sparse_nnz))
        fs, gs = synthesize(cf), synthesize(cg)
        sp_out, t_sparse = _timed(lambda: apply_bilinear(kernel, fs, gs, EvalStrategy.SPARSE), cfg.repeats)
        sd_out, t_sparse_dense = _timed(lambda: apply_bilinear(kernel, fs, gs, EvalStrategy.DENSE), cfg.repeats)
        rows.append({
            "N": N,
            "truncationRadius": R,
            "radiusWithinNOver64": bool(R <= N // 64),
            "maxDevDenseDiagonal": float(np.max(np.abs(dense.values - diag.values))),
            "maxDevSparseDense": float(np.max(np.abs(sp_out.values - sd_out.values))),
        })
        timing_rows.append({
            "N": N,
            "denseSeconds": t_dense,
            "diagonalSeconds": t_diag,
            "sparseInputSparseSeconds": t_sparse,
            "sparseInputDenseSeconds": t_sparse_dense,
            "speedupDiagonal": t_dense / t_diag,
            "speedupSparse": t_sparse_dense / t_sparse,
        })
    scaling = []
    for a, b in zip(timing_rows, timing_rows[1:]):
        if b["N"] == 2 * a["N"]:
            scaling.append({"from": a["N"], "to": b["N"], "denseRatio": b["denseSeconds"] / a["denseSeconds"]})
    results = {
        "kernelWidth": cfg.kernel_width,
        "maxDevDenseDiagonal": max(r["maxDevDenseDiagonal"] for r in rows),
        "maxDevSparseDense": max(r["maxDevSparseDense"] for r in rows),
    }
    return _report(cfg, results, rows, {"rows": timing_rows, "denseScaling": scaling})


RUNNERS = {
    "lp-check": run_lp_check,
    "counterexample": run_counterexample,
    "norm-probe": run_norm_ratio_probe,
    "paraproduct": run_paraproduct_study,
    "bench": run_bench,
}


def run(cfg: ExperimentConfig) -> dict:
    return RUNNERS[cfg.kind](cfg)
