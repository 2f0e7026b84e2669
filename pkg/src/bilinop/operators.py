"""Bilinear operators, Sobolev norms, paraproducts and the multiplication defect.

All operators act on coefficients: with ``f = sum c^f_a e^{i x a/L}`` and
``g = sum c^g_b e^{i x b/L}``,

    T_sigma(f, g)(x) = sum_{a,b} sigma(x, a/L, b/L) c^f_a c^g_b e^{i x (a+b)/L}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import AliasingRisk, GridMismatch, InvalidExponent, StrategyMismatch, TruncationTooAggressive
from .frames import LPFrame, ThetaProfile, build_theta, phi_hat, psi_hat
from .grid import (
    SUPPORT_RTOL,
    GridSpec,
    SampledFunction,
    SpectralCoefficients,
    _bincount_complex,
    _check_exponent,
    _check_product_range,
    _check_same_grid,
    analyze,
    lebesgue_norm,
    pairing,
    pointwise_product,
    sparse_convolve,
    synthesize,
)
from .symbols import DiagonalKernel, Multiplier, SeparableSymbol, Symbol

__all__ = [
    "ExponentTriple",
    "SobolevParams",
    "EvalStrategy",
    "apply_bilinear",
    "apply_bilinear_spectral",
    "apply_diagonal_convolution",
    "diagonal_weights",
    "truncation_radius",
    "sobolev_norm",
    "classical_paraproduct",
    "classical_symbol",
    "improved_symbol",
    "improved_paraproduct",
    "defect_symbol",
    "multiplication_defect",
    "pairing",
]


# --------------------------------------------------------------------------
# parameter types


@dataclass(frozen=True)
class ExponentTriple:
    """Hölder triple with ``1/p + 1/q = 1/t``."""

    p: float
    q: float
    t: float

    def __post_init__(self):
        for name in ("p", "q", "t"):
            v = float(getattr(self, name))
            if not (1 < v < math.inf):
                raise InvalidExponent(f"{name}={v} must lie in (1, inf)")
            object.__setattr__(self, name, v)
        if abs(1 / self.p + 1 / self.q - 1 / self.t) > 1e-12:
            raise InvalidExponent(f"1/{self.p} + 1/{self.q} != 1/{self.t}")

    @classmethod
    def from_pq(cls, p: float, q: float) -> "ExponentTriple":
        return cls(p, q, 1.0 / (1.0 / p + 1.0 / q))


@dataclass(frozen=True)
class SobolevParams:
    s: float
    p: float
    frame: LPFrame

    def __post_init__(self):
        if self.s < 0:
            raise InvalidExponent(f"smoothness s={self.s} must be >= 0")
        p = _check_exponent(self.p)
        if math.isinf(p):
            raise InvalidExponent("Sobolev integrability must be finite")


class EvalStrategy(enum.Enum):
    AUTO = "auto"
    DENSE = "dense"
    SPARSE = "sparse"
    DIAGONAL = "diagonal"
    QUADRATURE = "quadrature"


#: auto-selection uses the sparse path when nnz(f) * nnz(g) < SPARSE_FACTOR * N
SPARSE_FACTOR = 64


# --------------------------------------------------------------------------
# bilinear evaluation


def _support(c: SpectralCoefficients):
    return c.nonzero(SUPPORT_RTOL)


def _multiplier_sparse(func, grid, cf, cg):
    ia, va = _support(cf)
    ib, vb = _support(cg)
    if ia.size == 0 or ib.size == 0:
        return SpectralCoefficients.zeros(grid)
    xi = (ia / grid.L)[:, None]
    eta = (ib / grid.L)[None, :]
    weights = np.asarray(func(xi, eta), dtype=complex) * np.ones((ia.size, ib.size))
    prods = (weights * va[:, None] * vb[None, :]).ravel()
    sums = np.add.outer(ia, ib).ravel()
    nz = prods != 0
    sums, prods = sums[nz], prods[nz]
    if sums.size == 0:
        return SpectralCoefficients.zeros(grid)
    uniq, inv = np.unique(sums, return_inverse=True)
    _check_product_range(grid, int(uniq[0]), int(uniq[-1]))
    return SpectralCoefficients(grid, indices=uniq, values=_bincount_complex(inv, prods, uniq.size))


def _multiplier_dense(func, grid, cf, cg, block_elems: int = 1 << 21):
    """Blocked O(n_f * n_g) accumulation over the support windows.

    Each block of rows is written into a skewed buffer so that entry
    ``(r, c)`` lands in column ``r + c``; summing the rows then yields every
    output coefficient in a fixed order.
    """
    bf, bg = cf.support_bounds(), cg.support_bounds()
    if bf is None or bg is None:
        return SpectralCoefficients.zeros(grid)
    _check_product_range(grid, bf[0] + bg[0], bf[1] + bg[1])
    fa, ga = cf.to_array(), cg.to_array()
    rows = np.arange(bf[0], bf[1] + 1)
    cols = np.arange(bg[0], bg[1] + 1)
    vf, vg = fa[rows % grid.N], ga[cols % grid.N]
    nc = cols.size
    eta = cols / grid.L
    out = np.zeros(rows.size + nc - 1, dtype=complex)
    B = max(1, min(rows.size, block_elems // nc))
    for r0 in range(0, rows.size, B):
        r1 = min(rows.size, r0 + B)
        nb = r1 - r0
        xi = rows[r0:r1] / grid.L
        block = np.asarray(func(xi[:, None], eta[None, :]), dtype=complex) * np.ones((nb, nc))
        block *= vf[r0:r1, None] * vg[None, :]
        buf = np.zeros(nb * (nc + nb + 1), dtype=complex)
        buf.reshape(nb, nc + nb + 1)[:, :nc] = block
        skew = buf[: nb * (nc + nb)].reshape(nb, nc + nb)
        out[r0 : r0 + nc + nb - 1] += skew.sum(axis=0)[: nc + nb - 1]
    idx = np.arange(out.size) + bf[0] + bg[0]
    dense = np.zeros(grid.N, dtype=complex)
    dense[idx % grid.N] = out
    return SpectralCoefficients(grid, dense=dense)


def _multiplier_path(func, grid, cf, cg, strategy):
    if strategy is EvalStrategy.AUTO:
        nf, ng = _support(cf)[0].size, _support(cg)[0].size
        strategy = EvalStrategy.SPARSE if nf * ng < SPARSE_FACTOR * grid.N else EvalStrategy.DENSE
    if strategy is EvalStrategy.SPARSE:
        return _multiplier_sparse(func, grid, cf, cg)
    return _multiplier_dense(func, grid, cf, cg)


def _combine_xfactor(a: SpectralCoefficients | None, c: SpectralCoefficients) -> SpectralCoefficients:
    if a is None:
        return c
    idx, val = sparse_convolve(*_support(a), *_support(c))
    if idx.size:
        _check_product_range(c.grid, int(idx[0]), int(idx[-1]))
    return SpectralCoefficients(c.grid, indices=idx, values=val)


def _quadrature(sigma: Symbol, grid: GridSpec, cf, cg, max_elems: int = 1 << 22):
    ia, va = _support(cf)
    ib, vb = _support(cg)
    x = grid.x
    out = np.zeros(grid.N, dtype=complex)
    if ia.size == 0 or ib.size == 0:
        return analyze(SampledFunction(grid, out))
    _check_product_range(grid, int(ia[0] + ib[0]), int(ia[-1] + ib[-1]))
    xi = (ia / grid.L)[None, :, None]
    eta = (ib / grid.L)[None, None, :]
    chunk = max(1, max_elems // (ia.size * ib.size))
    for n0 in range(0, grid.N, chunk):
        xs = x[n0 : n0 + chunk]
        sig = sigma.evaluate(xs[:, None, None], xi, eta)
        pf = np.exp(1j * np.multiply.outer(xs, ia / grid.L)) * va
        pg = np.exp(1j * np.multiply.outer(xs, ib / grid.L)) * vb
        out[n0 : n0 + chunk] = np.einsum("xab,xa,xb->x", sig, pf, pg)
    return analyze(SampledFunction(grid, out))


def apply_bilinear_spectral(
    sigma: Symbol,
    cf: SpectralCoefficients,
    cg: SpectralCoefficients,
    strategy: EvalStrategy | str = EvalStrategy.AUTO,
) -> SpectralCoefficients:
    """Coefficients of ``T_sigma(f, g)`` from the coefficients of ``f`` and ``g``.

    Sparse inputs and the sparse strategy never allocate grid-sized arrays, so
    this works on grids far too large to sample.  ``x``-dependent symbols must
    be separable (or use ``QUADRATURE``); their ``x``-factors are applied by
    sparse spectral convolution.
    """
    strategy = EvalStrategy(strategy)
    grid = _check_same_grid(cf, cg)
    if strategy is EvalStrategy.DIAGONAL:
        if not isinstance(sigma, DiagonalKernel):
            raise StrategyMismatch("the diagonal convolution path needs a DiagonalKernel symbol")
        out = apply_diagonal_convolution(sigma, synthesize(cf), synthesize(cg))
        return analyze(out)
    if strategy is EvalStrategy.QUADRATURE:
        return _quadrature(sigma, grid, cf, cg)
    if isinstance(sigma, Multiplier):
        return _multiplier_path(sigma.multiplier, grid, cf, cg, strategy)
    if isinstance(sigma, SeparableSymbol):
        total = None
        for term in sigma.terms:
            part = _combine_xfactor(term.xfactor, _multiplier_path(term.multiplier, grid, cf, cg, strategy))
            total = part if total is None else total + part
        if total is None:
            return SpectralCoefficients.zeros(grid)
        return total if total.mode == "dense" else total.to_sparse()
    raise StrategyMismatch(
        f"{type(sigma).__name__} symbols have no fast path; use EvalStrategy.QUADRATURE"
    )


def apply_bilinear(
    sigma: Symbol,
    f: SampledFunction,
    g: SampledFunction,
    strategy: EvalStrategy | str = EvalStrategy.AUTO,
) -> SampledFunction:
    """Evaluate ``T_sigma(f, g)`` on the grid of ``f`` and ``g``.

    Raises
    ------
    GridMismatch
        If ``f`` and ``g`` live on different grids.
    StrategyMismatch
        If the requested strategy cannot handle the symbol.
    AliasingRisk
        If an output frequency with a nonzero contribution leaves the lattice.
    """
    _check_same_grid(f, g)
    strategy = EvalStrategy(strategy)
    if strategy is EvalStrategy.DIAGONAL:
        if not isinstance(sigma, DiagonalKernel):
            raise StrategyMismatch("the diagonal convolution path needs a DiagonalKernel symbol")
        return apply_diagonal_convolution(sigma, f, g)
    return synthesize(apply_bilinear_spectral(sigma, analyze(f), analyze(g), strategy))


# --------------------------------------------------------------------------
# diagonal convolution


def diagonal_weights(m, grid: GridSpec) -> np.ndarray:
    """Quadrature weights ``w_r`` with ``m(d/L) = sum_r w_r exp(-2 pi i d r / N)``.

    ``w_r = h * mhat(r h)`` samples the spatial kernel; index ``r`` is in FFT
    order (negative shifts at the end).
    """
    return np.fft.ifft(np.asarray(m(grid.frequencies), dtype=complex) * np.ones(grid.N))


def truncation_radius(weights: np.ndarray, tol: float = 1e-10) -> int:
    """Smallest ``R`` whose excluded tail ``sum_{|r|>R} |w_r|`` is below ``tol`` of the total."""
    n = weights.size
    mag = np.abs(weights)
    total = mag.sum()
    if total == 0:
        return 0
    r = np.abs(np.fft.fftfreq(n, 1.0 / n)).astype(int)
    by_r = np.bincount(r, weights=mag)
    tail = total - np.cumsum(by_r)
    ok = np.nonzero(tail < tol * total)[0]
    return int(ok[0])


def apply_diagonal_convolution(
    kernel, f: SampledFunction, g: SampledFunction, *, radius: int | None = None, tol: float = 1e-10
) -> SampledFunction:
    """``T(f, g)(x) = sum_{|r| <= R} w_r f(x - r h) g(x + r h)``.

    The quadrature form of ``int mhat(y) f(x - y) g(x + y) dy`` for the
    multiplier ``sigma(xi, eta) = m(xi - eta)``.  ``kernel`` is a
    :class:`DiagonalKernel` or the callable ``m``.  ``radius`` defaults to the
    smallest one meeting ``tol``; a smaller explicit radius raises
    :class:`TruncationTooAggressive`.
    """
    grid = _check_same_grid(f, g)
    m = kernel.m if isinstance(kernel, DiagonalKernel) else kernel
    cf, cg = analyze(f), analyze(g)
    bf, bg = cf.support_bounds(), cg.support_bounds()
    if bf is None or bg is None:
        return SampledFunction(grid, np.zeros(grid.N))
    _check_product_range(grid, bf[0] + bg[0], bf[1] + bg[1])
    lo, hi = bf[0] - bg[1], bf[1] - bg[0]
    if lo < -grid.N // 2 or hi >= grid.N // 2:
        raise AliasingRisk(f"frequency differences [{lo}, {hi}] wrap around the lattice (N={grid.N})")
    w = diagonal_weights(m, grid)
    needed = truncation_radius(w, tol)
    if radius is None:
        radius = needed
    elif radius < needed:
        mag = np.abs(w)
        r = np.abs(np.fft.fftfreq(grid.N, 1.0 / grid.N))
        tail = mag[r > radius].sum() / mag.sum()
        raise TruncationTooAggressive(
            f"radius {radius} drops {tail:.3e} of the kernel mass (tolerance {tol:g}; need R >= {needed})"
        )
    fv, gv = f.values, g.values
    out = w[0] * fv * gv
    half = grid.N // 2
    for r in range(1, min(radius, half - 1) + 1):
        out = out + w[r] * np.roll(fv, r) * np.roll(gv, -r)
        out = out + w[-r] * np.roll(fv, -r) * np.roll(gv, r)
    if radius >= half:
        # the shifts +N/2 and -N/2 coincide and carry a single weight
        out = out + w[half] * np.roll(fv, half) * np.roll(gv, half)
    return SampledFunction(grid, out)


# --------------------------------------------------------------------------
# Sobolev norm


def sobolev_norm(f: SampledFunction, params: SobolevParams) -> float:
    """``||Phi * f||_p + ||(sum_k 2^(2ks) |Psi_k * f|^2)^(1/2)||_p`` over ``k = 0..k_max``."""
    frame = params.frame
    if f.grid != frame.grid:
        raise GridMismatch("function and frame live on different grids")
    c = analyze(f).to_array()
    grid = frame.grid
    low = SampledFunction(grid, np.fft.ifft(c * frame.lowpass(0)) * grid.N)
    square = np.zeros(grid.N)
    for k in frame.levels:
        band = np.fft.ifft(c * frame.band(k)) * grid.N
        square += 2.0 ** (2 * k * params.s) * np.abs(band) ** 2
    sq = SampledFunction(grid, np.sqrt(square))
    return lebesgue_norm(low, params.p) + lebesgue_norm(sq, params.p)


# --------------------------------------------------------------------------
# paraproducts


def classical_symbol(frame: LPFrame) -> Multiplier:
    """``sum_k Psi^(2^-k xi) Phi^(2^-(k-2) eta)`` over the frame's homogeneous levels."""
    levels = list(frame.homogeneous_levels)
    prof = frame.profile

    def func(xi, eta):
        total = 0.0
        for k in levels:
            total = total + psi_hat(prof, xi * 2.0**-k) * phi_hat(prof, eta * 2.0 ** -(k - 2))
        return total

    return Multiplier(func)


def classical_paraproduct(b: SampledFunction, f: SampledFunction, frame: LPFrame, *, return_info: bool = False):
    """``Pi_b(f) = sum_k S_{k-2}(f) Delta_k(b)`` over the frame's homogeneous levels.

    ``S_j`` has symbol ``Phi^(2^-j .)`` (spectrum ``|eta| <= 2^j``) and
    ``Delta_k`` has symbol ``Psi^(2^-k .)`` (spectrum ``2^(k-1) <= |xi| <= 2^(k+1)``),
    so every interaction satisfies ``|eta| <= |xi| / 2``.  With
    ``return_info`` the spectral energy of ``b`` outside the covered shells is
    also returned.
    """
    grid = _check_same_grid(b, f)
    if grid != frame.grid:
        raise GridMismatch("inputs and frame live on different grids")
    cb, cf = analyze(b).to_array(), analyze(f).to_array()
    out = np.zeros(grid.N, dtype=complex)
    covered = frame.lowpass(frame.k_min)
    for k in frame.homogeneous_levels:
        band = frame.band(k)
        covered = covered + band
        db = cb * band
        sf = cf * frame.lowpass(k - 2)
        if not (np.any(db) and np.any(sf)):
            continue
        tb = SpectralCoefficients(grid, dense=db)
        tf = SpectralCoefficients(grid, dense=sf)
        bb, bf_ = tb.support_bounds(), tf.support_bounds()
        if bb is None or bf_ is None:
            continue
        _check_product_range(grid, bb[0] + bf_[0], bb[1] + bf_[1])
        out += (np.fft.ifft(db) * grid.N) * (np.fft.ifft(sf) * grid.N)
    result = SampledFunction(grid, out)
    if return_info:
        missing = float(np.sum(np.abs(cb * (1 - covered)) ** 2))
        return result, {"uncoveredMass": missing}
    return result


def improved_symbol(theta: ThetaProfile | None = None) -> Multiplier:
    """``Theta^(xi - eta) Theta^(xi + eta) + Theta^(eta - xi) Theta^(-xi - eta)``."""
    th = theta or build_theta()

    def func(xi, eta):
        return th(xi - eta) * th(xi + eta) + th(eta - xi) * th(-xi - eta)

    return Multiplier(func)


def improved_paraproduct(
    b: SampledFunction,
    f: SampledFunction,
    theta: ThetaProfile | None = None,
    strategy: EvalStrategy | str = EvalStrategy.AUTO,
) -> SampledFunction:
    """Improved paraproduct ``T_sigma(b, f)``; ``xi`` is the frequency of ``b``."""
    return apply_bilinear(improved_symbol(theta), b, f, strategy)


def defect_symbol(theta: ThetaProfile | None = None) -> Multiplier:
    """``1 - sigma(xi, eta) - sigma(eta, xi)`` for the improved paraproduct symbol.

    Vanishes outside ``{|xi - eta| < 2} | {|xi + eta| < 2}``.
    """
    sym = improved_symbol(theta).func

    def func(xi, eta):
        return 1.0 - sym(xi, eta) - sym(eta, xi)

    return Multiplier(func)


def multiplication_defect(
    f: SampledFunction,
    g: SampledFunction,
    theta: ThetaProfile | None = None,
    *,
    method: str = "symbol",
    strategy: EvalStrategy | str = EvalStrategy.AUTO,
) -> SampledFunction:
    """``D(f, g) = fg - Pi~_f(g) - Pi~_g(f)``.

    ``method="symbol"`` applies the defect multiplier directly;
    ``method="paraproduct"`` forms the difference of the three terms.
    """
    if method == "symbol":
        return apply_bilinear(defect_symbol(theta), f, g, strategy)
    if method == "paraproduct":
        fg = pointwise_product(f, g)
        return fg - improved_paraproduct(f, g, theta, strategy) - improved_paraproduct(g, f, theta, strategy)
    raise ValueError("method must be 'symbol' or 'paraproduct'")
