"""Scikit-learn style transformers over rows of sampled periodic signals.

Each row of ``X`` is one signal sampled on the grid ``x_n = n 2 pi L / N``.
Pair-valued transformers take ``X = [f | g]`` with ``2N`` columns.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_grid_size, check_signals, split_pairs
from .frames import BumpProfile, build_lp_frame, build_theta
from .grid import GridSpec, SampledFunction, lebesgue_norm
from .operators import (
    EvalStrategy,
    apply_bilinear,
    classical_paraproduct,
    improved_paraproduct,
    multiplication_defect,
)
from .symbols import Multiplier, Symbol


class LittlewoodPaleyTransform(TransformerMixin, BaseEstimator):
    """Band energies ``[||Phi * f||_p, 2^(ks) ||Psi_k * f||_p for k = 0..k_max]``.

    Parameters
    ----------
    scale_l : float
        Grid scale; the period is ``2 pi scale_l``.
    order : int
        Order of the bump profile.
    p : float
        Lebesgue exponent of the band norms.
    s : float
        Smoothness weight ``2^(ks)``.
    """

    def __init__(self, scale_l=12.0, order=4, p=2.0, s=0.0):
        self.scale_l = scale_l
        self.order = order
        self.p = p
        self.s = s

    def fit(self, X, y=None):
        X = check_signals(X)
        n = check_grid_size(X.shape[1])
        self.grid_ = GridSpec(n, self.scale_l)
        self.frame_ = build_lp_frame(self.grid_, BumpProfile(self.order))
        self.n_features_in_ = n
        self.n_bands_ = self.frame_.k_max + 2
        return self

    def transform(self, X):
        check_is_fitted(self, "frame_")
        X = check_signals(X, n_features=self.n_features_in_)
        frame, grid = self.frame_, self.grid_
        filters = [frame.lowpass(0)] + [frame.band(k) for k in frame.levels]
        weights = [1.0] + [2.0 ** (k * self.s) for k in frame.levels]
        spectra = np.fft.fft(X, axis=1) / grid.N
        out = np.empty((X.shape[0], len(filters)))
        for b, (filt, w) in enumerate(zip(filters, weights)):
            vals = np.fft.ifft(spectra * filt, axis=1) * grid.N
            for i in range(X.shape[0]):
                out[i, b] = w * lebesgue_norm(SampledFunction(grid, vals[i]), self.p)
        return out


class _PairTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        X = check_signals(X)
        f, _ = split_pairs(X)
        n = check_grid_size(f.shape[1])
        self.grid_ = GridSpec(n, self.scale_l)
        self.n_features_in_ = 2 * n
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_signals(X, n_features=self.n_features_in_)
        F, G = split_pairs(X)
        rows = [self._apply(SampledFunction(self.grid_, f), SampledFunction(self.grid_, g)).values
                for f, g in zip(F, G)]
        return np.vstack(rows)


class BilinearTransformer(_PairTransformer):
    """Rows ``T_sigma(f, g)`` for ``X = [f | g]``.

    ``symbol`` is a :class:`~bilinop.symbols.Symbol` or a callable
    ``(xi, eta) -> multiplier``; ``None`` means the product symbol 1.
    """

    def __init__(self, symbol=None, scale_l=12.0, strategy="auto"):
        self.symbol = symbol
        self.scale_l = scale_l
        self.strategy = strategy

    def _resolved_symbol(self) -> Symbol:
        if self.symbol is None:
            return Multiplier(lambda xi, eta: np.ones(np.broadcast(xi, eta).shape))
        if isinstance(self.symbol, Symbol):
            return self.symbol
        return Multiplier(self.symbol)

    def fit(self, X, y=None):
        super().fit(X, y)
        self.symbol_ = self._resolved_symbol()
        self.strategy_ = EvalStrategy(self.strategy)
        return self

    def _apply(self, f, g):
        return apply_bilinear(self.symbol_, f, g, self.strategy_)


class ParaproductTransformer(_PairTransformer):
    """Rows of ``Pi~_f(g)`` (``kind="improved"``), ``Pi_f(g)`` (``"classical"``) or ``D(f, g)`` (``"defect"``)."""

    def __init__(self, kind="improved", scale_l=12.0, order=4):
        self.kind = kind
        self.scale_l = scale_l
        self.order = order

    def fit(self, X, y=None):
        if self.kind not in ("improved", "classical", "defect"):
            raise ValueError(f"unknown paraproduct kind {self.kind!r}")
        super().fit(X, y)
        profile = BumpProfile(self.order)
        self.theta_ = build_theta(profile)
        self.frame_ = build_lp_frame(self.grid_, profile) if self.kind == "classical" else None
        return self

    def _apply(self, f, g):
        if self.kind == "improved":
            return improved_paraproduct(f, g, self.theta_)
        if self.kind == "classical":
            return classical_paraproduct(f, g, self.frame_)
        return multiplication_defect(f, g, self.theta_)
