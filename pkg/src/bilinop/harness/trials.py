"""Random band-limited trial functions and grid sizing helpers."""

from __future__ import annotations

import math

import numpy as np

from ..exceptions import NyquistViolation
from ..frames import BumpProfile, build_lp_frame
from ..grid import GridSpec, SampledFunction, SpectralCoefficients, synthesize


def trial_rng(seed: int, *stream) -> np.random.Generator:
    """Independent stream per ``(seed, *stream)``; parallel trials never share state."""
    return np.random.default_rng([int(seed), *(int(s) for s in stream)])


def random_band(grid: GridSpec, lo: float, hi: float, rng: np.random.Generator) -> SpectralCoefficients:
    """Complex Gaussian coefficients on the lattice frequencies in ``[lo, hi]``."""
    grid.require_below_nyquist(max(abs(lo), abs(hi)), "trial band edge")
    m = np.arange(int(math.ceil(lo * grid.L - 1e-9)), int(math.floor(hi * grid.L + 1e-9)) + 1)
    if m.size == 0:
        raise NyquistViolation(f"band [{lo:g}, {hi:g}] holds no lattice frequency for L={grid.L:g}")
    vals = (rng.standard_normal(m.size) + 1j * rng.standard_normal(m.size)) / math.sqrt(2 * m.size)
    return SpectralCoefficients(grid, indices=m, values=vals)


def random_band_function(grid, lo, hi, rng) -> SampledFunction:
    return synthesize(random_band(grid, lo, hi, rng))


def normalized(f: SampledFunction, norm: float) -> SampledFunction:
    return f * (1.0 / norm) if norm > 0 else f


def grid_for_coverage(freq: float, scale_l: float, minimum: int = 1024) -> GridSpec:
    """Smallest grid whose frame resolves dyadic levels up to ``freq`` (``2^k_max >= freq``)."""
    n = minimum
    while True:
        grid = GridSpec(n, scale_l)
        k_max = int(math.floor(math.log2(grid.nyquist))) - 1
        if k_max >= 2 and 2.0**k_max >= freq:
            return grid
        n *= 2


def grid_for_frequency(freq: float, scale_l: float, minimum: int = 8) -> GridSpec:
    """Smallest grid whose Nyquist frequency strictly exceeds ``freq``."""
    n = minimum
    while GridSpec(n, scale_l).nyquist <= freq:
        n *= 2
    return GridSpec(n, scale_l)


def frame_for(grid: GridSpec, order: int):
    return build_lp_frame(grid, BumpProfile(order))
