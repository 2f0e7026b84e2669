"""Littlewood-Paley filter bank and the half-line profile used by paraproducts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import comb

from .exceptions import GridMismatch, GridTooSmall
from .grid import GridSpec, SampledFunction, SpectralCoefficients, analyze, synthesize


@dataclass(frozen=True)
class BumpProfile:
    """Smooth monotone transition ``rho: [0, 1] -> [0, 1]``.

    ``rho`` is the regularized incomplete beta function ``I_t(r, r)``: a
    polynomial whose first ``r - 1`` derivatives vanish at both ends and which
    satisfies ``rho(t) + rho(1 - t) = 1``.  ``order=4`` gives
    ``t^4 (35 - 84 t + 70 t^2 - 20 t^3)``.  Arguments are clipped to ``[0, 1]``.
    """

    order: int = 4
    _coeffs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = int(self.order)
        if r < 1:
            raise ValueError("profile order must be >= 1")
        object.__setattr__(self, "order", r)
        # I_t(r, r) = sum_{k=r}^{2r-1} C(2r-1, k) t^k (1-t)^(2r-1-k), expanded in powers of t
        poly = Polynomial([0.0])
        for k in range(r, 2 * r):
            poly = poly + comb(2 * r - 1, k, exact=True) * Polynomial([0, 1]) ** k * Polynomial([1, -1]) ** (2 * r - 1 - k)
        object.__setattr__(self, "_coeffs", poly.coef[::-1].copy())

    def _raw(self, t):
        return np.polyval(self._coeffs, t)

    def __call__(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        shape = t.shape
        out = np.atleast_1d((t >= 1.0).astype(float))
        t = np.atleast_1d(t)
        inner = (t > 0.0) & (t < 1.0)
        ti = t[inner]
        # evaluate the upper half through the reflection so complementarity is exact
        lower = ti <= 0.5
        vals = np.empty_like(ti)
        vals[lower] = self._raw(ti[lower])
        vals[~lower] = 1.0 - self._raw(1.0 - ti[~lower])
        out[inner] = vals
        return out.reshape(shape) if shape else float(out[0])


def phi_hat(profile: BumpProfile, xi):
    """Low-pass ``Phi^``: 1 on ``|xi| <= 1/2``, 0 on ``|xi| >= 1``."""
    return 1.0 - profile(2.0 * np.abs(np.asarray(xi, dtype=float)) - 1.0)


def psi_hat(profile: BumpProfile, xi):
    """Band-pass ``Psi^(xi) = Phi^(xi/2) - Phi^(xi)``, supported in ``1/2 <= |xi| <= 2``."""
    xi = np.asarray(xi, dtype=float)
    return phi_hat(profile, xi / 2.0) - phi_hat(profile, xi)


@dataclass(frozen=True)
class LPFrame:
    """Dyadic filter bank on the lattice of ``grid``.

    Inhomogeneous levels are ``0 .. k_max``; homogeneous levels extend down to
    ``k_min``, the coarsest level whose band still meets the lowest nonzero
    lattice frequency.  ``Phi^(2^-k_min xi)`` then only keeps the mean.
    """

    grid: GridSpec
    profile: BumpProfile
    k_max: int
    k_min: int

    @property
    def phi_hat_lattice(self) -> np.ndarray:
        return self.lowpass(0)

    def phi(self, xi):
        return phi_hat(self.profile, xi)

    def psi(self, xi):
        return psi_hat(self.profile, xi)

    def lowpass(self, k: int) -> np.ndarray:
        """``Phi^(2^-k xi)`` on the lattice (FFT order)."""
        return phi_hat(self.profile, self.grid.frequencies * 2.0**-k)

    def band(self, k: int) -> np.ndarray:
        """``Psi^(2^-k xi)`` on the lattice (FFT order)."""
        return psi_hat(self.profile, self.grid.frequencies * 2.0**-k)

    def filter_coefficients(self, k: int | None = None) -> SpectralCoefficients:
        """Lattice values of ``Psi^(2^-k .)`` (``Phi^`` for ``k=None``), e.g. for ``write_spectral``."""
        vals = self.lowpass(0) if k is None else self.band(k)
        return SpectralCoefficients(self.grid, dense=vals.astype(complex))

    @property
    def levels(self) -> range:
        return range(0, self.k_max + 1)

    @property
    def homogeneous_levels(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def partition_sum(self, xi=None, homogeneous: bool = False):
        """``Phi^ + sum_k Psi^(2^-k .)`` at ``xi`` (default: the lattice)."""
        xi = self.grid.frequencies if xi is None else np.asarray(xi, dtype=float)
        low = self.k_min if homogeneous else 0
        total = phi_hat(self.profile, xi * 2.0**-low)
        for k in range(low, self.k_max + 1):
            total = total + psi_hat(self.profile, xi * 2.0**-k)
        return total

    def partition_error(self, homogeneous: bool = False) -> float:
        """Max deviation from 1 over lattice points with ``|xi| <= 2^k_max``."""
        xi = self.grid.frequencies
        mask = np.abs(xi) <= 2.0**self.k_max
        return float(np.max(np.abs(self.partition_sum(xi[mask], homogeneous) - 1.0)))

    def support_violations(self, samples: int = 20001) -> int:
        """Count sample points where ``Phi^`` or ``Psi^`` leak outside their supports."""
        xi = np.linspace(-4.0, 4.0, samples)
        bad = np.count_nonzero((np.abs(xi) > 1) & (self.phi(xi) != 0))
        outside = (np.abs(xi) < 0.5) | (np.abs(xi) > 2)
        bad += np.count_nonzero(outside & (self.psi(xi) != 0))
        return int(bad)


def build_lp_frame(grid: GridSpec, profile: BumpProfile | None = None) -> LPFrame:
    profile = profile or BumpProfile()
    k_max = int(math.floor(math.log2(grid.nyquist))) - 1
    if k_max < 2:
        raise GridTooSmall(
            f"grid N={grid.N}, L={grid.L:g} resolves only k_max={k_max} dyadic levels (need >= 2)"
        )
    k_min = int(math.ceil(math.log2(1.0 / grid.L))) - 1
    return LPFrame(grid=grid, profile=profile, k_max=k_max, k_min=min(k_min, 0))


def _filter_on_lattice(grid: GridSpec, filter_hat) -> np.ndarray:
    if callable(filter_hat):
        return np.asarray(filter_hat(grid.frequencies), dtype=complex)
    arr = np.asarray(filter_hat)
    if arr.shape != (grid.N,):
        raise GridMismatch(f"filter has shape {arr.shape}, grid has N={grid.N}")
    return arr


def band_project(f, filter_hat):
    """Multiply the spectrum of ``f`` by ``filter_hat``.

    ``filter_hat`` is either a lattice array in FFT order or a callable of the
    physical frequency.  ``f`` may be sampled or spectral (sparse inputs need a
    callable filter and stay sparse).
    """
    if isinstance(f, SpectralCoefficients):
        if f.mode == "sparse":
            if not callable(filter_hat):
                raise TypeError("sparse coefficients need a callable filter")
            idx, val = f.nonzero()
            weights = np.asarray(filter_hat(idx / f.grid.L), dtype=complex)
            return SpectralCoefficients(f.grid, indices=idx, values=val * weights)
        return SpectralCoefficients(f.grid, dense=f.to_array() * _filter_on_lattice(f.grid, filter_hat))
    c = analyze(f).to_array() * _filter_on_lattice(f.grid, filter_hat)
    return synthesize(SpectralCoefficients(f.grid, dense=c))


@dataclass(frozen=True)
class ThetaProfile:
    """``Theta^``: 0 for ``omega <= 1``, 1 for ``omega >= 2``, smooth in between."""

    profile: BumpProfile = field(default_factory=BumpProfile)

    def __call__(self, omega):
        return self.profile(np.asarray(omega, dtype=float) - 1.0)


def build_theta(profile: BumpProfile | None = None) -> ThetaProfile:
    return ThetaProfile(profile or BumpProfile())
