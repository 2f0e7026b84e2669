"""Periodic sampled functions and their Fourier coefficients.

A grid with ``N`` samples and scale ``L`` covers the period ``[0, 2*pi*L)`` and
carries the frequency lattice ``{m / L : -N/2 <= m < N/2}``.  Coefficients are
normalized so that

    f(x_n) = sum_m c_m exp(i x_n m / L),    x_n = n * 2*pi*L / N,

which makes the bilinear operator with symbol 1 coincide with the pointwise
product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .exceptions import (
    AliasingRisk,
    GridMismatch,
    IndexOutOfRange,
    InvalidExponent,
    PreconditionError,
)

#: relative magnitude under which a coefficient is treated as outside the support
SUPPORT_RTOL = 1e-14


@dataclass(frozen=True)
class GridSpec:
    N: int
    L: float = 12.0

    def __post_init__(self):
        n = int(self.N)
        if n != self.N or n < 8 or n & (n - 1):
            raise PreconditionError(f"N must be a power of two >= 8, got {self.N!r}")
        if not self.L > 0:
            raise PreconditionError(f"L must be positive, got {self.L!r}")
        object.__setattr__(self, "N", n)
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2 * math.pi * self.L / self.N

    @property
    def period(self) -> float:
        return 2 * math.pi * self.L

    @property
    def nyquist(self) -> float:
        return self.N / (2 * self.L)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    @property
    def indices(self) -> np.ndarray:
        """Signed lattice indices in FFT storage order."""
        return np.fft.fftfreq(self.N, 1.0 / self.N).astype(np.int64)

    @property
    def frequencies(self) -> np.ndarray:
        return self.indices / self.L

    def index_of(self, xi: float) -> int:
        """Lattice index of an on-lattice frequency."""
        m = round(xi * self.L)
        if abs(m - xi * self.L) > 1e-9 * max(1.0, abs(xi * self.L)):
            raise ValueError(f"frequency {xi} is not on the lattice 1/{self.L}")
        self.check_index(m)
        return int(m)

    def check_index(self, m) -> None:
        m = np.asarray(m)
        if m.size and (m.min() < -self.N // 2 or m.max() >= self.N // 2):
            raise IndexOutOfRange(
                f"lattice index outside [-{self.N // 2}, {self.N // 2}) for N={self.N}"
            )

    def require_below_nyquist(self, freq: float, what: str = "frequency") -> None:
        if not abs(freq) < self.nyquist:
            from .exceptions import NyquistViolation

            raise NyquistViolation(
                f"{what} {freq:g} is not below the Nyquist frequency {self.nyquist:g}"
                f" (N={self.N}, L={self.L:g})"
            )

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.N * factor, self.L)


def _check_same_grid(*objs) -> GridSpec:
    grid = objs[0].grid
    for o in objs[1:]:
        if o.grid != grid:
            raise GridMismatch(f"grids differ: {grid} vs {o.grid}")
    return grid


class SampledFunction:
    """Complex samples of a periodic function on a :class:`GridSpec`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values):
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.N,):
            raise ValueError(f"expected {grid.N} samples, got shape {values.shape}")
        self.grid = grid
        self.values = values

    @classmethod
    def from_callable(cls, grid: GridSpec, func) -> "SampledFunction":
        return cls(grid, func(grid.x))

    @classmethod
    def constant(cls, grid: GridSpec, value: complex = 1.0) -> "SampledFunction":
        return cls(grid, np.full(grid.N, value, dtype=complex))

    @classmethod
    def harmonic(cls, grid: GridSpec, m: int, amplitude: complex = 1.0) -> "SampledFunction":
        grid.check_index(m)
        return cls(grid, amplitude * np.exp(1j * grid.x * m / grid.L))

    def __add__(self, other):
        _check_same_grid(self, other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SampledFunction(self.grid, self.values - other.values)

    def __neg__(self):
        return SampledFunction(self.grid, -self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, SampledFunction):
            return NotImplemented
        return SampledFunction(self.grid, scalar * self.values)

    __rmul__ = __mul__

    def conj(self) -> "SampledFunction":
        return SampledFunction(self.grid, self.values.conj())

    def __repr__(self):
        return f"SampledFunction(N={self.grid.N}, L={self.grid.L:g})"


class SpectralCoefficients:
    """Fourier coefficients on the lattice of a grid, dense or sparse.

    Dense storage keeps a length-``N`` array in FFT order.  Sparse storage keeps
    sorted signed indices and their values; it never allocates ``N`` entries, so
    it works on grids far too large to sample.
    """

    __slots__ = ("grid", "_dense", "_idx", "_val")

    def __init__(self, grid: GridSpec, *, dense=None, indices=None, values=None):
        self.grid = grid
        if dense is not None:
            dense = np.asarray(dense, dtype=complex)
            if dense.shape != (grid.N,):
                raise ValueError(f"dense coefficients need shape ({grid.N},)")
            self._dense, self._idx, self._val = dense, None, None
        else:
            idx = np.asarray(indices if indices is not None else [], dtype=np.int64)
            val = np.asarray(values if values is not None else [], dtype=complex)
            if idx.shape != val.shape or idx.ndim != 1:
                raise ValueError("indices and values must be 1-D arrays of equal length")
            grid.check_index(idx)
            order = np.argsort(idx, kind="stable")
            idx, val = idx[order], val[order]
            if idx.size > 1 and np.any(np.diff(idx) == 0):
                uniq, inv = np.unique(idx, return_inverse=True)
                val = _bincount_complex(inv, val, uniq.size)
                idx = uniq
            self._dense, self._idx, self._val = None, idx, val

    # construction -----------------------------------------------------------
    @classmethod
    def sparse(cls, grid: GridSpec, entries) -> "SpectralCoefficients":
        """Build from a mapping ``{m: c_m}`` or an iterable of ``(m, c_m)``."""
        if isinstance(entries, Mapping):
            entries = entries.items()
        entries = list(entries)
        idx = [int(m) for m, _ in entries]
        val = [complex(c) for _, c in entries]
        return cls(grid, indices=idx, values=val)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralCoefficients":
        return cls(grid, indices=[], values=[])

    # views ------------------------------------------------------------------
    @property
    def mode(self) -> str:
        return "dense" if self._dense is not None else "sparse"

    def to_array(self) -> np.ndarray:
        """Dense coefficients in FFT order (a copy)."""
        if self._dense is not None:
            return self._dense.copy()
        out = np.zeros(self.grid.N, dtype=complex)
        out[self._idx % self.grid.N] = self._val
        return out

    def nonzero(self, rtol: float = 0.0):
        """Signed indices (ascending) and values of coefficients above ``rtol*max``."""
        if self._dense is not None:
            idx = self.grid.indices
            val = self._dense
            order = np.argsort(idx, kind="stable")
            idx, val = idx[order], val[order]
        else:
            idx, val = self._idx, self._val
        mag = np.abs(val)
        if mag.size == 0:
            return idx[:0], val[:0]
        keep = mag > rtol * mag.max() if rtol > 0 else mag > 0
        return idx[keep], val[keep]

    def to_sparse(self, rtol: float = 0.0) -> "SpectralCoefficients":
        idx, val = self.nonzero(rtol)
        return SpectralCoefficients(self.grid, indices=idx, values=val)

    def to_dense(self) -> "SpectralCoefficients":
        return SpectralCoefficients(self.grid, dense=self.to_array())

    @property
    def entries(self) -> dict:
        idx, val = self.nonzero()
        return {int(m): complex(c) for m, c in zip(idx, val)}

    @property
    def nnz(self) -> int:
        return int(self.nonzero()[0].size)

    def __getitem__(self, m: int) -> complex:
        self.grid.check_index(m)
        if self._dense is not None:
            return complex(self._dense[m % self.grid.N])
        pos = np.searchsorted(self._idx, m)
        if pos < self._idx.size and self._idx[pos] == m:
            return complex(self._val[pos])
        return 0j

    def support_bounds(self, rtol: float = SUPPORT_RTOL):
        """``(min_index, max_index)`` of the support, or ``None`` when empty."""
        idx, _ = self.nonzero(rtol)
        if idx.size == 0:
            return None
        return int(idx.min()), int(idx.max())

    def evaluate_at(self, x) -> np.ndarray:
        """Evaluate the trigonometric polynomial at arbitrary points."""
        x = np.asarray(x, dtype=float)
        idx, val = self.nonzero()
        if idx.size == 0:
            return np.zeros(x.shape, dtype=complex)
        phase = np.exp(1j * np.multiply.outer(x, idx / self.grid.L))
        return phase @ val

    def l2_energy(self) -> float:
        """``sum |c_m|^2``."""
        _, val = self.nonzero()
        return float(np.sum(np.abs(val) ** 2))

    def scale(self, factor: complex) -> "SpectralCoefficients":
        if self._dense is not None:
            return SpectralCoefficients(self.grid, dense=factor * self._dense)
        return SpectralCoefficients(self.grid, indices=self._idx, values=factor * self._val)

    def shift(self, k: int) -> "SpectralCoefficients":
        """Coefficients of ``exp(i x k / L) f(x)``."""
        idx, val = self.nonzero()
        return SpectralCoefficients(self.grid, indices=idx + int(k), values=val)

    def __add__(self, other: "SpectralCoefficients") -> "SpectralCoefficients":
        _check_same_grid(self, other)
        if self.mode == "dense" or other.mode == "dense":
            return SpectralCoefficients(self.grid, dense=self.to_array() + other.to_array())
        return SpectralCoefficients(
            self.grid,
            indices=np.concatenate([self._idx, other._idx]),
            values=np.concatenate([self._val, other._val]),
        )

    def __repr__(self):
        return f"SpectralCoefficients(N={self.grid.N}, L={self.grid.L:g}, mode={self.mode}, nnz={self.nnz})"


def _bincount_complex(inv, val, size):
    return np.bincount(inv, weights=val.real, minlength=size) + 1j * np.bincount(
        inv, weights=val.imag, minlength=size
    )


# --------------------------------------------------------------------------
# analysis / synthesis


def analyze(f: SampledFunction) -> SpectralCoefficients:
    return SpectralCoefficients(f.grid, dense=np.fft.fft(f.values) / f.grid.N)


def synthesize(c: SpectralCoefficients) -> SampledFunction:
    grid = c.grid
    return SampledFunction(grid, np.fft.ifft(c.to_array()) * grid.N)


# --------------------------------------------------------------------------
# norms and products


def _check_exponent(p) -> float:
    p = float(p)
    if not (p > 1 or math.isinf(p)):
        raise InvalidExponent(f"exponent must satisfy p > 1 or p = inf, got {p}")
    return p


def lebesgue_norm(f, p) -> float:
    """Discrete ``L^p`` norm ``(h * sum |f(x_n)|^p)^(1/p)``; ``max |f|`` for ``p = inf``.

    A :class:`SpectralCoefficients` argument is accepted for even integer
    ``p``: then ``||f||_p^p = ||f^(p/2)||_2^2`` is computed exactly from the
    coefficients by Parseval, without sampling.
    """
    p = _check_exponent(p)
    if isinstance(f, SpectralCoefficients):
        return spectral_lebesgue_norm(f, p)
    vals = np.abs(f.values)
    if math.isinf(p):
        return float(vals.max())
    vmax = vals.max()
    if vmax == 0:
        return 0.0
    # scale out the maximum to keep |f|^p in range for large p
    return float(vmax * (f.grid.h * np.sum((vals / vmax) ** p)) ** (1.0 / p))


def spectral_lebesgue_norm(c: SpectralCoefficients, p: float) -> float:
    p = _check_exponent(p)
    if math.isinf(p) or p != int(p) or int(p) % 2:
        raise InvalidExponent(f"spectral L^p norms need an even integer p, got {p}")
    base = c.nonzero()
    idx, val = base
    for _ in range(int(p) // 2 - 1):
        idx, val = sparse_convolve(idx, val, *base)
    return float((c.grid.period * np.sum(np.abs(val) ** 2)) ** (1.0 / p))


def sparse_convolve(ia, va, ib, vb):
    """Index/value arrays of the product of two sparse trigonometric polynomials.

    Pairs are reduced per output index with ``bincount`` in a fixed order, so
    the result does not depend on how the work is scheduled.
    """
    if len(ia) == 0 or len(ib) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=complex)
    sums = np.add.outer(ia, ib).ravel()
    prods = np.multiply.outer(va, vb).ravel()
    uniq, inv = np.unique(sums, return_inverse=True)
    return uniq, _bincount_complex(inv, prods, uniq.size)


def convolve_spectra(a: SpectralCoefficients, b: SpectralCoefficients) -> SpectralCoefficients:
    """Coefficients of the product of two trigonometric polynomials (sparse result)."""
    _check_same_grid(a, b)
    idx, val = sparse_convolve(*a.nonzero(), *b.nonzero())
    if idx.size:
        _check_product_range(a.grid, int(idx[0]), int(idx[-1]))
    return SpectralCoefficients(a.grid, indices=idx, values=val)


def _check_product_range(grid: GridSpec, lo: int, hi: int) -> None:
    if lo < -grid.N // 2 or hi >= grid.N // 2:
        raise AliasingRisk(
            f"product spectrum [{lo}, {hi}] leaves the lattice [-{grid.N // 2}, {grid.N // 2})"
            f" (N={grid.N}); refine the grid or enable upsampling"
        )


def product_fits(grid: GridSpec, *coeffs: SpectralCoefficients, rtol: float = SUPPORT_RTOL) -> bool:
    lo = hi = 0
    for c in coeffs:
        b = c.support_bounds(rtol)
        if b is None:
            return True
        lo, hi = lo + b[0], hi + b[1]
    return -grid.N // 2 <= lo and hi < grid.N // 2


def upsample(f: SampledFunction, factor: int = 2) -> SampledFunction:
    """Zero-padded spectral interpolation onto a grid ``factor`` times finer."""
    c = analyze(f)
    fine = f.grid.refined(factor)
    idx, val = c.nonzero()
    return synthesize(SpectralCoefficients(fine, indices=idx, values=val))


def pointwise_product(
    f: SampledFunction, g: SampledFunction, *, allow_upsample: bool = False
) -> SampledFunction:
    """Exact pointwise product.

    If the spectral supports add up past the lattice, the product would alias:
    :class:`AliasingRisk` is raised, or with ``allow_upsample`` both factors are
    first interpolated onto a grid twice as fine and the product is returned
    there.
    """
    _check_same_grid(f, g)
    if not product_fits(f.grid, analyze(f), analyze(g)):
        if not allow_upsample:
            cf, cg = analyze(f).support_bounds(), analyze(g).support_bounds()
            raise AliasingRisk(
                f"supports {cf} and {cg} add past the lattice of N={f.grid.N}"
            )
        f, g = upsample(f), upsample(g)
    return SampledFunction(f.grid, f.values * g.values)


def pairing(u: SampledFunction, v: SampledFunction) -> complex:
    """Bilinear (unconjugated) pairing ``h * sum u(x_n) v(x_n)``."""
    _check_same_grid(u, v)
    return complex(u.grid.h * np.sum(u.values * v.values))


# --------------------------------------------------------------------------
# columnar text files


def _header(kind: str, grid: GridSpec) -> str:
    return f"# bilinop-{kind} N={grid.N} L={grid.L!r}"


def _parse_header(line: str, kind: str) -> GridSpec:
    parts = line.strip().split()
    if len(parts) != 4 or parts[0] != "#" or parts[1] != f"bilinop-{kind}":
        raise ValueError(f"not a bilinop-{kind} file header: {line!r}")
    fields = dict(p.split("=", 1) for p in parts[2:])
    return GridSpec(int(fields["N"]), float(fields["L"]))


def _write_rows(path, header: str, idx: Iterable[int], vals: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for m, c in zip(idx, vals):
            fh.write(f"{int(m)},{float(c.real)!r},{float(c.imag)!r}\n")


def _read_rows(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        rows = [line.split(",") for line in fh if line.strip()]
    idx = np.array([int(r[0]) for r in rows], dtype=np.int64)
    vals = np.array([float(r[1]) + 1j * float(r[2]) for r in rows], dtype=complex)
    return header, idx, vals


def write_sampled(path, f: SampledFunction) -> None:
    _write_rows(path, _header("grid", f.grid), range(f.grid.N), f.values)


def read_sampled(path) -> SampledFunction:
    header, idx, vals = _read_rows(path)
    grid = _parse_header(header, "grid")
    values = np.zeros(grid.N, dtype=complex)
    values[idx] = vals
    return SampledFunction(grid, values)


def write_spectral(path, c: SpectralCoefficients) -> None:
    idx, vals = c.nonzero()
    _write_rows(path, _header("spec", c.grid), idx, vals)


def read_spectral(path) -> SpectralCoefficients:
    header, idx, vals = _read_rows(path)
    return SpectralCoefficients(_parse_header(header, "spec"), indices=idx, values=vals)
