import math

import numpy as np
import pytest

from bilinop.grid import GridSpec, SampledFunction

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def trig_poly(grid, indices, coeffs):
    """Direct evaluation of sum_m c_m exp(i x m / L) on the grid (no FFT).

    The phase x_n m / L = 2 pi n m / N is reduced modulo N in integers so it
    stays accurate for large n m.
    """
    n = np.arange(grid.N, dtype=np.int64)
    vals = np.zeros(grid.N, dtype=complex)
    for m, c in zip(indices, coeffs):
        vals += c * np.exp(2j * np.pi * ((n * int(m)) % grid.N) / grid.N)
    return SampledFunction(grid, vals)


def random_trig(grid, rng, lo, hi, density=1.0):
    """Random trigonometric polynomial with lattice indices in [lo, hi]."""
    idx = np.arange(lo, hi + 1)
    if density < 1.0:
        idx = idx[rng.random(idx.size) < density]
    coeffs = (rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)) / math.sqrt(max(idx.size, 1))
    return trig_poly(grid, idx, coeffs), dict(zip(idx.tolist(), coeffs))


def direct_dft(f):
    """c_m = (1/N) sum_n f(x_n) exp(-i x_n m / L) for every lattice index (O(N^2))."""
    grid = f.grid
    m = grid.indices
    phase = np.exp(-1j * np.outer(m, grid.x) / grid.L)
    return dict(zip(m.tolist(), phase @ f.values / grid.N))


def direct_bilinear(sigma, cf: dict, cg: dict, grid):
    """Output coefficients sum_{a+b=w} sigma(a/L, b/L) cf_a cg_b by explicit double loop."""
    ia, ib = list(cf), list(cg)
    weights = np.asarray(sigma(np.array(ia)[:, None] / grid.L, np.array(ib)[None, :] / grid.L), dtype=complex)
    weights = weights * np.ones((len(ia), len(ib)))
    out = {}
    for r, a in enumerate(ia):
        for c, b in enumerate(ib):
            out[a + b] = out.get(a + b, 0) + weights[r, c] * cf[a] * cg[b]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid():
    return GridSpec(256, 12.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
