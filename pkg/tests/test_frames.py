import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilinop.exceptions import GridMismatch, GridTooSmall
from bilinop.frames import BumpProfile, band_project, build_lp_frame, build_theta, phi_hat, psi_hat
from bilinop.grid import GridSpec, SampledFunction, SpectralCoefficients, analyze

from conftest import random_trig


@pytest.fixture(scope="module")
def frame():
    return build_lp_frame(GridSpec(4096, 12.0))


class TestBumpProfile:
    def test_default_polynomial(self):
        t = np.linspace(0, 1, 101)
        rho = BumpProfile()
        assert np.max(np.abs(rho(t) - t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3))) < 1e-14

    def test_order_one_is_identity(self):
        t = np.linspace(0, 1, 11)
        assert np.allclose(BumpProfile(1)(t), t)

    def test_endpoints_and_clipping(self):
        rho = BumpProfile(5)
        assert rho(0.0) == 0.0 and rho(1.0) == 1.0
        assert rho(-3.0) == 0.0 and rho(7.0) == 1.0
        assert rho(0.5) == 0.5

    @pytest.mark.parametrize("order", [2, 3, 4, 6, 8])
    def test_monotone(self, order):
        vals = BumpProfile(order)(np.linspace(0, 1, 2001))
        assert np.all(np.diff(vals) >= 0)

    @pytest.mark.parametrize("order", [2, 4, 7])
    def test_flat_ends(self, order):
        rho = BumpProfile(order)
        eps = 1e-3
        bound = 1.01 * math.comb(2 * order - 1, order) * eps**order
        assert rho(eps) < bound
        assert 1 - rho(1 - eps) < bound

    def test_rejects_order_zero(self):
        with pytest.raises(ValueError):
            BumpProfile(0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**20), st.integers(1, 9))
def test_complementarity(k, order):
    # dyadic t keeps 1 - t exact
    t = k / 2**20
    rho = BumpProfile(order)
    assert rho(t) + rho(1 - t) == 1.0


class TestLPFrame:
    def test_levels(self, frame):
        # nyquist = 4096 / 24 ~ 170.7
        assert frame.k_max == 6
        assert frame.k_min == -4

    def test_partition_of_unity(self, frame):
        assert frame.partition_error() <= 1e-12
        assert frame.partition_error(homogeneous=True) <= 1e-12

    def test_partition_random_lattice_points(self, frame, rng):
        xi = rng.integers(-2**frame.k_max * 12, 2**frame.k_max * 12 + 1, 500) / 12
        total = phi_hat(frame.profile, xi) + sum(psi_hat(frame.profile, xi * 2.0**-k) for k in frame.levels)
        assert np.max(np.abs(total - 1)) <= 1e-12

    def test_zero_frequency(self, frame):
        assert frame.phi(0.0) == 1.0
        assert all(frame.psi(0.0 * 2.0**-k) == 0 for k in frame.levels)

    def test_at_most_two_bands(self, frame, rng):
        for xi in rng.uniform(0.6, 2.0**frame.k_max, 200):
            active = [k for k in frame.levels if frame.psi(xi * 2.0**-k) != 0]
            assert 1 <= len(active) <= 2

    def test_supports(self, frame):
        assert frame.support_violations() == 0

    def test_filters_real_and_even(self, frame):
        xi = np.linspace(-5, 5, 1001)
        assert np.array_equal(frame.psi(xi), frame.psi(-xi))
        assert np.array_equal(frame.phi(xi), frame.phi(-xi))

    def test_grid_too_small(self):
        with pytest.raises(GridTooSmall):
            build_lp_frame(GridSpec(64, 12.0))

    def test_small_scale_keeps_levels_nonnegative(self):
        assert build_lp_frame(GridSpec(256, 0.25)).k_min == 0


class TestBandProject:
    def test_identity_filter(self, frame, rng):
        f, _ = random_trig(frame.grid, rng, -50, 50)
        out = band_project(f, np.ones(frame.grid.N))
        assert np.max(np.abs(out.values - f.values)) < 1e-12

    def test_flat_region(self, frame):
        # Psi^(2^-3 xi) = 1 at xi = 8
        f = SampledFunction.harmonic(frame.grid, 8 * 12)
        out = band_project(f, frame.band(3))
        assert np.max(np.abs(out.values - f.values)) < 1e-12

    def test_reconstruction(self, frame, rng):
        top = 2**frame.k_max * 12
        f, _ = random_trig(frame.grid, rng, -top, top, density=0.3)
        total = band_project(f, frame.lowpass(0))
        for k in frame.levels:
            total = total + band_project(f, frame.band(k))
        assert np.max(np.abs(total.values - f.values)) < 1e-11

    def test_peak_and_annihilating(self, frame, rng):
        band = frame.band(4)
        flat = np.abs(frame.grid.frequencies)
        plateau = flat == 2.0**4
        outside = (flat <= 2.0**3) | (flat >= 2.0**5)
        f, _ = random_trig(frame.grid, rng, -1500, 1500, density=0.5)
        c = analyze(band_project(f, band)).to_array()
        c0 = analyze(f).to_array()
        assert np.max(np.abs(c[plateau] - c0[plateau])) < 1e-13
        assert np.max(np.abs(c[outside])) < 1e-13

    def test_callable_and_sparse(self, frame):
        c = SpectralCoefficients.sparse(frame.grid, {96: 1.0, 5: 2.0})
        out = band_project(c, lambda xi: psi_hat(frame.profile, xi / 8))
        assert out.mode == "sparse"
        assert out.entries == {96: 1.0}

    def test_sparse_needs_callable(self, frame):
        with pytest.raises(TypeError):
            band_project(SpectralCoefficients.sparse(frame.grid, {1: 1.0}), frame.band(0))

    def test_mismatch(self, frame):
        with pytest.raises(GridMismatch):
            band_project(SampledFunction.constant(frame.grid), np.ones(17))


class TestTheta:
    def test_half_line_values(self):
        th = build_theta()
        assert th(0.5) == 0.0
        assert th(1.0) == 0.0
        assert th(3.0) == 1.0
        assert th(2.0) == 1.0

    def test_midpoint(self):
        th = build_theta()
        assert th(1.5) == 0.5
        assert 0 < th(1.2) < 1

    def test_range(self):
        vals = build_theta(BumpProfile(6))(np.linspace(-5, 5, 1001))
        assert vals.min() >= 0 and vals.max() <= 1


def test_filter_dump_round_trip(frame, tmp_path):
    from bilinop.grid import read_spectral, write_spectral

    path = tmp_path / "band3.txt"
    write_spectral(path, frame.filter_coefficients(3))
    back = read_spectral(path)
    assert np.array_equal(back.to_array().real, frame.band(3))
    assert np.array_equal(frame.filter_coefficients().to_array().real, frame.lowpass(0))
