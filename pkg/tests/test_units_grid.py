"""Unit system, spatial grid, and spectral transform contracts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tweezertransport as tt
from tweezertransport.errors import ConfigurationError, GridMismatchError


class TestUnits:
    def test_kinetic_prefactor_sr88(self, units):
        # hbar/(2m) for the Sr-88 mass, converted to um^2/us
        assert units.kinetic_prefactor == pytest.approx(3.61e-4, rel=5e-3)

    def test_depth_conversion_1mK(self, units):
        assert units.depth_to_internal(-1.0) == pytest.approx(-130.92, rel=5e-3)

    def test_temperature_conversion_1uK(self, units):
        assert units.temperature_to_internal(1.0) == pytest.approx(0.131, rel=1e-2)

    def test_energy_roundtrip(self, units):
        assert units.energy_to_uK(units.temperature_to_internal(17.3)) == pytest.approx(17.3)


class TestGrid:
    def test_dx_production(self):
        grid = tt.make_grid(-5.0, 5.0, 5000)
        assert grid.dx == pytest.approx(0.002)

    def test_dx_simple(self):
        assert tt.make_grid(0.0, 1.0, 100).dx == pytest.approx(0.01)

    @pytest.mark.parametrize("n", [101, 15, 0, -4])
    def test_bad_n_points(self, n):
        with pytest.raises(ConfigurationError):
            tt.make_grid(0.0, 1.0, n)

    def test_bad_bounds(self):
        with pytest.raises(ConfigurationError):
            tt.make_grid(1.0, 0.0, 64)
        with pytest.raises(ConfigurationError):
            tt.make_grid(0.0, np.inf, 64)

    def test_momentum_grid(self):
        grid = tt.make_grid(-1.0, 1.0, 64)
        assert grid.k.max() == pytest.approx(np.pi / grid.dx - grid.dk)
        assert grid.k.min() == pytest.approx(-np.pi / grid.dx)
        assert grid.dk == pytest.approx(2 * np.pi / 2.0)

    def test_grid_immutable(self):
        grid = tt.make_grid(-1.0, 1.0, 64)
        with pytest.raises((ValueError, RuntimeError)):
            grid.x[0] = 3.0


class TestTransforms:
    def test_roundtrip(self):
        grid = tt.make_grid(-2.0, 2.0, 256)
        rng = np.random.default_rng(1)
        psi = tt.WaveFunction(grid, rng.standard_normal(256) + 1j * rng.standard_normal(256))
        psi = psi.normalized()
        back = tt.from_momentum(tt.to_momentum(psi), grid)
        assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-12

    def test_parseval(self):
        grid = tt.make_grid(-2.0, 2.0, 256)
        psi = tt.gaussian_packet(grid, 0.2, 0.1, k0=5.0)
        phi = tt.to_momentum(psi)
        assert grid.dk * np.sum(np.abs(phi) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_constant_is_dc(self):
        grid = tt.make_grid(0.0, 1.0, 64)
        psi = tt.WaveFunction(grid, np.ones(64)).normalized()
        phi = tt.to_momentum(psi)
        assert np.abs(phi[0]) > 1e-6
        assert np.max(np.abs(phi[1:])) < 1e-12

    def test_plane_wave_is_delta(self):
        grid = tt.make_grid(0.0, 2.0, 128)
        k0 = grid.k[5]
        psi = tt.WaveFunction(grid, np.exp(1j * k0 * grid.x)).normalized()
        phi = tt.to_momentum(psi)
        mask = np.ones(128, dtype=bool)
        mask[5] = False
        assert np.max(np.abs(phi[mask])) < 1e-10 * np.abs(phi[5])

    def test_gaussian_pair_width(self):
        # position width sigma maps to momentum width 1/(2 sigma), center kept
        grid = tt.make_grid(-4.0, 4.0, 1024)
        sigma, k0 = 0.25, 3.0
        psi = tt.gaussian_packet(grid, 0.0, sigma, k0=k0)
        k_mean, k_sigma = psi.momentum_moments()
        assert k_mean == pytest.approx(k0, abs=1e-6)
        assert k_sigma == pytest.approx(1.0 / (2.0 * sigma), rel=1e-6)


class TestInnerProduct:
    def test_norm_of_normalized(self):
        grid = tt.make_grid(-1.0, 1.0, 128)
        psi = tt.gaussian_packet(grid, 0.0, 0.05)
        assert tt.inner_product(psi, psi) == pytest.approx(1.0, abs=1e-12)

    def test_conjugate_symmetry(self):
        grid = tt.make_grid(-1.0, 1.0, 128)
        rng = np.random.default_rng(2)
        a = tt.WaveFunction(grid, rng.standard_normal(128) + 1j * rng.standard_normal(128))
        b = tt.WaveFunction(grid, rng.standard_normal(128) + 1j * rng.standard_normal(128))
        assert tt.inner_product(a, b) == pytest.approx(np.conj(tt.inner_product(b, a)))

    def test_eigenstates_orthogonal(self, spectrum_fast):
        for i in range(spectrum_fast.n_states):
            for j in range(i):
                assert abs(tt.inner_product(spectrum_fast.states[i], spectrum_fast.states[j])) < 1e-8

    def test_grid_mismatch(self):
        a = tt.gaussian_packet(tt.make_grid(-1.0, 1.0, 64), 0.0, 0.1)
        b = tt.gaussian_packet(tt.make_grid(-1.0, 1.0, 128), 0.0, 0.1)
        with pytest.raises(GridMismatchError):
            tt.inner_product(a, b)


@settings(max_examples=25, deadline=None)
@given(
    x0=st.floats(-0.5, 0.5),
    sigma=st.floats(0.02, 0.2),
    k0=st.floats(-20.0, 20.0),
)
def test_spectral_roundtrip_property(x0, sigma, k0):
    grid = tt.make_grid(-2.0, 2.0, 256)
    psi = tt.gaussian_packet(grid, x0, sigma, k0)
    back = tt.from_momentum(tt.to_momentum(psi), grid)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-12
    assert abs(back.norm() - 1.0) < 1e-12
