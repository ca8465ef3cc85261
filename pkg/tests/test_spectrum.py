"""Trap eigensolver, thermal weights, cutoff fidelity, and state translation."""

import warnings

import numpy as np
import pytest
import scipy.linalg

import tweezertransport as tt
from tweezertransport.errors import ConfigurationError
from tweezertransport.spectrum import apply_hamiltonian


class TestSolveSpectrum:
    def test_gap_near_harmonic(self, spectrum_fast, trap, units):
        gap = spectrum_fast.energies[1] - spectrum_fast.energies[0]
        omega = trap.harmonic_frequency(units)
        assert omega == pytest.approx(1.23, rel=1e-2)
        assert gap == pytest.approx(omega, rel=0.1)  # anharmonic softening < 10%

    def test_oscillation_timescale(self, spectrum_fast):
        # 2 tau = 4 pi / (E1 - E0), close to 10 us for the default trap
        assert 2.0 * spectrum_fast.gap_timescale() == pytest.approx(10.0, abs=1.0)

    def test_parity_and_nodes(self, spectrum_fast, grid_fast):
        center = 0.0
        x = grid_fast.x
        for i, state in enumerate(spectrum_fast.states[:3]):
            amps = state.amplitudes.real
            interior = np.abs(amps) > 1e-3 * np.abs(amps).max()
            sign_changes = np.count_nonzero(np.diff(np.sign(amps[interior])) != 0)
            assert sign_changes == i
        ground = spectrum_fast.states[0].amplitudes.real
        idx = np.argmin(np.abs(x - center))
        assert ground[idx] == pytest.approx(np.abs(ground).max(), rel=1e-3)

    def test_orthonormal(self, spectrum_fast):
        overlaps = np.array(
            [
                [tt.inner_product(a, b) for b in spectrum_fast.states]
                for a in spectrum_fast.states
            ]
        )
        assert np.max(np.abs(overlaps - np.eye(spectrum_fast.n_states))) < 1e-8

    def test_residual(self, spectrum_fast, trap, grid_fast, units):
        v = tt.potential_on_grid(trap, grid_fast, units)
        tol = 1e-6 * abs(units.depth_to_internal(trap.depth_mK))
        for energy, state in zip(spectrum_fast.energies, spectrum_fast.states):
            residual = apply_hamiltonian(state, v, units) - energy * state.amplitudes
            assert np.sqrt(grid_fast.dx * np.sum(np.abs(residual) ** 2)) < tol

    def test_finite_difference_oracle(self, trap, units):
        # independent dense FD diagonalization on a coarse grid
        grid = tt.make_grid(-0.64, 0.64, 512)
        spec = tt.solve_spectrum(trap, grid, units, 4)
        v = tt.potential_on_grid(trap, grid, units)
        c = units.kinetic_prefactor / grid.dx**2
        energies_fd = scipy.linalg.eigh_tridiagonal(
            v + 2.0 * c, np.full(grid.n_points - 1, -c), select="i", select_range=(0, 3)
        )[0]
        scale = abs(units.depth_to_internal(trap.depth_mK))
        assert np.max(np.abs(energies_fd - spec.energies) / scale) < 1e-4

    def test_truncated_spectrum_warns(self, units):
        shallow = tt.TrapParams(-0.001, 0.5, 0.0)  # handful of bound states
        grid = tt.make_grid(-3.0, 3.0, 1200)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            spec = tt.solve_spectrum(shallow, grid, units, 12)
        assert spec.truncated
        assert spec.n_states < 12
        assert any("bound states" in str(w.message) for w in caught)

    def test_repulsive_rejected(self, units):
        grid = tt.make_grid(-1.0, 1.0, 256)
        with pytest.raises(ConfigurationError):
            tt.solve_spectrum(tt.TrapParams(1.0, 0.5, 0.0), grid, units, 2)

    def test_unresolved_waist_rejected(self, units):
        grid = tt.make_grid(-10.0, 10.0, 64)  # dx = 0.3125
        with pytest.raises(ConfigurationError):
            tt.solve_spectrum(tt.TrapParams(-1.0, 0.5, 0.0), grid, units, 2)

    def test_csv_export(self, spectrum_fast, tmp_path, units):
        path = tmp_path / "spectrum.csv"
        spectrum_fast.write_csv(path)
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        assert data.shape == (spectrum_fast.n_states, 3)
        assert data[0, 1] == pytest.approx(spectrum_fast.energies[0], rel=1e-9)
        assert data[0, 2] == pytest.approx(units.energy_to_uK(spectrum_fast.energies[0]), rel=1e-9)


class TestThermalEnsemble:
    def test_boltzmann_ratio(self, spectrum_fast, units):
        ens = tt.thermal_ensemble(spectrum_fast, 1.0, 3)
        gap = spectrum_fast.energies[1] - spectrum_fast.energies[0]
        expected = np.exp(-gap / units.temperature_to_internal(1.0))
        assert expected == pytest.approx(8e-5, rel=0.15)
        assert ens.weights[1] / ens.weights[0] == pytest.approx(expected, rel=1e-9)

    def test_low_temperature_limit(self, spectrum_fast):
        ens = tt.thermal_ensemble(spectrum_fast, 0.01, 3)
        assert ens.weights[0] == pytest.approx(1.0, abs=1e-12)

    def test_single_state(self, spectrum_fast):
        ens = tt.thermal_ensemble(spectrum_fast, 1.0, 1)
        assert ens.weights == pytest.approx([1.0])

    def test_normalization_and_ordering(self, spectrum_fast):
        for temp in (0.5, 1.0, 10.0, 30.0):
            ens = tt.thermal_ensemble(spectrum_fast, temp, 4)
            assert ens.weights.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(np.diff(ens.weights) <= 0)

    def test_cutoff_exceeds_available(self, spectrum_fast):
        with pytest.raises(ConfigurationError, match="available"):
            tt.thermal_ensemble(spectrum_fast, 1.0, spectrum_fast.n_states + 1)


class TestCutoffFidelity:
    def test_identical(self):
        p = np.array([0.7, 0.2, 0.1])
        assert tt.cutoff_fidelity(p, p) == pytest.approx(1.0)

    def test_half_overlap(self):
        assert tt.cutoff_fidelity(np.array([1.0]), np.array([0.5, 0.5])) == pytest.approx(0.5)

    def test_mismatched(self):
        with pytest.raises(ConfigurationError):
            tt.cutoff_fidelity(np.array([0.5, 0.5]), np.array([1.0]))


class TestShift:
    def test_zero_shift_identity(self, ensemble_fast):
        shifted = tt.shifted_ensemble(ensemble_fast, 0.0)
        for a, b in zip(shifted.states, ensemble_fast.states):
            assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-12

    def test_mean_position_moves(self, ensemble_fast):
        dr = 1.7
        shifted = tt.shifted_ensemble(ensemble_fast, dr)
        for orig, new in zip(ensemble_fast.states, shifted.states):
            x0, _ = orig.position_moments()
            x1, _ = new.position_moments()
            assert x1 - x0 == pytest.approx(dr, abs=1e-6)

    def test_composition(self, ensemble_fast):
        one = tt.shifted_ensemble(ensemble_fast, 1.6)
        two = tt.shifted_ensemble(tt.shifted_ensemble(ensemble_fast, 0.8), 0.8)
        for a, b in zip(one.states, two.states):
            assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-10

    def test_orthonormality_preserved(self, ensemble_fast):
        shifted = tt.shifted_ensemble(ensemble_fast, 2.3)
        n = len(shifted.states)
        for i in range(n):
            for j in range(n):
                expected = 1.0 if i == j else 0.0
                assert abs(tt.inner_product(shifted.states[i], shifted.states[j])) == pytest.approx(
                    expected, abs=1e-8
                )

    def test_off_grid_rejected(self, ensemble_fast, grid_fast):
        too_far = grid_fast.x_max + 1.0
        with pytest.raises(ConfigurationError):
            tt.shift_state(ensemble_fast.states[0], too_far)
