"""Split-operator evolution: stationarity, dispersion, unitarity, reversibility."""

import numpy as np
import pytest

import tweezertransport as tt
from tweezertransport.errors import ConfigurationError, NumericalError
from tweezertransport.pulses import SampledPulse


def hold_pulse(position, duration):
    return SampledPulse(np.array([0.0, duration]), np.array([position, position]))


class TestSingleState:
    def test_ground_state_stationary(self, trap, units, spectrum_fast):
        # 50 us in the static trap barely moves the ground state
        plan = tt.make_plan(hold_pulse(0.0, 50.0), trap, units, dt=0.05)
        final, _ = tt.evolve(spectrum_fast.states[0], plan)
        overlap = abs(tt.inner_product(spectrum_fast.states[0], final)) ** 2
        assert overlap > 1.0 - 1e-6

    def test_free_dispersion(self, units):
        # V = 0: sigma^2(t) = sigma^2(0) + (hbar t / (2 m sigma(0)))^2
        grid = tt.make_grid(-6.0, 6.0, 2400)
        sigma0, t_total = 0.05, 20.0
        psi = tt.gaussian_packet(grid, 0.0, sigma0)
        zero_trap = tt.TrapParams(-1e-12, 0.5, 0.0)
        plan = tt.make_plan(hold_pulse(0.0, t_total), zero_trap, units, dt=0.1)
        final, _ = tt.evolve(psi, plan)
        _, sigma = final.position_moments()
        expected = np.sqrt(sigma0**2 + (units.kinetic_prefactor * t_total / sigma0) ** 2)
        assert sigma == pytest.approx(expected, rel=1e-3)

    def test_norm_drift(self, trap, units, spectrum_fast):
        pulse = tt.piecewise_quadratic(0.0, 3.0, 50.0)
        plan = tt.make_plan(pulse, trap, units, dt=0.05, t_total=50.0)  # 1000 steps
        final, _ = tt.evolve(spectrum_fast.states[1], plan)
        assert abs(final.norm() - 1.0) < 1e-8

    def test_time_reversal(self, trap, units, spectrum_fast):
        pulse = tt.piecewise_quadratic(0.0, 3.0, 12.0)
        plan = tt.make_plan(pulse, trap, units, dt=0.1, t_total=12.0)
        forward, _ = tt.evolve(spectrum_fast.states[0], plan)
        conjugated = tt.WaveFunction(forward.grid, np.conj(forward.amplitudes))
        back, _ = tt.evolve(conjugated, plan.reversed())
        recovered = tt.WaveFunction(back.grid, np.conj(back.amplitudes))
        err = np.sqrt(
            back.grid.dx
            * np.sum(np.abs(recovered.amplitudes - spectrum_fast.states[0].amplitudes) ** 2)
        )
        assert err < 1e-6

    def test_richardson_halving(self, trap, units, spectrum_fast):
        # overlap infidelity between successive dt halvings drops by >= 8x
        pulse = tt.piecewise_quadratic(0.0, 3.0, 20.0)
        finals = {}
        for dt in (0.4, 0.2, 0.1):
            plan = tt.make_plan(pulse, trap, units, dt=dt, t_total=20.0)
            finals[dt], _ = tt.evolve(spectrum_fast.states[0], plan)
        d1 = 1.0 - abs(tt.inner_product(finals[0.4], finals[0.2])) ** 2
        d2 = 1.0 - abs(tt.inner_product(finals[0.2], finals[0.1])) ** 2
        assert d1 / d2 >= 8.0

    def test_single_step_matches_manual(self, trap, units):
        # one Strang step with midpoint trajectory values, computed by hand
        grid = tt.make_grid(-2.0, 5.0, 1400)
        psi = tt.gaussian_packet(grid, 0.1, 0.05)
        dt = 0.1
        plan = tt.EvolutionPlan(
            dt=dt,
            n_steps=1,
            trap=trap,
            units=units,
            center=np.array([0.0, 0.2]),
            depth_factor=np.array([1.0, 1.1]),
            waist_factor=np.array([1.0, 0.9]),
            position_offset=np.array([0.0, 0.02]),
        )
        final, _ = tt.evolve(psi, plan)
        r_mid, f_mid, w_mid, o_mid = 0.1, 1.05, 0.95, 0.01
        v = units.depth_to_internal(trap.depth_mK) * f_mid * np.exp(
            -2.0 * (grid.x - r_mid - o_mid) ** 2 / (trap.waist_um * w_mid) ** 2
        )
        half = np.exp(-0.5j * dt * v)
        kin = np.exp(-1j * units.kinetic_prefactor * grid.k**2 * dt)
        manual = half * np.fft.ifft(kin * np.fft.fft(half * psi.amplitudes))
        assert np.max(np.abs(final.amplitudes - manual)) < 1e-13

    def test_nan_detected_with_step_index(self, trap, units):
        grid = tt.make_grid(-2.0, 5.0, 1400)
        bad = tt.WaveFunction(grid, np.full(1400, np.nan, dtype=complex))
        plan = tt.make_plan(hold_pulse(0.0, 1.0), trap, units, dt=0.1)
        with pytest.raises(NumericalError, match="step"):
            tt.evolve(bad, plan)


class TestEnsemble:
    def test_single_member_matches_evolve(self, trap, units, spectrum_fast):
        ens = tt.thermal_ensemble(spectrum_fast, 1.0, 1)
        pulse = tt.piecewise_quadratic(0.0, 3.0, 15.0)
        plan = tt.make_plan(pulse, trap, units, dt=0.1, t_total=15.0)
        single, _ = tt.evolve(spectrum_fast.states[0], plan)
        members, _ = tt.evolve_ensemble(ens, plan)
        assert np.max(np.abs(members[0].amplitudes - single.amplitudes)) < 1e-13

    def test_orthogonality_preserved(self, trap, units, spectrum_fast):
        ens = tt.thermal_ensemble(spectrum_fast, 10.0, 4)
        pulse = tt.piecewise_quadratic(0.0, 3.0, 14.0)
        plan = tt.make_plan(pulse, trap, units, dt=0.1, t_total=14.0)
        members, _ = tt.evolve_ensemble(ens, plan)
        for i in range(4):
            for j in range(i):
                assert abs(tt.inner_product(members[i], members[j])) < 1e-6

    def test_excited_state_corrupted_more(self, trap, units, spectrum_fast):
        # a ramp that carries the ground state cleanly still distorts the
        # second excited state much more
        pulse = tt.piecewise_quadratic(0.0, 3.0, 20.0)
        plan = tt.make_plan(pulse, trap, units, dt=0.1, t_total=20.0)
        states = [spectrum_fast.states[0], spectrum_fast.states[2]]
        finals, _ = tt.evolve_states(states, plan)
        infidelities = [
            1.0 - abs(tt.inner_product(tt.shift_state(s0, 3.0), sf)) ** 2
            for s0, sf in zip(states, finals)
        ]
        assert infidelities[0] < 2e-2
        assert infidelities[1] > 5.0 * infidelities[0]

    def test_norm_column_stays_one(self, trap, units, spectrum_fast):
        pulse = tt.piecewise_quadratic(0.0, 3.0, 10.0)
        plan = tt.make_plan(pulse, trap, units, dt=0.1, t_total=10.0, record_observables=True)
        _, trajectories = tt.evolve_ensemble(tt.thermal_ensemble(spectrum_fast, 1.0, 2), plan)
        for traj in trajectories:
            assert np.max(np.abs(traj.norm - 1.0)) < 1e-8


class TestPlansAndRecording:
    def test_plan_length_mismatch(self, trap, units):
        with pytest.raises(ConfigurationError):
            tt.EvolutionPlan(
                dt=0.1,
                n_steps=5,
                trap=trap,
                units=units,
                center=np.zeros(5),  # needs 6 entries
                depth_factor=np.ones(6),
                waist_factor=np.ones(6),
                position_offset=np.zeros(6),
            )

    def test_noise_length_checked(self, trap, units):
        pulse = tt.piecewise_quadratic(0.0, 3.0, 10.0)
        wrong = tt.identity_realization(0.1, 42)
        with pytest.raises(ConfigurationError):
            tt.make_plan(pulse, trap, units, dt=0.1, t_total=10.0, noise=wrong)

    def test_trajectory_csv_and_snapshots(self, trap, units, spectrum_fast, tmp_path):
        pulse = tt.piecewise_quadratic(0.0, 3.0, 5.0)
        plan = tt.make_plan(
            pulse, trap, units, dt=0.1, t_total=5.0, record_observables=True, snapshot_stride=25
        )
        _, traj = tt.evolve(spectrum_fast.states[0], plan)
        path = tmp_path / "traj.csv"
        traj.write_csv(path)
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        assert data.shape == (51, 6)
        assert len(traj.snapshots) == 3  # steps 0, 25, 50
        snap_path = tmp_path / "snaps.csv"
        traj.write_snapshots_csv(snap_path)
        assert snap_path.read_text().splitlines()[0].count("t=") == 3

    def test_free_evolve_preserves_norm(self, units, spectrum_fast):
        moved = tt.free_evolve(spectrum_fast.states[:2], units, 7.0)
        for state in moved:
            assert state.norm() == pytest.approx(1.0, abs=1e-12)
