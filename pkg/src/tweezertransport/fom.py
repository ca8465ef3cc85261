"""Transport quality: Uhlmann infidelity, its time average, release-and-capture.

The infidelity between two rank-N_s density matrices with orthonormal
eigenbases {psi_i} (weights p) and {phi_j} (weights q) is computed on the
evolved subspace: with overlap matrix O_ij = <psi_i|phi_j>, the operator
sqrt(rho_f) rho_0 sqrt(rho_f) restricted to span{psi_i} is
M = D_p^(1/2) O D_q O^dag D_p^(1/2), and J = 1 - (sum_k sqrt(eig_k(M)))^2.
This is exact (unitary evolution keeps the rank and eigenbasis known) and
turns an O(n^3) dense matrix root into an N_s x N_s eigenproblem.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm as _norm_dist

from .errors import ConfigurationError, GridMismatchError, NumericalError
from .grid import SpatialGrid, WaveFunction
from .noise import NoiseRealization
from .propagator import EvolutionPlan, evolve_states, free_evolve, make_plan
from .pulses import Pulse
from .spectrum import ThermalEnsemble, shifted_ensemble
from .trap import TrapParams
from .units import UnitSystem

#: Half-width of the 35th..65th percentile window of a unit-std Gaussian profile.
RECAPTURE_QUANTILE_Z = float(_norm_dist.ppf(0.65))


def _check_weights(w: np.ndarray, label: str):
    w = np.asarray(w, dtype=float)
    if abs(w.sum() - 1.0) > 1e-8 or np.any(w < -1e-12):
        raise ConfigurationError(f"{label} weights must be normalized probabilities")
    return w


def infidelity_from_overlaps(p: np.ndarray, q: np.ndarray, overlaps: np.ndarray) -> float:
    """J from weights and the matrix O_ij = <psi_i|phi_j>."""
    p = _check_weights(p, "evolved")
    q = _check_weights(q, "target")
    sqrt_p = np.sqrt(p)
    m = (sqrt_p[:, None] * overlaps) * q[None, :] @ overlaps.conj().T * sqrt_p[None, :]
    m = 0.5 * (m + m.conj().T)
    eigs = np.linalg.eigvalsh(m)
    if eigs.min() < -1e-10:
        raise NumericalError(f"fidelity operator has negative eigenvalue {eigs.min():.3e}")
    fidelity = float(np.sum(np.sqrt(np.clip(eigs, 0.0, None))) ** 2)
    return 1.0 - fidelity


def uhlmann_infidelity(
    weights_a: np.ndarray,
    states_a: list[WaveFunction],
    weights_b: np.ndarray,
    states_b: list[WaveFunction],
) -> float:
    """J = 1 - (tr sqrt(sqrt(rho_a) rho_b sqrt(rho_a)))^2 for low-rank ensembles."""
    grid = states_a[0].grid
    for s in list(states_a) + list(states_b):
        if not s.grid.same_as(grid):
            raise GridMismatchError("ensembles must share one grid")
    a = np.stack([s.amplitudes for s in states_a])
    b = np.stack([s.amplitudes for s in states_b])
    overlaps = grid.dx * (a.conj() @ b.T)
    return infidelity_from_overlaps(weights_a, weights_b, overlaps)


@dataclass
class FomRecord:
    """J(t) over the post-transport window and its arithmetic mean."""

    times: np.ndarray
    j_values: np.ndarray
    t_c: float

    @property
    def j_avg(self) -> float:
        return float(np.mean(self.j_values))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_us", "j"])
            for t, j in zip(self.times, self.j_values):
                writer.writerow([f"{t:.10g}", f"{j:.12g}"])


def time_averaged_fom(
    ensemble: ThermalEnsemble,
    pulse: Pulse,
    trap: TrapParams,
    units: UnitSystem,
    dt: float,
    t_c: float = 10.0,
    noise: NoiseRealization | None = None,
) -> FomRecord:
    """Evolve through the pulse plus a t_c hold at r_f, averaging J over the hold.

    The target is the initial ensemble translated to the pulse's final
    position; J is recorded at every step of the window, both endpoints
    included.
    """
    if t_c <= 0:
        raise ConfigurationError("t_c must be positive")
    target = shifted_ensemble(ensemble, pulse.r_f - pulse.r_0)
    target_batch = np.stack([s.amplitudes for s in target.states])
    grid = ensemble.grid

    t_total = pulse.t_p + t_c
    plan = make_plan(pulse, trap, units, dt, t_total, noise=noise)
    n_window_start = int(round(pulse.t_p / dt))

    p = ensemble.weights
    q = target.weights
    j_values: list[float] = []

    def observer(step, batch):
        if step >= n_window_start:
            overlaps = grid.dx * (batch.conj() @ target_batch.T)
            j_values.append(infidelity_from_overlaps(p, q, overlaps))

    evolve_states(ensemble.states, plan, on_step=observer)
    times = dt * np.arange(n_window_start, plan.n_steps + 1)
    return FomRecord(times, np.asarray(j_values), t_c)


def recapture_window(trap: TrapParams, center: float) -> tuple[float, float]:
    """35th..65th percentile window of the trap's normalized Gaussian profile.

    The profile exp(-2 x^2 / w0^2) is a Gaussian with std w0/2, so the window
    is center +- z(0.65) * w0 / 2.
    """
    half = RECAPTURE_QUANTILE_Z * trap.waist_um / 2.0
    return center - half, center + half


def recapture_probability(
    weights: np.ndarray,
    states: list[WaveFunction],
    trap: TrapParams,
    units: UnitSystem,
    tau_rc: float,
    center: float,
) -> float:
    """Trap off, free flight for tau_rc, then the in-window probability mass."""
    if tau_rc < 0:
        raise ConfigurationError("release time must be nonnegative")
    weights = _check_weights(weights, "recapture")
    evolved = free_evolve(states, units, tau_rc) if tau_rc > 0 else states
    grid = states[0].grid
    lo, hi = recapture_window(trap, center)
    mask = (grid.x >= lo) & (grid.x <= hi)
    prob = 0.0
    for w, s in zip(weights, evolved):
        prob += w * grid.dx * float(np.sum(np.abs(s.amplitudes[mask]) ** 2))
    return min(prob, 1.0)


def multi_transport(
    ensemble: ThermalEnsemble,
    pulse: Pulse,
    n_transports: int,
    trap: TrapParams,
    units: UnitSystem,
    dt: float,
) -> list[WaveFunction]:
    """Alternate the forward pulse and its time reverse n_transports times.

    n_transports must be odd so the ensemble ends at the pulse's final
    position; weights are unchanged and the final states are returned for
    recapture analysis.
    """
    if n_transports < 1 or n_transports % 2 == 0:
        raise ConfigurationError("n_transports must be an odd positive integer")
    forward = make_plan(pulse, trap, units, dt)
    backward = make_plan(pulse.reversed(), trap, units, dt)
    states = ensemble.states
    for i in range(n_transports):
        states, _ = evolve_states(states, forward if i % 2 == 0 else backward)
    return states


@dataclass
class RecaptureCurve:
    """Recapture probability versus release time for one pulse/transport count."""

    tau_rc: np.ndarray
    probability: np.ndarray
    n_transports: int
    label: str = ""

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau_rc_us", "probability"])
            for t, pr in zip(self.tau_rc, self.probability):
                writer.writerow([f"{t:.10g}", f"{pr:.12g}"])


def recapture_curve(
    ensemble: ThermalEnsemble,
    pulse: Pulse,
    n_transports: int,
    trap: TrapParams,
    units: UnitSystem,
    dt: float,
    tau_grid: np.ndarray,
    label: str = "",
) -> RecaptureCurve:
    """Transport n_transports times, then measure recapture on the tau grid."""
    final_states = multi_transport(ensemble, pulse, n_transports, trap, units, dt)
    probs = [
        recapture_probability(ensemble.weights, final_states, trap, units, tau, pulse.r_f)
        for tau in tau_grid
    ]
    return RecaptureCurve(np.asarray(tau_grid, float), np.asarray(probs), n_transports, label)
