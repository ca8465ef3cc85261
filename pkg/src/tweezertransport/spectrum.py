"""Bound states of the static Gaussian trap and Boltzmann-weighted thermal ensembles.

The eigensolver builds the Hamiltonian with the spectral (Fourier) kinetic
operator, restricted to a window around the trap center where the bound states
live, diagonalizes the dense Hermitian matrix, and embeds the eigenvectors into
the full grid. The window kinetic matrix is a real symmetric circulant (first
column ifft(hbar k^2 / 2m)), so the restricted operator matches the
propagator's discrete Hamiltonian exactly when the window covers the grid.

Eigenstates are deterministic up to the fixed phase convention: the
largest-magnitude amplitude is made real and positive.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, GridMismatchError
from .grid import SpatialGrid, WaveFunction
from .trap import TrapParams, potential_on_grid
from .units import UnitSystem


@dataclass
class TrapSpectrum:
    """Sorted bound eigenpairs of a static trap."""

    energies: np.ndarray
    states: list[WaveFunction]
    trap: TrapParams
    units: UnitSystem
    truncated: bool = False

    @property
    def n_states(self) -> int:
        return len(self.states)

    def gap_timescale(self) -> float:
        """tau = 2 pi / (E_1 - E_0) in us; FoM minima repeat every 2 tau."""
        if self.n_states < 2:
            raise ConfigurationError("need at least two states for the gap timescale")
        return 2.0 * math.pi / float(self.energies[1] - self.energies[0])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "energy_rad_us", "energy_uK"])
            for i, e in enumerate(self.energies):
                writer.writerow([i, f"{e:.12g}", f"{self.units.energy_to_uK(e):.12g}"])


@dataclass
class ThermalEnsemble:
    """Boltzmann-weighted trap eigenstates truncated at N_s states."""

    weights: np.ndarray
    states: list[WaveFunction]
    temperature_uK: float

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def grid(self) -> SpatialGrid:
        return self.states[0].grid


def kinetic_circulant(grid_dx: float, n: int, kinetic_prefactor: float) -> np.ndarray:
    """Dense spectral kinetic matrix (hbar^2 k^2 / 2m with hbar=1) on n points."""
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=grid_dx)
    first_col = np.fft.ifft(kinetic_prefactor * k**2).real
    return scipy.linalg.circulant(first_col)


def apply_hamiltonian(psi: WaveFunction, potential: np.ndarray, units: UnitSystem) -> np.ndarray:
    """H psi with the full-grid spectral kinetic operator; used for residual checks."""
    k2 = psi.grid.k**2
    kinetic = np.fft.ifft(units.kinetic_prefactor * k2 * np.fft.fft(psi.amplitudes))
    return kinetic + potential * psi.amplitudes


def _window_indices(grid: SpatialGrid, trap: TrapParams, units: UnitSystem, n_states: int):
    omega = trap.harmonic_frequency(units)
    x0 = math.sqrt(1.0 / (units.mass_internal * omega))
    half = max(3.0 * trap.waist_um, 8.0 * x0 * math.sqrt(2.0 * n_states + 1.0))
    i_lo = int(np.searchsorted(grid.x, trap.center_um - half))
    i_hi = int(np.searchsorted(grid.x, trap.center_um + half))
    i_lo = max(0, i_lo)
    i_hi = min(grid.n_points, max(i_hi, i_lo + 128))
    if i_hi - i_lo < 64:
        i_lo, i_hi = 0, grid.n_points
    return i_lo, i_hi


def solve_spectrum(
    trap: TrapParams, grid: SpatialGrid, units: UnitSystem, n_states: int
) -> TrapSpectrum:
    """Lowest n_states bound eigenpairs, sorted, orthonormal, phase-fixed.

    Raises ConfigurationError for repulsive traps or a grid too coarse to
    resolve the waist (w0 < 10 dx). If fewer bound states than requested
    exist, returns the truncated spectrum with a warning and truncated=True.
    """
    if trap.depth_mK >= 0:
        raise ConfigurationError("spectrum solve requires an attractive trap (depth < 0)")
    if trap.waist_um < 10.0 * grid.dx:
        raise ConfigurationError(
            f"grid does not resolve the trap: waist {trap.waist_um} um < 10 dx = {10 * grid.dx} um"
        )
    if n_states < 1:
        raise ConfigurationError("n_states must be >= 1")

    i_lo, i_hi = _window_indices(grid, trap, units, n_states)
    x_win = grid.x[i_lo:i_hi]
    v_win = potential_on_grid(trap, grid, units)[i_lo:i_hi]
    h = kinetic_circulant(grid.dx, x_win.size, units.kinetic_prefactor)
    h[np.diag_indices_from(h)] += v_win

    n_request = min(n_states, x_win.size - 1)
    energies, vectors = scipy.linalg.eigh(h, subset_by_index=[0, n_request - 1])

    bound = energies < 0.0
    truncated = int(np.count_nonzero(bound)) < n_states
    if truncated:
        warnings.warn(
            f"only {np.count_nonzero(bound)} bound states available, {n_states} requested",
            stacklevel=2,
        )
    energies = energies[bound]
    vectors = vectors[:, bound]

    states = []
    for i in range(energies.size):
        full = np.zeros(grid.n_points, dtype=np.complex128)
        full[i_lo:i_hi] = vectors[:, i] / math.sqrt(grid.dx)
        peak = int(np.argmax(np.abs(full)))
        if abs(full[peak]) > 0:
            full *= np.conj(full[peak]) / abs(full[peak])
        states.append(WaveFunction(grid, full).normalized())
    return TrapSpectrum(energies, states, trap, units, truncated=truncated)


def thermal_ensemble(spectrum: TrapSpectrum, temperature_uK: float, n_states: int) -> ThermalEnsemble:
    """Normalized Boltzmann weights over the n_states lowest bound states."""
    if temperature_uK <= 0:
        raise ConfigurationError("temperature must be positive")
    if n_states > spectrum.n_states:
        raise ConfigurationError(
            f"requested cutoff {n_states} exceeds the {spectrum.n_states} available bound states"
        )
    kt = spectrum.units.temperature_to_internal(temperature_uK)
    energies = spectrum.energies[:n_states]
    weights = np.exp(-(energies - energies[0]) / kt)
    weights /= weights.sum()
    return ThermalEnsemble(weights, spectrum.states[:n_states], temperature_uK)


def cutoff_fidelity(p: np.ndarray, q: np.ndarray) -> float:
    """Fidelity (sum_i sqrt(p_i q_i))^2 between weight vectors, q the larger cutoff."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if q.size < p.size:
        raise ConfigurationError("reference cutoff must extend the smaller cutoff")
    return float(np.sum(np.sqrt(p * q[: p.size])) ** 2)


def shift_state(psi: WaveFunction, dr: float, mass_tolerance: float = 1e-12) -> WaveFunction:
    """Translate by dr via the spectral shift theorem (exact for band-limited states).

    Raises ConfigurationError if the translation would wrap probability mass
    (> mass_tolerance, i.e. amplitudes above ~1e-6) around the periodic grid.
    """
    grid = psi.grid
    n_wrap = int(math.ceil(abs(dr) / grid.dx))
    if n_wrap > 0:
        if n_wrap >= grid.n_points:
            raise ConfigurationError(f"shift {dr} um exceeds the grid extent")
        zone = psi.amplitudes[-n_wrap:] if dr > 0 else psi.amplitudes[:n_wrap]
        if grid.dx * float(np.sum(np.abs(zone) ** 2)) > mass_tolerance:
            raise ConfigurationError(
                f"shift by {dr} um pushes significant probability off-grid"
            )
    shifted = np.fft.ifft(np.fft.fft(psi.amplitudes) * np.exp(-1j * grid.k * dr))
    return WaveFunction(grid, shifted)


def shifted_ensemble(ensemble: ThermalEnsemble, dr: float) -> ThermalEnsemble:
    """Every state translated by dr; weights untouched."""
    states = [shift_state(s, dr) for s in ensemble.states]
    return ThermalEnsemble(ensemble.weights.copy(), states, ensemble.temperature_uK)
