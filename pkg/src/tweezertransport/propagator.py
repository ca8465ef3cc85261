"""Split-operator (Strang) evolution under the moving, possibly noisy trap.

One step applies half a potential phase, the full kinetic phase in momentum
space, and the second potential half. The trap trajectory (center, depth and
waist factors, position offset) is given on the n_steps+1 time gridpoints and
the potential is evaluated at the step midpoint (average of adjacent samples),
which keeps the splitting second order for time-dependent traps.

The whole thermal ensemble evolves under one plan as a (n_states, n_points)
batch: the potential phase is shared, FFTs are batched along the last axis.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError
from .grid import SpatialGrid, WaveFunction
from .noise import NoiseRealization, identity_realization
from .pulses import Pulse
from .spectrum import ThermalEnsemble
from .trap import TrapParams
from .units import UnitSystem

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass
class EvolutionPlan:
    """Per-step trap trajectory plus numerics for one evolution."""

    dt: float
    n_steps: int
    trap: TrapParams
    units: UnitSystem
    center: np.ndarray
    depth_factor: np.ndarray
    waist_factor: np.ndarray
    position_offset: np.ndarray
    record_observables: bool = False
    snapshot_stride: int = 0

    def __post_init__(self):
        if self.dt <= 0 or self.n_steps < 1:
            raise ConfigurationError("plan needs dt > 0 and n_steps >= 1")
        for name in ("center", "depth_factor", "waist_factor", "position_offset"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.n_steps + 1,):
                raise ConfigurationError(
                    f"{name} must have n_steps+1 = {self.n_steps + 1} entries, got {arr.shape}"
                )
            setattr(self, name, arr)

    @property
    def t_total(self) -> float:
        return self.dt * self.n_steps

    def reversed(self) -> "EvolutionPlan":
        """Same plan traversed backwards in time (for time-reversal checks)."""
        return EvolutionPlan(
            dt=self.dt,
            n_steps=self.n_steps,
            trap=self.trap,
            units=self.units,
            center=self.center[::-1].copy(),
            depth_factor=self.depth_factor[::-1].copy(),
            waist_factor=self.waist_factor[::-1].copy(),
            position_offset=self.position_offset[::-1].copy(),
            record_observables=self.record_observables,
            snapshot_stride=self.snapshot_stride,
        )


def make_plan(
    pulse: Pulse,
    trap: TrapParams,
    units: UnitSystem,
    dt: float,
    t_total: float | None = None,
    noise: NoiseRealization | None = None,
    record_observables: bool = False,
    snapshot_stride: int = 0,
) -> EvolutionPlan:
    """Assemble a plan from a pulse and an optional noise realization."""
    center = pulse.sample(dt, t_total)
    n_steps = len(center) - 1
    if noise is None:
        noise = identity_realization(dt, n_steps)
    if len(noise.depth_factor) != n_steps + 1:
        raise ConfigurationError(
            f"noise realization has {len(noise.depth_factor)} samples, plan needs {n_steps + 1}"
        )
    return EvolutionPlan(
        dt=dt,
        n_steps=n_steps,
        trap=trap,
        units=units,
        center=center + 0.0,
        depth_factor=noise.depth_factor,
        waist_factor=noise.waist_factor,
        position_offset=noise.position_offset,
        record_observables=record_observables,
        snapshot_stride=snapshot_stride,
    )


@dataclass
class Trajectory:
    """Per-step observables recorded during one evolution."""

    t: np.ndarray
    x_mean: np.ndarray
    k_mean: np.ndarray
    sigma_x: np.ndarray
    sigma_k: np.ndarray
    norm: np.ndarray
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_us", "x_mean_um", "k_mean_rad_um", "sigma_x_um", "sigma_k_rad_um", "norm"])
            for row in zip(self.t, self.x_mean, self.k_mean, self.sigma_x, self.sigma_k, self.norm):
                writer.writerow([f"{v:.12g}" for v in row])

    def write_snapshots_csv(self, path):
        """|psi(x)|^2 frames, one column per stored snapshot."""
        if not self.snapshots:
            raise ConfigurationError("no snapshots were recorded")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x_index"] + [f"t={t:.6g}" for t, _ in self.snapshots])
            frames = np.column_stack([np.abs(s) ** 2 for _, s in self.snapshots])
            for i, row in enumerate(frames):
                writer.writerow([i] + [f"{v:.10g}" for v in row])


class _Recorder:
    def __init__(self, grid: SpatialGrid, dt: float, n_steps: int, n_batch: int, stride: int):
        self.grid = grid
        self.dt = dt
        self.stride = stride
        shape = (n_batch, n_steps + 1)
        self.x_mean = np.empty(shape)
        self.k_mean = np.empty(shape)
        self.sigma_x = np.empty(shape)
        self.sigma_k = np.empty(shape)
        self.norm = np.empty(shape)
        self.snapshots: list[list[tuple[float, np.ndarray]]] = [[] for _ in range(n_batch)]

    def record(self, step: int, batch: np.ndarray):
        g = self.grid
        rho_x = np.abs(batch) ** 2 * g.dx
        norms = rho_x.sum(axis=1)
        xm = rho_x @ g.x / norms
        x2 = rho_x @ (g.x**2) / norms
        phi = np.fft.fft(batch, axis=1) * (g.dx / _SQRT_2PI)
        rho_k = np.abs(phi) ** 2 * g.dk
        knorm = rho_k.sum(axis=1)
        km = rho_k @ g.k / knorm
        k2 = rho_k @ (g.k**2) / knorm
        self.x_mean[:, step] = xm
        self.k_mean[:, step] = km
        self.sigma_x[:, step] = np.sqrt(np.maximum(x2 - xm**2, 0.0))
        self.sigma_k[:, step] = np.sqrt(np.maximum(k2 - km**2, 0.0))
        self.norm[:, step] = norms
        if self.stride and step % self.stride == 0:
            for i in range(batch.shape[0]):
                self.snapshots[i].append((step * self.dt, batch[i].copy()))

    def trajectory(self, i: int) -> Trajectory:
        t = self.dt * np.arange(self.x_mean.shape[1])
        return Trajectory(
            t,
            self.x_mean[i],
            self.k_mean[i],
            self.sigma_x[i],
            self.sigma_k[i],
            self.norm[i],
            self.snapshots[i],
        )


def _evolve_batch(batch: np.ndarray, grid: SpatialGrid, plan: EvolutionPlan, on_step=None):
    """Strang-evolve a (n_batch, n_points) array in place; on_step(j, batch) after step j.

    on_step is also called once with j=0 before stepping. Raises NumericalError
    with the step index if amplitudes stop being finite.
    """
    units = plan.units
    u0 = units.depth_to_internal(plan.trap.depth_mK)
    w0 = plan.trap.waist_um
    kin_phase = np.exp(-1j * units.kinetic_prefactor * grid.k**2 * plan.dt)
    x = grid.x
    mid = lambda arr, j: 0.5 * (arr[j] + arr[j + 1])

    if on_step is not None:
        on_step(0, batch)
    for j in range(plan.n_steps):
        r = mid(plan.center, j) + mid(plan.position_offset, j)
        w = w0 * mid(plan.waist_factor, j)
        v = (u0 * mid(plan.depth_factor, j)) * np.exp(-2.0 * (x - r) ** 2 / (w * w))
        half_phase = np.exp(-0.5j * plan.dt * v)
        batch *= half_phase
        batch_k = np.fft.fft(batch, axis=1)
        batch_k *= kin_phase
        batch[:] = np.fft.ifft(batch_k, axis=1)
        batch *= half_phase
        if on_step is not None:
            on_step(j + 1, batch)
        if not np.isfinite(batch[:, :: max(1, batch.shape[1] // 64)]).all():
            raise NumericalError(f"non-finite amplitudes at step {j + 1}")
    return batch


def evolve(psi0: WaveFunction, plan: EvolutionPlan) -> tuple[WaveFunction, Trajectory | None]:
    """Evolve a single state; returns the final state and, if recording, its trajectory."""
    states, trajectories = evolve_states([psi0], plan)
    return states[0], trajectories[0] if trajectories else None


def evolve_states(
    states: list[WaveFunction], plan: EvolutionPlan, on_step=None
) -> tuple[list[WaveFunction], list[Trajectory]]:
    """Evolve several states under one shared plan (batched FFTs)."""
    if not states:
        raise ConfigurationError("need at least one state")
    grid = states[0].grid
    for s in states[1:]:
        if not s.grid.same_as(grid):
            raise ConfigurationError("all ensemble members must share one grid")
    batch = np.stack([s.amplitudes for s in states]).astype(np.complex128)

    recorder = None
    if plan.record_observables:
        recorder = _Recorder(grid, plan.dt, plan.n_steps, batch.shape[0], plan.snapshot_stride)

    def hook(j, b):
        if recorder is not None:
            recorder.record(j, b)
        if on_step is not None:
            on_step(j, b)

    _evolve_batch(batch, grid, plan, on_step=hook if (recorder or on_step) else None)
    out = [WaveFunction(grid, batch[i].copy()) for i in range(batch.shape[0])]
    trajs = [recorder.trajectory(i) for i in range(batch.shape[0])] if recorder else []
    return out, trajs


def evolve_ensemble(
    ensemble: ThermalEnsemble, plan: EvolutionPlan, on_step=None
) -> tuple[list[WaveFunction], list[Trajectory]]:
    """Evolve every ensemble member under the identical plan; weights untouched."""
    return evolve_states(ensemble.states, plan, on_step=on_step)


def free_evolve(states: list[WaveFunction], units: UnitSystem, tau: float) -> list[WaveFunction]:
    """Exact kinetic-only evolution for tau (trap switched off)."""
    if tau < 0:
        raise ConfigurationError("free evolution time must be nonnegative")
    if not states:
        return []
    grid = states[0].grid
    phase = np.exp(-1j * units.kinetic_prefactor * grid.k**2 * tau)
    batch = np.stack([s.amplitudes for s in states])
    batch = np.fft.ifft(np.fft.fft(batch, axis=1) * phase, axis=1)
    return [WaveFunction(grid, batch[i]) for i in range(batch.shape[0])]
