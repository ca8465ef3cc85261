"""Run configuration: nested JSON with strict keys, defaults, and validation.

Units in the config are experiment-flavored (um, us, mK, uK, MHz); everything
is converted once inside the physics layer. Unknown keys are hard errors so a
typo never silently falls back to a default.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .dcrab import DcrabConfig
from .errors import ConfigurationError
from .experiments import Problem
from .noise import NoiseSpec
from .units import SR88_MASS_KG, UnitSystem


@dataclass
class PhysicsConfig:
    mass_kg: float = SR88_MASS_KG
    depth_mK: float = -1.0
    waist_um: float = 0.5
    distance_um: float = 3.0
    temperatures_uK: list[float] = field(default_factory=lambda: [1.0])
    n_states: int = 8


@dataclass
class NumericsConfig:
    dt_us: float = 0.1
    dx_um: float = 0.002
    extent_um: float = 10.0


@dataclass
class PulseConfig:
    kind: str = "pq"
    t_p_us: float = 20.0
    t_c_us: float = 10.0
    t_p_grid: list[float] | None = None


@dataclass
class OptimizerConfig:
    n_superiterations: int = 30
    max_total_evals: int = 5000
    n_coeffs: int | None = None
    basis: str = "sinc"
    f_max_MHz: float = 1.0
    coeff_spread: float = 0.003
    c0_spread: float = 1.0
    stall_evals: int = 50
    stall_rtol: float = 1e-4
    explore_evals: int = 300
    stop_below: float | None = None
    constraint: str = "none"
    segment_length_us: float = 10.0

    def to_dcrab(self, seed: int) -> DcrabConfig:
        return DcrabConfig(
            n_superiterations=self.n_superiterations,
            max_total_evals=self.max_total_evals,
            n_coeffs=self.n_coeffs,
            basis=self.basis,
            f_max=self.f_max_MHz,
            seed=seed,
            coeff_spread=self.coeff_spread,
            c0_spread=self.c0_spread,
            stall_evals=self.stall_evals,
            stall_rtol=self.stall_rtol,
            explore_evals=self.explore_evals,
            stop_below=self.stop_below,
            constraint=self.constraint,
            segment_length=self.segment_length_us,
        )


@dataclass
class NoiseConfig:
    enabled: bool = False
    n_runs: int = 100
    rin_amplitude: float = 1e-11
    depth_low_amp: float = 0.01
    depth_low_band_MHz: list[float] = field(default_factory=lambda: [0.0, 0.1])
    depth_high_amp: float = 0.05
    depth_high_band_MHz: list[float] = field(default_factory=lambda: [0.1, 1.0])
    waist_amp: float = 0.01
    waist_freq_MHz: float = 1.0 / 6.0
    position_amp_um: float = 0.01
    position_band_MHz: list[float] = field(default_factory=lambda: [50.0, 150.0])

    def to_spec(self, seed: int) -> NoiseSpec:
        return NoiseSpec(
            rin_amplitude=self.rin_amplitude,
            depth_low_amp=self.depth_low_amp,
            depth_low_band=tuple(self.depth_low_band_MHz),
            depth_high_amp=self.depth_high_amp,
            depth_high_band=tuple(self.depth_high_band_MHz),
            waist_amp=self.waist_amp,
            waist_freq=self.waist_freq_MHz,
            position_amp_um=self.position_amp_um,
            position_band=tuple(self.position_band_MHz),
            seed=seed,
        )


@dataclass
class ExperimentConfig:
    threshold: float = 1e-2
    n_transports: list[int] = field(default_factory=lambda: [1, 41])
    tau_rc_max_us: float = 20.0
    tau_rc_step_us: float = 1.0
    n_shots: int = 500
    distances_um: list[float] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6, 7, 8])
    property: str = "dt"
    convergence_t_p_us: float = 30.0
    release_time_us: float = 60.0


@dataclass
class RunConfig:
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output_dir: str = "runs"
    seed: int = 0
    workers: int | None = None  # None: one worker per available core

    def problem(self, temperature_uK: float | None = None) -> Problem:
        return Problem(
            depth_mK=self.physics.depth_mK,
            waist_um=self.physics.waist_um,
            distance_um=self.physics.distance_um,
            temperature_uK=temperature_uK
            if temperature_uK is not None
            else self.physics.temperatures_uK[0],
            n_states=self.physics.n_states,
            dt_us=self.numerics.dt_us,
            dx_um=self.numerics.dx_um,
            extent_um=self.numerics.extent_um,
            t_c_us=self.pulse.t_c_us,
            mass_kg=self.physics.mass_kg,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _from_dict(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigurationError(f"config section {path or 'root'} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(
            f"unknown config key(s) {sorted(unknown)} in section {path or 'root'}"
        )
    kwargs = {f.name: data[f.name] for f in dataclasses.fields(cls) if f.name in data}
    return cls(**kwargs)


_SECTIONS = {
    "physics": PhysicsConfig,
    "numerics": NumericsConfig,
    "pulse": PulseConfig,
    "optimizer": OptimizerConfig,
    "noise": NoiseConfig,
    "experiment": ExperimentConfig,
}


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config root must be a JSON object")
    unknown = set(data) - set(_SECTIONS) - {"output_dir", "seed", "workers"}
    if unknown:
        raise ConfigurationError(f"unknown config key(s) {sorted(unknown)} at root")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _from_dict(cls, data[name], name)
    for scalar in ("output_dir", "seed", "workers"):
        if scalar in data:
            kwargs[scalar] = data[scalar]
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {p} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def validate(config: RunConfig) -> ValidationReport:
    """Physics/numerics consistency checks, split into errors and warnings."""
    report = ValidationReport()
    phys, num = config.physics, config.numerics
    err, warn = report.errors.append, report.warnings.append

    for name, value in (
        ("depth_mK", phys.depth_mK),
        ("waist_um", phys.waist_um),
        ("distance_um", phys.distance_um),
        ("dt_us", num.dt_us),
        ("dx_um", num.dx_um),
        ("extent_um", num.extent_um),
    ):
        if not math.isfinite(value):
            err(f"{name} must be finite, got {value}")
    if report.errors:
        return report

    if phys.depth_mK >= 0:
        err(f"depth_mK must be negative (attractive trap), got {phys.depth_mK}")
    if phys.waist_um < 10.0 * num.dx_um:
        err(
            f"grid does not resolve the trap: waist {phys.waist_um} um < 10 dx = {10 * num.dx_um} um"
        )
    if any(t <= 0 for t in phys.temperatures_uK):
        err("temperatures must be positive")

    x_min = (phys.distance_um - num.extent_um) / 2.0
    x_max = x_min + num.extent_um
    margin = max(1.0, 2.0 * phys.waist_um)
    if x_max < phys.distance_um + margin or x_min > 0.0 - margin:
        err(
            f"extent {num.extent_um} um cannot hold both trap positions 0 and "
            f"{phys.distance_um} um with a {margin} um margin (final state off-grid)"
        )

    if phys.depth_mK < 0 and phys.waist_um > 0:
        units = UnitSystem(phys.mass_kg)
        u0 = abs(units.depth_to_internal(phys.depth_mK))
        omega = math.sqrt(4.0 * u0 / (units.mass_internal * phys.waist_um**2))
        n_bound_estimate = int(u0 / omega)
        if phys.n_states > n_bound_estimate:
            err(
                f"n_states={phys.n_states} exceeds the ~{n_bound_estimate} bound states "
                "of this trap"
            )
        elif phys.n_states > n_bound_estimate // 2:
            warn(
                f"n_states={phys.n_states} is a large fraction of the ~{n_bound_estimate} "
                "bound states; high states may be poorly bound"
            )
        speed = 2.0 * phys.distance_um / config.pulse.t_p_us
        k_peak = speed / (2.0 * units.kinetic_prefactor)
        if k_peak > 0.8 * math.pi / num.dx_um:
            warn(
                f"peak transport momentum {k_peak:.0f} rad/um is close to the grid's "
                f"Nyquist momentum {math.pi / num.dx_um:.0f} rad/um; refine dx or slow the pulse"
            )
    if config.noise.enabled and config.noise.position_band_MHz[0] > 1.0 / (2.0 * num.dt_us):
        warn(
            "position noise band lies above the Nyquist frequency of dt; the sinusoid is "
            "evaluated at sample times (aliased) by design"
        )
    return report
