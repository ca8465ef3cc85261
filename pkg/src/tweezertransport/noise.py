"""Stochastic trap noise: laser intensity RIN plus sinusoidal depth/waist/position terms.

Depth and waist noise are multiplicative factors, position noise is an additive
offset in um. A realization holds one value per propagation time gridpoint and
is fully determined by (spec, realization index): the generator is seeded from
the spec seed and the index, so ensembles can be produced in any order or in
parallel and stay reproducible.

The RIN series is synthesized by frequency-domain shaping: a Hermitian complex
Gaussian spectrum scaled to the one-sided power law S(f) = A_L / sqrt(f)
(f in Hz), DC bin zeroed, inverse transformed.

Position noise at 50-150 MHz sits far above the Nyquist frequency of the
production time step; the sinusoid is evaluated analytically at the sample
times, i.e. deliberately aliased. Refine dt in the config for noise runs if
the sub-step physics matters.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError

#: MHz and 1/us coincide numerically; frequencies below are stored in MHz.
_MHZ_TO_HZ = 1e6


@dataclass(frozen=True)
class NoiseSpec:
    """Amplitudes, frequency bands (MHz) and seed for one noise model."""

    rin_amplitude: float = 1e-11
    depth_low_amp: float = 0.01
    depth_low_band: tuple[float, float] = (0.0, 0.1)
    depth_high_amp: float = 0.05
    depth_high_band: tuple[float, float] = (0.1, 1.0)
    waist_amp: float = 0.01
    waist_freq: float = 1.0 / 6.0
    position_amp_um: float = 0.01
    position_band: tuple[float, float] = (50.0, 150.0)
    seed: int = 0
    min_depth_factor: float = 0.01

    def __post_init__(self):
        amps = (
            self.rin_amplitude,
            self.depth_low_amp,
            self.depth_high_amp,
            self.waist_amp,
            self.position_amp_um,
        )
        if any(a < 0 for a in amps):
            raise ConfigurationError("noise amplitudes must be nonnegative")
        for lo, hi in (self.depth_low_band, self.depth_high_band, self.position_band):
            if hi <= lo:
                raise ConfigurationError(f"empty frequency band ({lo}, {hi}]")

    @classmethod
    def disabled(cls, seed: int = 0) -> "NoiseSpec":
        return cls(
            rin_amplitude=0.0,
            depth_low_amp=0.0,
            depth_high_amp=0.0,
            waist_amp=0.0,
            position_amp_um=0.0,
            seed=seed,
        )

    def with_seed(self, seed: int) -> "NoiseSpec":
        return replace(self, seed=seed)


@dataclass
class NoiseRealization:
    """Per-timestep trap modifications: factors for depth/waist, offset for position."""

    dt: float
    depth_factor: np.ndarray
    waist_factor: np.ndarray
    position_offset: np.ndarray

    def write_csv(self, path):
        t = self.dt * np.arange(len(self.depth_factor))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_us", "depth_factor", "waist_factor", "position_offset_um"])
            for row in zip(t, self.depth_factor, self.waist_factor, self.position_offset):
                writer.writerow([f"{v:.12g}" for v in row])


def identity_realization(dt: float, n_steps: int) -> NoiseRealization:
    ones = np.ones(n_steps + 1)
    return NoiseRealization(dt, ones, ones.copy(), np.zeros(n_steps + 1))


def _rng_for(spec: NoiseSpec, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(index,)))


def sample_rin(
    spec: NoiseSpec, dt: float, n_samples: int, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Zero-mean real series whose one-sided PSD follows A_L / sqrt(f), f in Hz."""
    if n_samples < 2:
        raise ConfigurationError("need at least two samples")
    if spec.rin_amplitude == 0.0:
        return np.zeros(n_samples)
    rng = _rng_for(spec, 0) if rng is None else rng
    dt_s = dt * 1e-6
    freqs = np.fft.rfftfreq(n_samples, d=dt_s)  # Hz
    spectrum = np.zeros(freqs.size, dtype=np.complex128)
    psd = spec.rin_amplitude / np.sqrt(freqs[1:])
    scale = np.sqrt(psd * n_samples / (2.0 * dt_s))
    spectrum[1:] = scale * (
        rng.standard_normal(freqs.size - 1) + 1j * rng.standard_normal(freqs.size - 1)
    ) / np.sqrt(2.0)
    if n_samples % 2 == 0:
        spectrum[-1] = spectrum[-1].real * np.sqrt(2.0)  # Nyquist bin must be real
    return np.fft.irfft(spectrum, n=n_samples)


def _sinusoid(rng, t, amplitude, band):
    freq = band[0] + (band[1] - band[0]) * rng.uniform()
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return amplitude * np.sin(2.0 * np.pi * freq * t + phase)


def sample_realization(spec: NoiseSpec, dt: float, n_steps: int, index: int = 0) -> NoiseRealization:
    """Draw one noise realization on the n_steps+1 time gridpoints.

    Sinusoid frequencies and phases are redrawn per realization; the depth
    factor combines the RIN series with the two sinusoidal bands and is clamped
    to min_depth_factor so the trap never flips sign.
    """
    if n_steps < 1:
        raise ConfigurationError("need at least one step")
    rng = _rng_for(spec, index)
    t = dt * np.arange(n_steps + 1)

    depth = sample_rin(spec, dt, n_steps + 1, rng=rng)
    depth += _sinusoid(rng, t, spec.depth_low_amp, spec.depth_low_band)
    depth += _sinusoid(rng, t, spec.depth_high_amp, spec.depth_high_band)

    waist = _sinusoid(rng, t, spec.waist_amp, (spec.waist_freq, spec.waist_freq))
    position = _sinusoid(rng, t, spec.position_amp_um, spec.position_band)

    depth_factor = np.maximum(1.0 + depth, spec.min_depth_factor)
    return NoiseRealization(dt, depth_factor, 1.0 + waist, position)
