"""Trap-center pulses: piecewise quadratic transport, sampled pulses, fitting.

Every pulse maps t in [0, t_p] to a trap center r(t) with r(0) = r_0 and
r(t_p) = r_f pinned exactly. Sampling beyond t_p holds the trap at r_f so the
post-transport averaging window sees a stationary trap. Analytic pulses cache
their dense samples per (dt, t_total) since the propagator and noise injection
consume per-step values anyway.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .trap import aod_frequency_of, aod_position_of


class Pulse:
    """Base class; subclasses implement evaluate() on [0, t_p]."""

    kind = "abstract"

    def __init__(self, r_0: float, r_f: float, t_p: float):
        if not np.isfinite([r_0, r_f, t_p]).all():
            raise ConfigurationError("pulse parameters must be finite")
        if t_p <= 0:
            raise ConfigurationError(f"pulse duration must be positive, got {t_p}")
        self.r_0 = float(r_0)
        self.r_f = float(r_f)
        self.t_p = float(t_p)
        self._sample_cache: dict[tuple[float, float], np.ndarray] = {}

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, dt: float, t_total: float | None = None) -> np.ndarray:
        """Trap center on the propagation time grid 0, dt, ..., round(t_total/dt)*dt.

        Values for t > t_p are held at r_f. The returned array has
        round(t_total/dt) + 1 entries and is cached per (dt, t_total).
        """
        if dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        t_total = self.t_p if t_total is None else float(t_total)
        if t_total < self.t_p - 1e-12:
            raise ConfigurationError(
                f"t_total={t_total} must cover the pulse duration t_p={self.t_p}"
            )
        key = (float(dt), t_total)
        cached = self._sample_cache.get(key)
        if cached is not None:
            return cached
        n_steps = int(round(t_total / dt))
        t = dt * np.arange(n_steps + 1)
        values = np.where(
            t >= self.t_p, self.r_f, self.evaluate(np.minimum(t, self.t_p))
        ).astype(float)
        values[0] = self.r_0
        values[t >= self.t_p] = self.r_f
        values.setflags(write=False)
        self._sample_cache[key] = values
        return values

    def reversed(self) -> "Pulse":
        """Time-reversed pulse r(t_p - t), used for backward transports."""
        n = 2048
        t = np.linspace(0.0, self.t_p, n + 1)
        return SampledPulse(t, self.evaluate(self.t_p - t))

    def write_csv(self, path, dt: float, t_total: float | None = None, as_aod: bool = False):
        """Two-column export: (t [us], r [um]) or (t [us], f [MHz]) with as_aod."""
        values = self.sample(dt, t_total)
        t = dt * np.arange(len(values))
        header = ["t_us", "f_MHz" if as_aod else "r_um"]
        col = aod_frequency_of(values) if as_aod else values
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in zip(t, col):
                writer.writerow([f"{row[0]:.10g}", f"{row[1]:.12g}"])


class PiecewiseQuadraticPulse(Pulse):
    """Two-segment constant-acceleration ramp from r_0 to r_f over t_p."""

    kind = "piecewise-quadratic"

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        a = 2.0 * (self.r_f - self.r_0) / self.t_p**2
        first = self.r_0 + a * t**2
        second = self.r_f - a * (t - self.t_p) ** 2
        return np.where(t <= self.t_p / 2.0, first, second)

    def reversed(self) -> "PiecewiseQuadraticPulse":
        # r(t_p - t) is again piecewise quadratic, with the endpoints swapped.
        return PiecewiseQuadraticPulse(self.r_f, self.r_0, self.t_p)


class SampledPulse(Pulse):
    """Pulse defined by dense samples; evaluation interpolates linearly."""

    kind = "sampled"

    def __init__(self, times: np.ndarray, values: np.ndarray):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ConfigurationError("sampled pulse needs matching 1D time/value arrays")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ConfigurationError("sample times must start at 0 and increase")
        super().__init__(values[0], values[-1], times[-1])
        self.times = times
        self.values = values

    def evaluate(self, t):
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)

    def reversed(self) -> "SampledPulse":
        return SampledPulse(self.times[-1] - self.times[::-1], self.values[::-1])


class DcrabPulse(SampledPulse):
    """Optimizer output: dense samples plus the coefficients that produced them."""

    kind = "dcrab-parameterized"

    def __init__(self, times, values, coefficients=None, frequencies=None):
        super().__init__(times, values)
        self.coefficients = None if coefficients is None else np.asarray(coefficients, float)
        self.frequencies = None if frequencies is None else np.asarray(frequencies, float)


def piecewise_quadratic(r_0: float, r_f: float, t_p: float) -> PiecewiseQuadraticPulse:
    """Standard AWG-compatible transport ramp."""
    return PiecewiseQuadraticPulse(r_0, r_f, t_p)


def read_pulse_csv(path, as_aod: bool = False) -> SampledPulse:
    """Read a two-column (t, r) or (t, f_MHz) file written by write_csv."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigurationError(f"{path}: expected two columns (t, value)")
    values = data[:, 1]
    if as_aod:
        values = aod_position_of(values)
    return SampledPulse(data[:, 0], values)


def fit_piecewise_quadratic(pulse: Pulse, segment_length: float, dt: float | None = None) -> SampledPulse:
    """Least-squares piecewise-quadratic fit with C0 knots and pinned endpoints.

    Each segment spans segment_length (the last one may be shorter); a segment
    longer than t_p degenerates to a single-segment fit. Continuity at the
    knots and the r(0)=r_0, r(t_p)=r_f pinning are built into the
    parameterization: on segment m the fit is the linear interpolation between
    knot values plus q_m * (t - tau_{m-1}) (t - tau_m), which vanishes at both
    knots.
    """
    if segment_length <= 0:
        raise ConfigurationError("segment_length must be positive")
    if isinstance(pulse, SampledPulse):
        t = pulse.times
        y = pulse.values
    else:
        if dt is None:
            dt = pulse.t_p / 2000.0
        y = pulse.sample(dt)
        t = dt * np.arange(len(y))

    t_p = pulse.t_p
    n_seg = max(1, int(np.ceil(t_p / segment_length - 1e-12)))
    knots = np.minimum(segment_length * np.arange(n_seg + 1), t_p)
    knots[-1] = t_p

    seg = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, n_seg - 1)
    t0 = knots[seg]
    t1 = knots[seg + 1]
    u = (t - t0) / (t1 - t0)

    # Unknowns: interior knot values v_1..v_{n_seg-1}, then curvatures q_1..q_n_seg.
    n_interior = n_seg - 1
    design = np.zeros((t.size, n_interior + n_seg))
    rhs = y.astype(float).copy()
    knot_vals_fixed = {0: pulse.r_0, n_seg: pulse.r_f}
    for m in range(n_seg):
        rows = seg == m
        for kn, weight in ((m, 1.0 - u[rows]), (m + 1, u[rows])):
            if kn in knot_vals_fixed:
                rhs[rows] -= weight * knot_vals_fixed[kn]
            else:
                design[rows, kn - 1] += weight
        design[rows, n_interior + m] = (t[rows] - t0[rows]) * (t[rows] - t1[rows])

    theta, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    v = np.concatenate(([pulse.r_0], theta[:n_interior], [pulse.r_f]))
    q = theta[n_interior:]
    fitted = v[seg] * (1.0 - u) + v[seg + 1] * u + q[seg] * (t - t0) * (t - t1)
    fitted[0] = pulse.r_0
    fitted[-1] = pulse.r_f
    return SampledPulse(t, fitted)
