"""Dressed chopped-random-basis optimization of the trap-center pulse.

Each superiteration draws a fresh randomized sinc basis, multiplies it by an
envelope that vanishes at t=0 and t=t_p (so every candidate keeps the pulse
endpoints exactly), and runs a derivative-free Nelder-Mead search over the
coefficients (c_0, c_1, ..., c_Nc). c_0 scales the correction accumulated by
previous superiterations on top of the initial guess, so the starting point
(1, 0, ..., 0) reproduces the best pulse found so far and the best figure of
merit can only improve.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigurationError
from .pulses import DcrabPulse, Pulse, SampledPulse, fit_piecewise_quadratic


@dataclass(frozen=True)
class DcrabConfig:
    """Budgets, basis choice and inner-search tolerances."""

    n_superiterations: int = 30
    max_total_evals: int = 5000
    n_coeffs: int | None = None  # None: t_p/10 rounded for t_p >= 20 us, else 4
    basis: str = "sinc"
    f_max: float = 1.0  # MHz; basis frequencies drawn uniformly in (0, f_max]
    seed: int = 0
    # Initial simplex spread on c_i, in um. Improving corrections live at the
    # wavepacket-width scale (~1e-3 um); a much larger spread starts the
    # simplex deep in the J ~ 1 regime and the search cannot feel gradients.
    coeff_spread: float = 0.003
    c0_spread: float = 1.0  # initial simplex spread on c_0
    stall_evals: int = 50  # plateau window once a round has improved
    stall_rtol: float = 1e-4
    explore_evals: int = 300  # give up on a basis that never improves within this
    stop_below: float | None = None  # optional early exit once the FoM beats this
    constraint: str = "none"  # "none" | "pw-quadratic-10us"
    segment_length: float = 10.0

    def __post_init__(self):
        if self.f_max <= 0:
            raise ConfigurationError("frequency band must be nonempty (f_max > 0)")
        if self.n_coeffs is not None and self.n_coeffs < 1:
            raise ConfigurationError("need at least one basis coefficient")
        if self.basis not in ("sinc", "fourier"):
            raise ConfigurationError(f"unknown basis {self.basis!r}")
        if self.constraint not in ("none", "pw-quadratic-10us"):
            raise ConfigurationError(f"unknown constraint mode {self.constraint!r}")

    def coeffs_for(self, t_p: float) -> int:
        if self.n_coeffs is not None:
            return self.n_coeffs
        return int(round(t_p / 10.0)) if t_p >= 20.0 else 4


@dataclass
class OptimizationRecord:
    """Per-evaluation FoM trace, per-superiteration bests, and the final pulse."""

    evaluations: list[float]
    superiteration_best: list[tuple[int, float]]
    best_pulse: Pulse
    best_fom: float
    initial_fom: float
    n_evals: int
    stop_reason: str

    def write_evals_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eval_index", "fom"])
            for i, f in enumerate(self.evaluations):
                writer.writerow([i, f"{f:.12g}"])

    def write_superiterations_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["superiteration", "best_fom"])
            for j, f in self.superiteration_best:
                writer.writerow([j, f"{f:.12g}"])


def make_basis(
    j: int,
    n_coeffs: int,
    t_p: float,
    times: np.ndarray,
    f_max: float,
    rng: np.random.Generator,
    basis: str = "sinc",
) -> tuple[np.ndarray, np.ndarray]:
    """Randomized basis rows on the given time grid, boundary envelope included.

    Returns (elements, frequencies) with elements of shape (n_coeffs, len(times)).
    Each element vanishes at t=0 and t=t_p through the sin^2(pi t / t_p)
    envelope, preserving the pulse endpoints for any coefficients.

    Sinc elements sinc(2 pi f_i (t - tau_i)) draw both the frequency and the
    center time at random. A fixed center at t_p/2 would make every element
    even about the midpoint, which decouples at first order from the odd
    residual error a symmetric guess pulse leaves behind.
    """
    if f_max <= 0:
        raise ConfigurationError("frequency band must be nonempty")
    freqs = f_max * (1.0 - rng.uniform(size=n_coeffs))  # uniform in (0, f_max]
    centers = rng.uniform(0.0, t_p, size=n_coeffs)
    envelope = np.sin(np.pi * times / t_p) ** 2
    elements = np.empty((n_coeffs, times.size))
    for i, f in enumerate(freqs):
        if basis == "sinc":
            arg = 2.0 * np.pi * f * (times - centers[i])
            elements[i] = envelope * np.sinc(arg / np.pi)  # sin(arg)/arg
        else:
            phase = rng.uniform(0.0, 2.0 * np.pi)
            elements[i] = envelope * np.sin(2.0 * np.pi * f * times + phase)
    return elements, freqs


class _StopSearch(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class _Bookkeeper:
    """Counts evaluations, tracks the monotone best, raises on budget/stall/target."""

    def __init__(self, config: DcrabConfig):
        self.config = config
        self.evaluations: list[float] = []
        self.best_fom = math.inf
        self.best_values: np.ndarray | None = None
        self.round_start = 0
        self.round_improved_at: int | None = None

    def start_round(self):
        self.round_start = len(self.evaluations)
        self.round_improved_at = None

    def __call__(self, fom_value: float, values: np.ndarray):
        if not np.isfinite(fom_value):
            raise ConfigurationError("figure of merit returned a non-finite value")
        self.evaluations.append(float(fom_value))
        if fom_value < self.best_fom:
            self.best_fom = float(fom_value)
            self.best_values = values.copy()
            self.round_improved_at = len(self.evaluations)
        if self.config.stop_below is not None and self.best_fom < self.config.stop_below:
            raise _StopSearch("target")
        if len(self.evaluations) >= self.config.max_total_evals:
            raise _StopSearch("budget")

    def stalled(self) -> bool:
        """A round stalls once it stops improving.

        Before the first improvement of the round the budget is explore_evals;
        afterwards the round ends when the best figure of merit moved by less
        than stall_rtol (relatively) over the last stall_evals evaluations.
        """
        n = len(self.evaluations)
        if self.round_improved_at is None:
            return n - self.round_start >= self.config.explore_evals
        w = self.config.stall_evals
        if n - self.round_improved_at < w:
            return False
        cut = n - w
        best_then = min(self.evaluations[:cut]) if cut > 0 else math.inf
        if not math.isfinite(best_then):
            return False
        return (best_then - self.best_fom) < self.config.stall_rtol * max(abs(best_then), 1e-300)


def constrain_pulse(pulse: Pulse, mode: str, segment_length: float = 10.0) -> Pulse:
    """Apply the pulse-shape constraint used inside the optimization loop."""
    if mode == "none":
        return pulse
    if mode == "pw-quadratic-10us":
        return fit_piecewise_quadratic(pulse, segment_length)
    raise ConfigurationError(f"unknown constraint mode {mode!r}")


def optimize(initial: Pulse, fom, config: DcrabConfig, dt: float) -> OptimizationRecord:
    """Minimize fom(pulse) over dressed randomized corrections of the initial pulse.

    fom must return a finite float for every admissible pulse. The search runs
    config.n_superiterations rounds (fresh basis each), shares the evaluation
    budget across rounds, and accepts a candidate only if it improves the best
    figure of merit, so the best-so-far sequence is nonincreasing.
    """
    rng = np.random.default_rng(config.seed)
    n_grid = int(round(initial.t_p / dt))
    times = dt * np.arange(n_grid + 1)
    guess = np.asarray(initial.sample(dt, initial.t_p), dtype=float)

    def build_pulse(correction: np.ndarray) -> Pulse:
        # The shape constraint applies to the correction, which vanishes at
        # both endpoints: the guess pulse is already generator-representable,
        # and fitting the full candidate would wreck it whenever its own
        # breakpoints miss the segment knots (a quadratic-ramp guess distorts
        # by ~0.1 um, far beyond the um-scale sensitivity of the transport).
        if config.constraint != "none" and np.any(correction):
            fitted = constrain_pulse(
                SampledPulse(times, correction), config.constraint, config.segment_length
            )
            correction = np.asarray(fitted.sample(dt, initial.t_p), dtype=float)
        values = guess + correction
        values[0] = initial.r_0
        values[-1] = initial.r_f
        return SampledPulse(times, values)

    book = _Bookkeeper(config)
    stop_reason = "superiterations"
    correction = np.zeros_like(guess)
    superiteration_best: list[tuple[int, float]] = []

    try:
        book(fom(initial), correction)  # the guess is admissible: its correction is zero
        for j in range(1, config.n_superiterations + 1):
            n_c = config.coeffs_for(initial.t_p)
            elements, _ = make_basis(j, n_c, initial.t_p, times, config.f_max, rng, config.basis)
            base_correction = correction
            # The dressing coefficient c_0 only matters once a previous round
            # accumulated a correction; round one searches the raw coefficients.
            with_c0 = bool(np.any(base_correction))
            book.start_round()

            def objective(c):
                if with_c0:
                    corr = c[0] * base_correction + c[1:] @ elements
                else:
                    corr = c @ elements
                value = fom(build_pulse(corr))
                book(value, corr)
                if book.stalled():
                    raise _StopSearch("stall")
                return value

            dim = n_c + 1 if with_c0 else n_c
            x0 = np.zeros(dim)
            spreads = [config.coeff_spread] * n_c
            if with_c0:
                x0[0] = 1.0
                spreads = [config.c0_spread] + spreads
            simplex = np.vstack([x0] + [x0 + s * e for s, e in zip(spreads, np.eye(dim))])
            remaining = config.max_total_evals - len(book.evaluations)
            if remaining <= dim + 2:
                stop_reason = "budget"
                break
            try:
                minimize(
                    objective,
                    x0,
                    method="Nelder-Mead",
                    options={
                        "initial_simplex": simplex,
                        "maxfev": remaining,
                        "xatol": 1e-4,
                        "fatol": 1e-12,
                    },
                )
            except _StopSearch as stop:
                if stop.reason in ("budget", "target"):
                    superiteration_best.append((j, book.best_fom))
                    raise
            correction = book.best_values if book.best_values is not None else correction
            superiteration_best.append((j, book.best_fom))
    except _StopSearch as stop:
        stop_reason = stop.reason

    best_correction = book.best_values if book.best_values is not None else correction
    best_pulse = build_pulse(best_correction)
    final_values = np.asarray(best_pulse.sample(dt, initial.t_p), dtype=float)
    best_pulse = DcrabPulse(times, final_values)

    return OptimizationRecord(
        evaluations=book.evaluations,
        superiteration_best=superiteration_best,
        best_pulse=best_pulse,
        best_fom=book.best_fom,
        initial_fom=book.evaluations[0] if book.evaluations else math.inf,
        n_evals=len(book.evaluations),
        stop_reason=stop_reason,
    )
