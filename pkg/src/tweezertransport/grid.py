"""Uniform 1D position grid, its conjugate momentum grid, and wavefunctions.

The grid follows the periodic FFT convention: n_points samples with spacing
dx = (x_max - x_min) / n_points, the right endpoint excluded. Momentum values
use the standard wraparound ordering of numpy.fft.fftfreq and span
[-pi/dx, pi/dx) with spacing 2*pi/(x_max - x_min).

Momentum-space amplitudes are scaled so that both representations carry unit
norm: phi(k) = FFT(psi) * dx / sqrt(2 pi), sum |phi|^2 dk = sum |psi|^2 dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, GridMismatchError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SpatialGrid:
    """Immutable uniform position grid with its conjugate momentum grid."""

    x_min: float
    x_max: float
    n_points: int
    dx: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False)
    k: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ConfigurationError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ConfigurationError(f"x_max={self.x_max} must exceed x_min={self.x_min}")
        if self.n_points < 16 or self.n_points % 2 != 0:
            raise ConfigurationError(
                f"n_points={self.n_points} must be an even integer >= 16"
            )
        dx = (self.x_max - self.x_min) / self.n_points
        x = self.x_min + dx * np.arange(self.n_points)
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=dx)
        for arr in (x, k):
            arr.setflags(write=False)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "k", k)

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / (self.x_max - self.x_min)

    @property
    def extent(self) -> float:
        return self.x_max - self.x_min

    def same_as(self, other: "SpatialGrid") -> bool:
        return (
            self.n_points == other.n_points
            and self.x_min == other.x_min
            and self.x_max == other.x_max
        )


def make_grid(x_min: float, x_max: float, n_points: int) -> SpatialGrid:
    """Build an immutable grid; raises ConfigurationError on invalid input."""
    return SpatialGrid(x_min=x_min, x_max=x_max, n_points=int(n_points))


@dataclass
class WaveFunction:
    """Complex amplitudes on a SpatialGrid, unit-normalized in the grid inner product."""

    grid: SpatialGrid
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"amplitude vector of length {self.amplitudes.shape} does not match "
                f"grid with {self.grid.n_points} points"
            )

    def norm(self) -> float:
        return float(self.grid.dx * np.sum(np.abs(self.amplitudes) ** 2))

    def normalized(self) -> "WaveFunction":
        n = self.norm()
        if n <= 0.0 or not np.isfinite(n):
            raise ConfigurationError(f"cannot normalize wavefunction with norm {n}")
        return WaveFunction(self.grid, self.amplitudes / math.sqrt(n))

    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def position_moments(self) -> tuple[float, float]:
        """(<x>, sigma_x) from the position density."""
        rho = self.density() * self.grid.dx
        mean = float(np.dot(self.grid.x, rho))
        var = float(np.dot((self.grid.x - mean) ** 2, rho))
        return mean, math.sqrt(max(var, 0.0))

    def momentum_moments(self) -> tuple[float, float]:
        """(<k>, sigma_k) from the momentum density."""
        phi = to_momentum(self)
        rho = np.abs(phi) ** 2 * self.grid.dk
        mean = float(np.dot(self.grid.k, rho))
        var = float(np.dot((self.grid.k - mean) ** 2, rho))
        return mean, math.sqrt(max(var, 0.0))


def to_momentum(psi: WaveFunction) -> np.ndarray:
    """Momentum-space amplitudes phi(k) in wraparound (fftfreq) order."""
    return np.fft.fft(psi.amplitudes) * (psi.grid.dx / _SQRT_2PI)


def from_momentum(phi: np.ndarray, grid: SpatialGrid) -> WaveFunction:
    """Inverse of to_momentum."""
    amps = np.fft.ifft(np.asarray(phi, dtype=np.complex128) * (_SQRT_2PI / grid.dx))
    return WaveFunction(grid, amps)


def inner_product(psi: WaveFunction, phi: WaveFunction) -> complex:
    """dx * sum conj(psi) * phi; raises GridMismatchError for different grids."""
    if not psi.grid.same_as(phi.grid):
        raise GridMismatchError("wavefunctions live on different grids")
    return complex(psi.grid.dx * np.vdot(psi.amplitudes, phi.amplitudes))


def gaussian_packet(grid: SpatialGrid, x0: float, sigma: float, k0: float = 0.0) -> WaveFunction:
    """Normalized Gaussian packet with position spread sigma and mean momentum k0."""
    if sigma <= 0:
        raise ConfigurationError("sigma must be positive")
    amps = np.exp(-((grid.x - x0) ** 2) / (4.0 * sigma**2) + 1j * k0 * grid.x)
    return WaveFunction(grid, amps).normalized()
