"""Gaussian tweezer potential and the AOD frequency/position conversion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .grid import SpatialGrid
from .units import UnitSystem

#: AOD steering conversion: 3 um of trap displacement per MHz of drive frequency.
UM_PER_MHZ = 3.0


@dataclass(frozen=True)
class TrapParams:
    """Gaussian trap: depth in mK (negative = attractive), waist and center in um."""

    depth_mK: float = -1.0
    waist_um: float = 0.5
    center_um: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.depth_mK) or not np.isfinite(self.waist_um):
            raise ConfigurationError("trap parameters must be finite")
        if self.waist_um <= 0:
            raise ConfigurationError(f"waist must be positive, got {self.waist_um}")

    def harmonic_frequency(self, units: UnitSystem) -> float:
        """Small-oscillation angular frequency sqrt(4|U0| / (m w0^2)) in rad/us."""
        u0 = abs(units.depth_to_internal(self.depth_mK))
        return float(np.sqrt(4.0 * u0 / (units.mass_internal * self.waist_um**2)))


def potential_on_grid(
    params: TrapParams,
    grid: SpatialGrid,
    units: UnitSystem,
    center: float | None = None,
    depth_factor: float = 1.0,
    waist_factor: float = 1.0,
) -> np.ndarray:
    """Trap potential V(x) = U0 exp(-2 (x - r)^2 / w0^2) in rad/us.

    center overrides the trap's own center; depth_factor and waist_factor are
    the multiplicative noise factors (1.0 = clean trap).
    """
    r = params.center_um if center is None else center
    w = params.waist_um * waist_factor
    if w <= 0:
        raise ConfigurationError(f"effective waist must be positive, got {w}")
    u0 = units.depth_to_internal(params.depth_mK) * depth_factor
    return u0 * np.exp(-2.0 * (grid.x - r) ** 2 / w**2)


def aod_frequency_of(position_um):
    """Trap position in um to AOD drive frequency in MHz (3 um = 1 MHz, no offset)."""
    return np.asarray(position_um, dtype=float) / UM_PER_MHZ


def aod_position_of(frequency_MHz):
    """Inverse of aod_frequency_of."""
    return np.asarray(frequency_MHz, dtype=float) * UM_PER_MHZ
