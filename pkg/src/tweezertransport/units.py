"""Internal unit system: micrometers, microseconds, hbar = 1.

All dynamics run in (um, us) with energies expressed as angular frequencies in
rad/us. Experiment-flavored inputs (trap depths in mK, temperatures in uK, AOD
frequencies in MHz) are converted once at the boundary; with these units the
relevant numbers stay O(1)-O(1e3), far from float trouble.
"""

from __future__ import annotations

from dataclasses import dataclass

import scipy.constants as const

#: Strontium-88 mass in kg.
SR88_MASS_KG = 1.46e-25

# 1 m^2/s = 1e12 um^2 / 1e6 us = 1e6 um^2/us
_M2_PER_S_TO_UM2_PER_US = 1e6


@dataclass(frozen=True)
class UnitSystem:
    """Conversions for a fixed atomic mass.

    The kinetic prefactor hbar/(2m) in um^2/us is the only place the mass
    enters the dynamics; Boltzmann conversions turn temperature-flavored
    energies into rad/us.
    """

    mass_kg: float = SR88_MASS_KG

    @property
    def kinetic_prefactor(self) -> float:
        """hbar / (2 m) in um^2/us (~3.61e-4 for Sr-88)."""
        return const.hbar / (2.0 * self.mass_kg) * _M2_PER_S_TO_UM2_PER_US

    @property
    def mass_internal(self) -> float:
        """Mass in internal units (hbar * us / um^2), i.e. 1 / (2 * kinetic_prefactor)."""
        return 1.0 / (2.0 * self.kinetic_prefactor)

    @property
    def kb_per_uK(self) -> float:
        """k_B * (1 uK) / hbar in rad/us (~0.131)."""
        return const.k / const.hbar * 1e-6 * 1e-6

    def depth_to_internal(self, depth_mK: float) -> float:
        """Trap depth quoted in mK to rad/us (k_B * depth / hbar)."""
        return depth_mK * 1e3 * self.kb_per_uK

    def temperature_to_internal(self, temperature_uK: float) -> float:
        """k_B T / hbar in rad/us for a temperature in uK."""
        return temperature_uK * self.kb_per_uK

    def energy_to_uK(self, energy: float) -> float:
        """Energy in rad/us to its temperature equivalent hbar E / k_B in uK."""
        return energy / self.kb_per_uK
