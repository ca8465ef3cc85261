"""Finite-temperature neutral-atom transport between optical tweezer positions.

Simulation building blocks (grid, trap, pulses, noise, spectrum, propagator,
figures of merit), the dCRAB pulse optimizer, and scripted experiment drivers
behind the `tweezertransport` command line.
"""

from .errors import ConfigurationError, GridMismatchError, NumericalError
from .grid import (
    SpatialGrid,
    WaveFunction,
    from_momentum,
    gaussian_packet,
    inner_product,
    make_grid,
    to_momentum,
)
from .units import SR88_MASS_KG, UnitSystem
from .trap import TrapParams, aod_frequency_of, aod_position_of, potential_on_grid
from .pulses import (
    DcrabPulse,
    PiecewiseQuadraticPulse,
    Pulse,
    SampledPulse,
    fit_piecewise_quadratic,
    piecewise_quadratic,
    read_pulse_csv,
)
from .noise import NoiseRealization, NoiseSpec, identity_realization, sample_realization, sample_rin
from .spectrum import (
    ThermalEnsemble,
    TrapSpectrum,
    cutoff_fidelity,
    shift_state,
    shifted_ensemble,
    solve_spectrum,
    thermal_ensemble,
)
from .propagator import (
    EvolutionPlan,
    Trajectory,
    evolve,
    evolve_ensemble,
    evolve_states,
    free_evolve,
    make_plan,
)
from .fom import (
    FomRecord,
    RecaptureCurve,
    multi_transport,
    recapture_curve,
    recapture_probability,
    recapture_window,
    time_averaged_fom,
    uhlmann_infidelity,
)
from .dcrab import DcrabConfig, OptimizationRecord, constrain_pulse, make_basis, optimize

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "GridMismatchError",
    "NumericalError",
    "SpatialGrid",
    "WaveFunction",
    "make_grid",
    "to_momentum",
    "from_momentum",
    "inner_product",
    "gaussian_packet",
    "UnitSystem",
    "SR88_MASS_KG",
    "TrapParams",
    "potential_on_grid",
    "aod_frequency_of",
    "aod_position_of",
    "Pulse",
    "PiecewiseQuadraticPulse",
    "SampledPulse",
    "DcrabPulse",
    "piecewise_quadratic",
    "fit_piecewise_quadratic",
    "read_pulse_csv",
    "NoiseSpec",
    "NoiseRealization",
    "identity_realization",
    "sample_rin",
    "sample_realization",
    "TrapSpectrum",
    "ThermalEnsemble",
    "solve_spectrum",
    "thermal_ensemble",
    "cutoff_fidelity",
    "shift_state",
    "shifted_ensemble",
    "EvolutionPlan",
    "Trajectory",
    "make_plan",
    "evolve",
    "evolve_states",
    "evolve_ensemble",
    "free_evolve",
    "FomRecord",
    "RecaptureCurve",
    "uhlmann_infidelity",
    "time_averaged_fom",
    "recapture_window",
    "recapture_probability",
    "recapture_curve",
    "multi_transport",
    "DcrabConfig",
    "OptimizationRecord",
    "make_basis",
    "optimize",
    "constrain_pulse",
]
