import numpy as np
import pytest

import tweezertransport as tt


@pytest.fixture(scope="session")
def units():
    return tt.UnitSystem()


@pytest.fixture(scope="session")
def trap():
    return tt.TrapParams(depth_mK=-1.0, waist_um=0.5, center_um=0.0)


@pytest.fixture(scope="session")
def grid_fast():
    """Coarse-but-resolving grid used by most physics tests (dx = 0.005 um)."""
    return tt.make_grid(-2.0, 5.0, 1400)


@pytest.fixture(scope="session")
def spectrum_fast(trap, grid_fast, units):
    return tt.solve_spectrum(trap, grid_fast, units, 4)


@pytest.fixture(scope="session")
def ensemble_fast(spectrum_fast):
    return tt.thermal_ensemble(spectrum_fast, 1.0, 2)


def random_states(grid, n, rng):
    """Random orthonormal WaveFunctions via QR on Gaussian vectors."""
    mat = rng.standard_normal((grid.n_points, n)) + 1j * rng.standard_normal((grid.n_points, n))
    q, _ = np.linalg.qr(mat)
    return [tt.WaveFunction(grid, q[:, i] / np.sqrt(grid.dx)) for i in range(n)]
