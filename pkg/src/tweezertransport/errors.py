"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid physical or numerical configuration (bad grid, bad trap, ...)."""


class GridMismatchError(ValueError):
    """Operation combined objects living on different spatial grids."""


class NumericalError(RuntimeError):
    """A numerical computation failed (overflow, negative fidelity spectrum, ...)."""
