"""Exception types shared across the package.

The CLI maps these onto process exit codes (see cli.py): ConfigError -> 2,
DimensionCapError -> 3, ConvergenceError and subclasses -> 4.
"""


class ConfigError(ValueError):
    """A scenario config file is malformed or out of range."""


class DimensionCapError(RuntimeError):
    """A requested truncation exceeds the configured basis-size cap."""


class StabilityError(ValueError):
    """The stability shift r0 does not dominate the computed pair constant."""


class ConvergenceError(RuntimeError):
    """An iterative solve stopped without reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InadmissibleTargetError(ConvergenceError):
    """Dual multipliers diverged: the target fields look numerically infeasible."""
