"""Exception types shared across the package."""


class RdchError(Exception):
    """Base class for all package-specific failures."""


class DomainError(RdchError, ValueError):
    """Evaluation outside a function's admissible domain or invalid spec."""


class GridMismatchError(RdchError, ValueError):
    """Fields living on different grids were combined."""


class ConfigError(RdchError, ValueError):
    """Run configuration violates a validation constraint."""


class ConvergenceError(RdchError, RuntimeError):
    """A fixed-point iteration hit its cap; signals a violated contraction."""

    def __init__(self, message, iterations=None, last_ratio=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_ratio = last_ratio


class EnergyBlowUpError(RdchError, RuntimeError):
    """Step controller rejected at the dt floor; the scheme is unstable."""


class CheckpointError(RdchError, RuntimeError):
    """Checkpoint file is corrupt or does not match the requesting config."""
