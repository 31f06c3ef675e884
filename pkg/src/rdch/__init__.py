"""Relaxed degenerate Cahn-Hilliard laboratory.

A degenerate-mobility, single-well-potential phase-field model reformulated
as a transport equation coupled to a Helmholtz-type elliptic relaxation, with
energy/entropy diagnostics, an independent spectral Galerkin cross-check, and
harnesses for regularization/relaxation convergence studies and long-time
steady-state classification.
"""

from .errors import (
    CheckpointError,
    ConfigError,
    ConvergenceError,
    DomainError,
    EnergyBlowUpError,
    GridMismatchError,
    RdchError,
)

__version__ = "0.1.0"

__all__ = [
    "CheckpointError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "EnergyBlowUpError",
    "GridMismatchError",
    "RdchError",
    "__version__",
]
