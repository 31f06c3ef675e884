"""Uniform cell-centered 1D grid with homogeneous Neumann closure.

Nodes sit at x_i = (i + 1/2) h on [0, L].  Mirror ghost values make the
zero-flux boundary exact in the conservative flux-difference forms, so the
discrete divergence theorem (zero total mass of any flux divergence) and the
summation-by-parts pairing hold to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridMismatchError


@dataclass(frozen=True)
class Grid1D:
    length: float
    npoints: int

    def __post_init__(self):
        if self.length <= 0.0:
            raise DomainError(f"grid length must be positive, got {self.length}")
        if self.npoints < 8:
            raise DomainError(f"grid needs at least 8 cells, got {self.npoints}")

    @property
    def h(self) -> float:
        return self.length / self.npoints

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.npoints) + 0.5) * self.h


@dataclass(frozen=True)
class Field:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.grid.npoints,):
            raise GridMismatchError(
                f"field has {vals.shape} samples for a grid of {self.grid.npoints} cells"
            )
        if not np.all(np.isfinite(vals)):
            raise DomainError("field contains non-finite samples")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def _check_same_grid(*fields: Field):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


# Array-level kernels (shared with the pure time-stepping backend).  The
# laplacian is the unit-coefficient specialization of the flux-difference
# form, so divergence_of_flux with coeff == 1 reproduces it bit-for-bit.


def lap_array(v: np.ndarray, h: float) -> np.ndarray:
    face = np.diff(v) / h
    out = np.empty_like(v)
    out[0] = face[0] / h
    out[-1] = -face[-1] / h
    out[1:-1] = (face[1:] - face[:-1]) / h
    return out


def div_flux_array(coeff: np.ndarray, g: np.ndarray, h: float) -> np.ndarray:
    face = 0.5 * (coeff[:-1] + coeff[1:]) * np.diff(g) / h
    out = np.empty_like(g)
    out[0] = face[0] / h
    out[-1] = -face[-1] / h
    out[1:-1] = (face[1:] - face[:-1]) / h
    return out


def face_flux_array(coeff: np.ndarray, g: np.ndarray, h: float) -> np.ndarray:
    """Interior face fluxes coeff_{i+1/2} (g_{i+1} - g_i)/h; boundary faces are zero."""
    return 0.5 * (coeff[:-1] + coeff[1:]) * np.diff(g) / h


def laplacian(f: Field) -> Field:
    return Field(f.grid, lap_array(f.values, f.grid.h))


def divergence_of_flux(coeff: Field, g: Field) -> Field:
    """Conservative transport operator div(coeff * grad g) with zero-flux ends."""
    grid = _check_same_grid(coeff, g)
    c = coeff.values
    if np.any(c < -1.0e-14):
        raise DomainError("flux coefficient has negative samples")
    c = np.where(c < 0.0, 0.0, c)
    return Field(grid, div_flux_array(c, g.values, grid.h))


def integrate(f: Field) -> float:
    return float(f.grid.h * np.sum(f.values))


def inner_product(f: Field, g: Field) -> float:
    grid = _check_same_grid(f, g)
    return float(grid.h * np.sum(f.values * g.values))


def gradient_sq_norm(f: Field) -> float:
    h = f.grid.h
    d = np.diff(f.values) / h
    return float(h * np.sum(d * d))


def save_snapshot(f: Field, path) -> None:
    """Write the field as two-column text 'x value' with 17 significant digits."""
    xs = f.grid.cell_centers()
    with open(path, "w") as fh:
        for x, v in zip(xs, f.values):
            fh.write(f"{x:.17g} {v:.17g}\n")


def load_snapshot(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path)
    data = np.atleast_2d(data)
    return data[:, 0], data[:, 1]
