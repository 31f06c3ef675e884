"""Lyapunov-functional diagnostics: energy, dissipation, entropy, flux norm.

All quantities are midpoint-rule integrals over the cell-centered grid with
face differences for gradients, matching the stencils of the transport
operator so that the discrete energy identity d/dt E = -dissipation holds
exactly in the semi-discrete limit.
"""

from __future__ import annotations

import numpy as np

from . import potentials as pot
from .grid import face_flux_array, lap_array

CSV_COLUMNS = (
    "t",
    "mass",
    "energy",
    "dissipation",
    "entropy",
    "flux_l2",
    "n_min",
    "n_max",
    "fp_iterations",
    "dt",
)
CSV_HEADER = ",".join(CSV_COLUMNS)


def energy_arrays(n: np.ndarray, phi: np.ndarray, h: float, model, regularize: bool = True) -> float:
    """Free energy: convex part + interface gradient + relaxation penalty + concave part."""
    p = model.potential(regularize)
    ratio = model.relax.sigma / model.relax.gamma
    w = n - ratio * phi
    vplus = pot.psi_plus(p, n)[0]
    vminus = pot.psi_minus(p, w)[0]
    dw = np.diff(w) / h
    grad_term = 0.5 * model.relax.gamma * h * float(np.sum(dw * dw))
    phi_term = 0.5 * ratio * h * float(np.sum(phi * phi))
    return float(h * np.sum(vplus) + h * np.sum(vminus)) + grad_term + phi_term


def dissipation_arrays(n, phi, h, model, regularize=True) -> float:
    p = model.potential(regularize)
    g = phi + pot.psi_plus(p, n)[1]
    bvals = pot.mobility(model.mob, n, regularized=regularize)[0]
    dg = np.diff(g) / h
    bf = 0.5 * (bvals[:-1] + bvals[1:])
    return float(h * np.sum(bf * dg * dg))


def flux_l2_arrays(n, phi, h, model, regularize=True) -> float:
    p = model.potential(regularize)
    g = phi + pot.psi_plus(p, n)[1]
    bvals = pot.mobility(model.mob, n, regularized=regularize)[0]
    flux = face_flux_array(bvals, g, h)
    return float(np.sqrt(h * np.sum(flux * flux)))


def entropy_arrays(n, h, model) -> float:
    return float(h * np.sum(pot.entropy_density(model.entropy, n)))


def entropy_dissipation_terms_arrays(n, phi, h, model, regularize=True):
    """The four signed terms of the entropy balance.

    Returns (laplacian_term, grad_phi_term, psi_minus_term, psi_plus_term);
    the entropy derivative is their negated sum.  Gradient-carrying terms use
    face differences with face-averaged coefficients.
    """
    p = model.potential(regularize)
    ratio = model.relax.sigma / model.relax.gamma
    w = n - ratio * phi
    lap_w = lap_array(w, h)
    t_lap = model.relax.gamma * h * float(np.sum(lap_w * lap_w))
    dphi = np.diff(phi) / h
    t_phi = ratio * h * float(np.sum(dphi * dphi))
    dw = np.diff(w) / h
    d2m = pot.psi_minus(p, w)[2]
    t_minus = h * float(np.sum(0.5 * (d2m[:-1] + d2m[1:]) * dw * dw))
    dn = np.diff(n) / h
    d2p = pot.psi_plus(p, n)[2]
    t_plus = h * float(np.sum(0.5 * (d2p[:-1] + d2p[1:]) * dn * dn))
    return t_lap, t_phi, t_minus, t_plus


def entropy_positive_terms_arrays(n, phi, h, model, regularize=True) -> float:
    """Sum of the nonnegative entropy-dissipation terms (the concave one dropped)."""
    t_lap, t_phi, _, t_plus = entropy_dissipation_terms_arrays(n, phi, h, model, regularize)
    return t_lap + t_phi + t_plus


# State-level wrappers over the array kernels.


def energy(state, model, regularize: bool = True) -> float:
    return energy_arrays(state.n.values, state.phi.values, state.n.grid.h, model, regularize)


def dissipation(state, model, regularize: bool = True) -> float:
    return dissipation_arrays(state.n.values, state.phi.values, state.n.grid.h, model, regularize)


def entropy(state, model) -> float:
    return entropy_arrays(state.n.values, state.n.grid.h, model)


def entropy_dissipation_terms(state, model, regularize: bool = True):
    return entropy_dissipation_terms_arrays(
        state.n.values, state.phi.values, state.n.grid.h, model, regularize
    )


def flux_l2(state, model, regularize: bool = True) -> float:
    return flux_l2_arrays(state.n.values, state.phi.values, state.n.grid.h, model, regularize)


def record_row(state, model, regularize: bool = True) -> np.ndarray:
    """One diagnostics row in CSV column order."""
    n, phi, h = state.n.values, state.phi.values, state.n.grid.h
    e = state.energy
    if e is None:
        e = energy_arrays(n, phi, h, model, regularize)
    return np.array(
        [
            state.t,
            h * float(np.sum(n)),
            e,
            dissipation_arrays(n, phi, h, model, regularize),
            entropy_arrays(n, h, model),
            flux_l2_arrays(n, phi, h, model, regularize),
            float(np.min(n)),
            float(np.max(n)),
            float(state.fp_iterations),
            state.dt,
        ]
    )


def format_row(row) -> str:
    parts = []
    for name, v in zip(CSV_COLUMNS, row):
        if name == "fp_iterations":
            parts.append(str(int(v)))
        else:
            parts.append(f"{v:.17g}")
    return ",".join(parts)


class DiagnosticsWriter:
    """Single-writer CSV sink for one run."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w")
        self._fh.write(CSV_HEADER + "\n")

    def write_rows(self, rows) -> None:
        for row in rows:
            self._fh.write(format_row(row) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
