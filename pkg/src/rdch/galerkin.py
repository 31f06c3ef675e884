"""Independent spectral Galerkin solver on the Neumann cosine eigenbasis.

This is the cross-validation oracle for the finite-difference stepper: the
density and auxiliary potential are expanded in eigenfunctions of the Neumann
Laplacian, the projected nonlinearity is evaluated by de-aliased midpoint
quadrature (4x modes), the elliptic constraint is solved mode-wise by the
same contraction argument, and the coefficient ODEs are integrated with
classical RK4.  It shares no stencil code with the grid/stepper modules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import potentials as pot
from .errors import ConvergenceError, DomainError


@dataclass(frozen=True)
class SpectralBasis:
    length: float
    n_modes: int

    def __post_init__(self):
        if self.n_modes < 2:
            raise DomainError("need at least two modes")
        if self.length <= 0.0:
            raise DomainError("domain length must be positive")
        object.__setattr__(self, "_modes", self.modes_at(self.quad_points()))
        x = self.quad_points()[:, None]
        j = np.arange(self.n_modes)[None, :]
        grad = -np.sqrt(2.0 / self.length) * (j * np.pi / self.length) * np.sin(
            j * np.pi * x / self.length
        )
        object.__setattr__(self, "_grad", grad)

    @property
    def n_quad(self) -> int:
        return 4 * self.n_modes

    @property
    def quad_weight(self) -> float:
        return self.length / self.n_quad

    def quad_points(self) -> np.ndarray:
        return (np.arange(self.n_quad) + 0.5) * self.quad_weight

    def eigenvalues(self) -> np.ndarray:
        j = np.arange(self.n_modes)
        return (j * np.pi / self.length) ** 2

    def mode_matrix(self) -> np.ndarray:
        """Phi[q, j] = mode j at quadrature point q (orthonormal in L2)."""
        return self._modes

    def grad_matrix(self) -> np.ndarray:
        return self._grad

    def modes_at(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)[:, None]
        j = np.arange(self.n_modes)[None, :]
        m = np.sqrt(2.0 / self.length) * np.cos(j * np.pi * x / self.length)
        m[:, 0] = 1.0 / np.sqrt(self.length)
        return m


@dataclass(frozen=True)
class SpectralState:
    c: np.ndarray
    d: np.ndarray
    t: float


def project(basis: SpectralBasis, samples: np.ndarray) -> np.ndarray:
    """L2 projection coefficients (f, mode_j) by midpoint quadrature."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != (basis.n_quad,):
        raise DomainError(
            f"projection needs {basis.n_quad} quadrature samples, got {samples.shape}"
        )
    return basis.quad_weight * (basis.mode_matrix().T @ samples)


def project_function(basis: SpectralBasis, fn) -> np.ndarray:
    return project(basis, np.asarray(fn(basis.quad_points()), dtype=np.float64))


def reconstruct(basis: SpectralBasis, coeffs: np.ndarray) -> np.ndarray:
    return basis.mode_matrix() @ coeffs


def reconstruct_gradient(basis: SpectralBasis, coeffs: np.ndarray) -> np.ndarray:
    return basis.grad_matrix() @ coeffs


def reconstruct_at(basis: SpectralBasis, coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    return basis.modes_at(x) @ coeffs


def modal_laplacian(basis: SpectralBasis, coeffs: np.ndarray) -> np.ndarray:
    return -basis.eigenvalues() * coeffs


def solve_d_from_c(
    basis: SpectralBasis,
    c: np.ndarray,
    gamma: float,
    sigma: float,
    potential,
    d_guess: np.ndarray | None = None,
    fp_tol: float = 1.0e-12,
    fp_maxiter: int = 200,
):
    """Mode coefficients of the auxiliary potential for given density modes.

    Solves (1 + sigma*lam_j) d_j = gamma*lam_j c_j + (psi_minus'(w), mode_j)
    with w reconstructed from c - (sigma/gamma) d, by Picard iteration.
    sigma = 0 is allowed (one productive iteration plus confirmation).
    """
    lam = basis.eigenvalues()
    ratio = sigma / gamma
    denom = 1.0 + sigma * lam
    drive = gamma * lam * c
    if sigma == 0.0:
        # no implicit coupling: the right-hand side does not involve d
        proj = project(basis, pot.psi_minus(potential, reconstruct(basis, c))[1])
        d = drive + proj
        residual = float(np.max(np.abs(d - drive - proj)))
        return d, 1, residual
    d = np.zeros_like(c) if d_guess is None else np.array(d_guess, dtype=np.float64)
    last = np.inf
    for it in range(1, fp_maxiter + 1):
        w = reconstruct(basis, c - ratio * d)
        proj = project(basis, pot.psi_minus(potential, w)[1])
        d_new = (drive + proj) / denom
        delta = float(np.max(np.abs(d_new - d)))
        d = d_new
        last = delta
        if delta < fp_tol:
            w = reconstruct(basis, c - ratio * d)
            proj = project(basis, pot.psi_minus(potential, w)[1])
            residual = float(np.max(np.abs(denom * d - drive - proj)))
            return d, it, residual
    raise ConvergenceError(
        f"mode-wise elliptic fixed point stalled (last increment {last:.3e})",
        iterations=fp_maxiter,
    )


def coefficient_rhs(
    basis: SpectralBasis,
    c: np.ndarray,
    d: np.ndarray,
    potential,
    mob: pot.MobilitySpec,
):
    """Right-hand side of the coefficient ODEs (projected transport term).

    The convex-part slope is projected onto the basis *before* the gradient is
    taken, i.e. the flux argument is grad(phi_modes + Proj(psi_plus'(n)));
    placing the projection inside the integrand instead would change discrete
    values at finite mode counts.
    """
    n_q = reconstruct(basis, c)
    p = project(basis, pot.psi_plus(potential, n_q)[1])
    grad_arg = basis.grad_matrix() @ (d + p)
    b_q = pot.mobility(mob, n_q, regularized=True)[0]
    return -basis.quad_weight * (basis.grad_matrix().T @ (b_q * grad_arg))


def spectral_energy(
    basis: SpectralBasis,
    c: np.ndarray,
    d: np.ndarray,
    gamma: float,
    sigma: float,
    potential,
) -> float:
    ratio = sigma / gamma
    wq = reconstruct(basis, c - ratio * d)
    nq = reconstruct(basis, c)
    phiq = reconstruct(basis, d)
    gw = reconstruct_gradient(basis, c - ratio * d)
    hq = basis.quad_weight
    val = hq * float(np.sum(pot.psi_plus(potential, nq)[0]))
    val += hq * float(np.sum(pot.psi_minus(potential, wq)[0]))
    val += 0.5 * gamma * hq * float(np.sum(gw * gw))
    val += 0.5 * ratio * hq * float(np.sum(phiq * phiq))
    return val


def suggested_dt(basis: SpectralBasis, gamma: float, sigma: float,
                 mobility_max: float = 4.0 / 27.0) -> float:
    """Conservative RK4 step from the stiffest linear mode.

    The fastest linear rate is mobility_max * gamma * lam^2 / (1 + sigma*lam)
    at the largest retained eigenvalue; 0.05 against RK4's real-axis limit of
    ~2.8 leaves a wide margin for the nonlinear terms.
    """
    lam_max = float(basis.eigenvalues()[-1])
    return 0.05 * (1.0 + sigma * lam_max) / (mobility_max * gamma * lam_max**2)


def integrate_spectral(
    state: SpectralState,
    basis: SpectralBasis,
    gamma: float,
    sigma: float,
    potential,
    mob: pot.MobilitySpec,
    dt: float,
    nsteps: int,
    fp_tol: float = 1.0e-12,
    fp_maxiter: int = 200,
    monitor_energy: bool = False,
):
    """Classical RK4 on the coefficient ODEs with d re-solved at every stage."""
    c = np.array(state.c, dtype=np.float64)
    d = np.array(state.d, dtype=np.float64)
    t = state.t
    energies = []

    def rhs(cvec, d_warm):
        d_loc, _, _ = solve_d_from_c(
            basis, cvec, gamma, sigma, potential, d_guess=d_warm, fp_tol=fp_tol,
            fp_maxiter=fp_maxiter,
        )
        return coefficient_rhs(basis, cvec, d_loc, potential, mob), d_loc

    for _ in range(nsteps):
        if monitor_energy:
            d, _, _ = solve_d_from_c(
                basis, c, gamma, sigma, potential, d_guess=d, fp_tol=fp_tol,
                fp_maxiter=fp_maxiter,
            )
            energies.append(spectral_energy(basis, c, d, gamma, sigma, potential))
        k1, d = rhs(c, d)
        k2, d = rhs(c + 0.5 * dt * k1, d)
        k3, d = rhs(c + 0.5 * dt * k2, d)
        k4, d = rhs(c + dt * k3, d)
        c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
        if not np.all(np.isfinite(c)):
            raise ConvergenceError(f"spectral integration blew up at t={t:.6g}")

    d, _, _ = solve_d_from_c(
        basis, c, gamma, sigma, potential, d_guess=d, fp_tol=fp_tol, fp_maxiter=fp_maxiter
    )
    if monitor_energy:
        energies.append(spectral_energy(basis, c, d, gamma, sigma, potential))
        return SpectralState(c, d, t), np.array(energies)
    return SpectralState(c, d, t), None
