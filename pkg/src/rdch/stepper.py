"""Time integration of the relaxed system.

Three interchangeable stepping modes advance the conserved density:

* explicit conservative Euler on the transport equation (default, fast path),
* a lagged-mobility semi-implicit variant with a convexity stabilizer,
* the change-of-variable mode using U = phi - (gamma/sigma) n, which is
  algebraically identical to the phi mode.

An energy controller accepts a step only if the free energy does not grow
beyond a small slack, halving dt on rejection and growing it 1.2x after 20
consecutive accepts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from . import diagnostics as diag
from . import potentials as pot
from .elliptic import (
    HelmholtzSolver,
    RelaxationParams,
    make_relaxation_params,
    solve_relaxation,
    solve_u_relaxation,
)
from .errors import DomainError, EnergyBlowUpError
from .grid import Field, Grid1D, div_flux_array

GROWTH_EVERY = 20
GROWTH_FACTOR = 1.2
SHRINK_FACTOR = 0.5


class StepMode(enum.Enum):
    EXPLICIT = "explicit"
    SEMI_IMPLICIT = "semi_implicit"
    U_FORMULATION = "u_formulation"


@dataclass(frozen=True)
class SchemeConfig:
    mode: StepMode = StepMode.EXPLICIT
    regularize: bool = True
    eps: float = pot.EPS_DEFAULT
    dt0: float = 1.0e-8
    dt_min: float = 1.0e-16
    dt_max: float = 1.0
    energy_slack: float = 0.0
    stabilization: float | None = None

    def __post_init__(self):
        if not (self.dt_min <= self.dt0 <= self.dt_max):
            raise DomainError(
                f"need dt_min <= dt0 <= dt_max, got {self.dt_min}, {self.dt0}, {self.dt_max}"
            )


@dataclass(frozen=True)
class State:
    """Density/potential pair at one time instant plus stepping bookkeeping."""

    t: float
    n: Field
    phi: Field
    dt: float
    step_index: int
    energy: float | None = None
    fp_iterations: int = 0


@dataclass(frozen=True)
class Model:
    """Immutable bundle of grid, material laws, and elliptic machinery."""

    grid: Grid1D
    base: pot.PotentialSpec
    reg: pot.RegularizedPotential
    mob: pot.MobilitySpec
    entropy: pot.EntropyDensity
    relax: RelaxationParams
    helm: HelmholtzSolver

    @classmethod
    def build(
        cls,
        grid: Grid1D,
        nstar: float,
        k: float,
        gamma: float,
        sigma: float,
        eps: float = pot.EPS_DEFAULT,
        fp_tol: float = 1.0e-12,
        fp_maxiter: int = 200,
    ) -> "Model":
        base = pot.PotentialSpec(nstar=nstar, k=k)
        reg = pot.RegularizedPotential(base, eps)
        mob = pot.MobilitySpec(eps=eps)
        entropy = pot.EntropyDensity(mob)
        relax = make_relaxation_params(sigma, gamma, base, fp_tol, fp_maxiter)
        helm = HelmholtzSolver(grid, sigma)
        return cls(grid, base, reg, mob, entropy, relax, helm)

    def potential(self, regularize: bool = True):
        return self.reg if regularize else self.base


def initial_state(values: np.ndarray, cfg: SchemeConfig, model: Model, t0: float = 0.0) -> State:
    n = Field(model.grid, values)
    sol = solve_relaxation(model.relax, model.potential(cfg.regularize), n, hs=model.helm)
    e = diag.energy_arrays(n.values, sol.phi.values, model.grid.h, model, cfg.regularize)
    return State(t0, n, sol.phi, cfg.dt0, 0, e, sol.iterations)


def _explicit_flux_parts(n: np.ndarray, phi: np.ndarray, cfg: SchemeConfig, model: Model):
    p = model.potential(cfg.regularize)
    g = phi + pot.psi_plus(p, n)[1]
    b = pot.mobility(model.mob, n, regularized=cfg.regularize)[0]
    return g, b, div_flux_array(b, g, model.grid.h)


def _finish_state(state: State, n_new: np.ndarray, phi_warm: Field, dt: float, cfg, model) -> State:
    field = Field(model.grid, n_new)
    sol = solve_relaxation(
        model.relax, model.potential(cfg.regularize), field, phi_guess=phi_warm, hs=model.helm
    )
    e = diag.energy_arrays(field.values, sol.phi.values, model.grid.h, model, cfg.regularize)
    return State(state.t + dt, field, sol.phi, dt, state.step_index + 1, e, sol.iterations)


def step_explicit(state: State, cfg: SchemeConfig, model: Model, refresh_phi: bool = True) -> State:
    """One conservative Euler step; returns the trial state with phi re-solved."""
    phi_n = state.phi
    if refresh_phi:
        phi_n = solve_relaxation(
            model.relax, model.potential(cfg.regularize), state.n, phi_guess=state.phi, hs=model.helm
        ).phi
    _, _, rhs = _explicit_flux_parts(state.n.values, phi_n.values, cfg, model)
    n_new = state.n.values + state.dt * rhs
    return _finish_state(state, n_new, phi_n, state.dt, cfg, model)


def step_semi_implicit(state: State, cfg: SchemeConfig, model: Model, refresh_phi: bool = True) -> State:
    """Lagged-mobility linearized step with stabilizer S >= max sampled psi_plus''.

    Solves n' = n + dt * div(B(n) grad(phi + psi_plus'(n) + S (n' - n))); the
    stabilizer makes the update an SPD tridiagonal solve and S = 0 falls back
    to the explicit update formula exactly.
    """
    phi_n = state.phi
    if refresh_phi:
        phi_n = solve_relaxation(
            model.relax, model.potential(cfg.regularize), state.n, phi_guess=state.phi, hs=model.helm
        ).phi
    p = model.potential(cfg.regularize)
    n = state.n.values
    h = model.grid.h
    stab = cfg.stabilization
    if stab is None:
        stab = float(np.max(pot.psi_plus(p, n)[2]))

    g = phi_n.values + pot.psi_plus(p, n)[1] - stab * n
    b = pot.mobility(model.mob, n, regularized=cfg.regularize)[0]
    rhs = n + state.dt * div_flux_array(b, g, h)

    if stab == 0.0:
        n_new = rhs
    else:
        bf = 0.5 * (b[:-1] + b[1:])
        w = state.dt * stab / (h * h)
        npts = n.shape[0]
        ab = np.zeros((3, npts))
        ab[0, 1:] = -w * bf
        ab[2, :-1] = -w * bf
        ab[1, 0] = 1.0 + w * bf[0]
        ab[1, -1] = 1.0 + w * bf[-1]
        ab[1, 1:-1] = 1.0 + w * (bf[:-1] + bf[1:])
        try:
            n_new = solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:  # defensive; matrix is SPD
            raise DomainError(f"semi-implicit linear solve failed: {exc}") from exc
    return _finish_state(state, n_new, phi_n, state.dt, cfg, model)


def step_u_formulation(state: State, cfg: SchemeConfig, model: Model, refresh_phi: bool = True) -> State:
    """Explicit step driven through the auxiliary unknown U = phi - (gamma/sigma) n."""
    ratio = model.relax.gamma / model.relax.sigma
    p = model.potential(cfg.regularize)
    n = state.n.values
    u_guess = Field(model.grid, state.phi.values - ratio * n)
    sol_u = solve_u_relaxation(model.relax, p, state.n, u_guess=u_guess, hs=model.helm)
    u = sol_u.phi.values

    g = (u + ratio * n) + pot.psi_plus(p, n)[1]
    b = pot.mobility(model.mob, n, regularized=cfg.regularize)[0]
    n_new = n + state.dt * div_flux_array(b, g, model.grid.h)

    field = Field(model.grid, n_new)
    sol_u2 = solve_u_relaxation(model.relax, p, field, u_guess=sol_u.phi, hs=model.helm)
    phi_new = Field(model.grid, sol_u2.phi.values + ratio * n_new)
    e = diag.energy_arrays(field.values, phi_new.values, model.grid.h, model, cfg.regularize)
    return State(
        state.t + state.dt, field, phi_new, state.dt, state.step_index + 1, e, sol_u2.iterations
    )


STEP_FUNCTIONS = {
    StepMode.EXPLICIT: step_explicit,
    StepMode.SEMI_IMPLICIT: step_semi_implicit,
    StepMode.U_FORMULATION: step_u_formulation,
}


def recover_phi_from_u(u: Field, n: Field, model: Model) -> Field:
    """Invert the change of variables: phi = U + (gamma/sigma) n."""
    return Field(n.grid, u.values + (model.relax.gamma / model.relax.sigma) * n.values)


def adapt_dt(state: State, trial: State, cfg: SchemeConfig, streak: int = 0):
    """Energy-keyed step controller: returns (accepted, new_dt, new_streak)."""
    if state.energy is None or trial.energy is None:
        raise DomainError("adapt_dt needs cached energies on both states")
    if trial.energy <= state.energy + cfg.energy_slack:
        streak += 1
        dt = trial.dt
        if streak >= GROWTH_EVERY:
            dt = min(dt * GROWTH_FACTOR, cfg.dt_max)
            streak = 0
        return True, dt, streak
    new_dt = trial.dt * SHRINK_FACTOR
    if new_dt < cfg.dt_min:
        raise EnergyBlowUpError(
            "energy blow-up at dt_min: rejected step at t={:.6g} with dt={:.3e} "
            "(energy {:.17g} -> {:.17g}, slack {:.3e})".format(
                state.t, trial.dt, state.energy, trial.energy, cfg.energy_slack
            )
        )
    return False, new_dt, 0


def advance_python(
    state: State,
    cfg: SchemeConfig,
    model: Model,
    max_accepted: int,
    t_end: float,
    record_every: int = 1,
    accept_streak: int = 0,
    accumulate: bool = True,
):
    """Reference driver: adaptive stepping with per-stride diagnostics rows.

    Works for every mode; the compiled kernel mirrors it for the explicit
    mode.  Returns (state, records, info) where records is an array of CSV
    rows for steps with step_index % record_every == 0 (plus the final step).
    """
    step_fn = STEP_FUNCTIONS[cfg.mode]
    rows = []
    accepted = rejected = 0
    diss_accum = 0.0
    pos_accum = 0.0
    nmin_traj = float(np.min(state.n.values))
    nmax_traj = float(np.max(state.n.values))
    h = model.grid.h

    while accepted < max_accepted and state.t < t_end * (1.0 - 1.0e-15):
        remaining = t_end - state.t
        dt_eff = remaining if remaining <= state.dt * (1.0 + 1.0e-8) else state.dt
        trial = step_fn(replace(state, dt=dt_eff), cfg, model, refresh_phi=False)
        accepted_flag, new_dt, accept_streak = adapt_dt(state, trial, cfg, accept_streak)
        if accepted_flag:
            if accumulate:
                diss_accum += dt_eff * diag.dissipation_arrays(
                    state.n.values, state.phi.values, h, model, cfg.regularize
                )
                pos_accum += dt_eff * diag.entropy_positive_terms_arrays(
                    state.n.values, state.phi.values, h, model, cfg.regularize
                )
            state = replace(trial, dt=min(new_dt, cfg.dt_max))
            accepted += 1
            nmin_traj = min(nmin_traj, float(np.min(state.n.values)))
            nmax_traj = max(nmax_traj, float(np.max(state.n.values)))
            if record_every and (
                state.step_index % record_every == 0 or state.t >= t_end * (1.0 - 1.0e-15)
            ):
                rows.append(diag.record_row(replace(state, dt=dt_eff), model, cfg.regularize))
        else:
            rejected += 1
            state = replace(state, dt=new_dt)

    records = np.array(rows) if rows else np.empty((0, len(diag.CSV_COLUMNS)))
    info = {
        "accepted": accepted,
        "rejected": rejected,
        "accept_streak": accept_streak,
        "diss_accum": diss_accum,
        "pos_accum": pos_accum,
        "nmin": nmin_traj,
        "nmax": nmax_traj,
        "status": 0,
    }
    return state, records, info
