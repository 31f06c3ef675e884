"""Reference numpy implementation of the fused explicit time-stepping driver.

The compiled extension (`rdch.kernels._fast`) mirrors this loop statement for
statement; this module is the fallback selected at import when the extension
is unavailable and the ground truth the extension is tested against.
"""

from __future__ import annotations

import numpy as np

from .. import diagnostics as diag
from .. import potentials as pot
from ..grid import Grid1D, div_flux_array, face_flux_array, lap_array
from ..stepper import GROWTH_EVERY, GROWTH_FACTOR, SHRINK_FACTOR, Model

STATUS_OK = 0
STATUS_FP_FAIL = 1
STATUS_DT_UNDERFLOW = 2
STATUS_NONFINITE = 3
STATUS_DOMAIN = 4

_END_SLOP = 1.0 - 1.0e-15


def advance_explicit(
    n,
    phi,
    *,
    t,
    dt,
    step_index,
    accept_streak,
    params,
    max_accepted,
    t_end,
    record_every,
    records,
    diss_accum=0.0,
    pos_accum=0.0,
    nmin_traj=np.inf,
    nmax_traj=-np.inf,
):
    """Advance up to max_accepted explicit steps (or to t_end).

    `records` is a preallocated (rows, 10) array filled with diagnostics rows
    at the accepted-step stride `record_every`.  Returns a dict with the final
    state arrays and scalar bookkeeping.
    """
    h = params["h"]
    gamma = params["gamma"]
    sigma = params["sigma"]
    regularize = bool(params["regularize"])
    fp_tol = params["fp_tol"]
    fp_maxiter = int(params["fp_maxiter"])
    slack = params["energy_slack"]
    dt_min = params["dt_min"]
    dt_max = params["dt_max"]

    model = Model.build(
        Grid1D(params["L"], n.shape[0]),
        params["nstar"],
        params["kconst"],
        gamma,
        sigma,
        params["eps"],
        fp_tol,
        fp_maxiter,
    )
    p = model.potential(regularize)
    ratio = sigma / gamma
    hs = model.helm

    def solve_phi(nv, warm):
        base = -gamma * lap_array(nv, h)
        phi_k = warm.copy()
        for it in range(1, fp_maxiter + 1):
            u = hs.solve_array(base + pot.psi_minus(p, nv - ratio * phi_k)[1])
            delta = float(np.max(np.abs(u - phi_k)))
            phi_k = u
            if delta < fp_tol:
                return phi_k, it
        return None, fp_maxiter

    def fresh(nv, phiv):
        g = phiv + pot.psi_plus(p, nv)[1]
        b = pot.mobility(model.mob, nv, regularized=regularize)[0]
        return g, b, div_flux_array(b, g, h)

    status = STATUS_OK
    accepted = rejected = 0
    nrec = 0
    fp_last = 0

    try:
        g, bvals, rhs = fresh(n, phi)
        energy = diag.energy_arrays(n, phi, h, model, regularize)
        nmin_traj = min(nmin_traj, float(np.min(n)))
        nmax_traj = max(nmax_traj, float(np.max(n)))

        while accepted < max_accepted and t < t_end * _END_SLOP:
            remaining = t_end - t
            dt_eff = remaining if remaining <= dt * (1.0 + 1.0e-8) else dt
            n_trial = n + dt_eff * rhs
            try:
                phi_trial, iters = solve_phi(n_trial, phi)
            except pot.DomainError:
                status = STATUS_DOMAIN
                break
            if phi_trial is None:
                status = STATUS_FP_FAIL
                break
            e_trial = diag.energy_arrays(n_trial, phi_trial, h, model, regularize)
            if not np.isfinite(e_trial):
                status = STATUS_NONFINITE
                break
            if e_trial <= energy + slack:
                dg = np.diff(g) / h
                bf = 0.5 * (bvals[:-1] + bvals[1:])
                diss_accum += dt_eff * h * float(np.sum(bf * dg * dg))
                pos_accum += dt_eff * diag.entropy_positive_terms_arrays(
                    n, phi, h, model, regularize
                )
                n, phi, energy = n_trial, phi_trial, e_trial
                t += dt_eff
                step_index += 1
                accepted += 1
                fp_last = iters
                accept_streak += 1
                if accept_streak >= GROWTH_EVERY:
                    dt = min(dt * GROWTH_FACTOR, dt_max)
                    accept_streak = 0
                g, bvals, rhs = fresh(n, phi)
                nmin_traj = min(nmin_traj, float(np.min(n)))
                nmax_traj = max(nmax_traj, float(np.max(n)))
                if record_every and (
                    step_index % record_every == 0 or t >= t_end * _END_SLOP
                ):
                    flux = face_flux_array(bvals, g, h)
                    dg = np.diff(g) / h
                    bf = 0.5 * (bvals[:-1] + bvals[1:])
                    records[nrec, 0] = t
                    records[nrec, 1] = h * float(np.sum(n))
                    records[nrec, 2] = energy
                    records[nrec, 3] = h * float(np.sum(bf * dg * dg))
                    records[nrec, 4] = diag.entropy_arrays(n, h, model)
                    records[nrec, 5] = float(np.sqrt(h * np.sum(flux * flux)))
                    records[nrec, 6] = float(np.min(n))
                    records[nrec, 7] = float(np.max(n))
                    records[nrec, 8] = iters
                    records[nrec, 9] = dt_eff
                    nrec += 1
            else:
                rejected += 1
                accept_streak = 0
                new_dt = dt * SHRINK_FACTOR
                if new_dt < dt_min:
                    status = STATUS_DT_UNDERFLOW
                    break
                dt = new_dt
    except pot.DomainError:
        status = STATUS_DOMAIN

    return {
        "n": np.asarray(n),
        "phi": np.asarray(phi),
        "t": t,
        "dt": dt,
        "step_index": step_index,
        "accept_streak": accept_streak,
        "nrec": nrec,
        "accepted": accepted,
        "rejected": rejected,
        "status": status,
        "fp_last": fp_last,
        "diss_accum": diss_accum,
        "pos_accum": pos_accum,
        "nmin": nmin_traj,
        "nmax": nmax_traj,
    }
