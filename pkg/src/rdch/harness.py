"""Simulation driver, steady-state classification, sweeps, and checkpoints."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np

from . import config as cfgmod
from . import diagnostics as diag
from . import kernels
from . import potentials as pot
from . import stepper
from .errors import (
    CheckpointError,
    ConvergenceError,
    DomainError,
    EnergyBlowUpError,
    RdchError,
)
from .grid import Field, Grid1D, save_snapshot
from .stepper import Model, SchemeConfig, State, StepMode

CHECKPOINT_VERSION = 1
_CHUNK_DEFAULT = 8192


# ---------------------------------------------------------------------------
# dt heuristics


def stable_dt_estimate(L, N, gamma, sigma, eps, nstar, safety=0.45) -> float:
    """Frozen-coefficient stability estimate for the explicit scheme.

    The composed symbol is lam * (B * gamma*lam/(1 + sigma*lam) + B*psi_plus'')
    with lam the largest grid eigenvalue; the concave part contributes at most
    B1 * beta / (1 + sigma*lam).  Heuristic: the energy controller remains the
    authority, this just seeds a safe fixed step for sweep runs.
    """
    h = L / N
    lam = 4.0 / (h * h)
    base = pot.PotentialSpec(nstar=nstar, k=0.0)
    reg = pot.RegularizedPotential(base, eps)
    mob = pot.MobilitySpec(eps=eps)
    _, big = pot.mobility_bounds(mob)
    samples = np.linspace(-0.1, 1.1, 4001)
    prod = pot.mobility(mob, samples, regularized=True)[0] * pot.psi_plus(reg, samples)[2]
    pmax = float(np.max(prod))
    damp = gamma * lam / (1.0 + sigma * lam)
    rate = lam * (big * damp + pmax + big * base.beta / (1.0 + sigma * lam))
    return safety * 2.0 / rate


def default_dt0(cfg: cfgmod.RunConfig) -> float:
    h = cfg.L / cfg.N
    return 0.1 * h**4 / cfg.gamma


def resolve_scheme(cfg: cfgmod.RunConfig, energy_slack: float) -> SchemeConfig:
    dt0 = cfg.get("scheme.dt0")
    if dt0 is None:
        dt0 = default_dt0(cfg)
    dt_min = cfg.get("scheme.dt_min")
    if dt_min is None:
        dt_min = 1.0e-8 * dt0
    dt_max = cfg.get("scheme.dt_max")
    if dt_max is None:
        if cfg.mode == StepMode.SEMI_IMPLICIT:
            dt_max = 1.0e9 * dt0
        else:
            # cap the controller near the frozen-coefficient stability limit;
            # without it a quiet state lets dt run away (the energy slack
            # absorbs the onset of the instability) until noise spikes
            dt_max = max(
                2.0 * stable_dt_estimate(
                    cfg.L, cfg.N, cfg.gamma, cfg.sigma, cfg.eps, cfg.nstar
                ),
                dt0,
            )
    return SchemeConfig(
        mode=cfg.mode,
        regularize=cfg.get("scheme.regularize"),
        eps=cfg.eps,
        dt0=dt0,
        dt_min=dt_min,
        dt_max=dt_max,
        energy_slack=energy_slack,
        stabilization=cfg.get("scheme.stabilization"),
    )


def build_model(cfg: cfgmod.RunConfig) -> Model:
    return Model.build(
        Grid1D(cfg.L, cfg.N),
        cfg.nstar,
        cfg.k,
        cfg.gamma,
        cfg.sigma,
        cfg.eps,
        cfg.get("scheme.fp_tol"),
        cfg.get("scheme.fp_maxiter"),
    )


# ---------------------------------------------------------------------------
# steady-state detection


@dataclass(frozen=True)
class SteadyReport:
    status: str  # "steady" | "inconclusive"
    kind: str | None  # "constant" | "aggregate" | None
    plateau_count: int = 0
    interface_width: float = float("nan")
    flux_last: float = float("nan")
    energy_span: float = float("nan")


def _crossings(x, v, level):
    """Interpolated crossing positions of v through `level` with slope signs."""
    out = []
    dv = v - level
    for i in range(len(v) - 1):
        a, b = dv[i], dv[i + 1]
        if a == 0.0:
            out.append((x[i], np.sign(b - a)))
        elif a * b < 0.0:
            frac = a / (a - b)
            out.append((x[i] + frac * (x[i + 1] - x[i]), 1.0 if b > a else -1.0))
    return out


def interface_widths(x, v, lo=0.1, hi=0.9):
    """Distances over which the profile rises lo -> hi (or falls hi -> lo)."""
    cross_lo = _crossings(x, v, lo)
    cross_hi = _crossings(x, v, hi)
    widths = []
    for xl, sl in cross_lo:
        if sl <= 0:
            continue
        ups = [xh for xh, sh in cross_hi if sh > 0 and xh > xl]
        next_lo = [xl2 for xl2, sl2 in cross_lo if sl2 > 0 and xl2 > xl]
        if ups and (not next_lo or ups[0] < next_lo[0]):
            widths.append(ups[0] - xl)
    for xh, sh in cross_hi:
        if sh >= 0:
            continue
        downs = [xl for xl, sl in cross_lo if sl < 0 and xl > xh]
        next_hi = [xh2 for xh2, sh2 in cross_hi if sh2 < 0 and xh2 > xh]
        if downs and (not next_hi or downs[0] < next_hi[0]):
            widths.append(downs[0] - xh)
    return widths


def count_plateaus(v, tol=1.0e-2) -> int:
    """Maximal runs where the density sits in a pure phase (n>1-tol or n<tol)."""
    labels = np.where(v > 1.0 - tol, 1, np.where(v < tol, -1, 0))
    count = 0
    prev = 0
    for lab in labels:
        if lab != 0 and lab != prev:
            count += 1
        prev = lab
    return count


def detect_steady_state(
    records: np.ndarray,
    tol_flux: float,
    tol_energy: float,
    window: int,
    final_field: Field | None = None,
) -> SteadyReport:
    """Steady when the flux norm and the energy span stay below tolerance
    over the trailing window of diagnostics records."""
    if len(records) < window:
        return SteadyReport("inconclusive", None)
    win = records[-window:]
    flux_ok = bool(np.all(win[:, 5] < tol_flux))
    e_lo, e_hi = float(np.min(win[:, 2])), float(np.max(win[:, 2]))
    scale = max(abs(e_lo), abs(e_hi), 1.0e-300)
    energy_ok = (e_hi - e_lo) < tol_energy * scale
    if not (flux_ok and energy_ok):
        return SteadyReport("inconclusive", None, flux_last=float(win[-1, 5]),
                            energy_span=e_hi - e_lo)

    spread = float(win[-1, 7] - win[-1, 6])
    if spread < 10.0 * tol_flux:
        return SteadyReport("steady", "constant", flux_last=float(win[-1, 5]),
                            energy_span=e_hi - e_lo)
    plateaus = 0
    width = float("nan")
    if final_field is not None:
        x = final_field.grid.cell_centers()
        v = final_field.values
        plateaus = count_plateaus(v)
        # rise levels scale with the aggregate plateau: for saturated
        # profiles (max ~ 1) these are the plain 0.1 and 0.9 levels
        nmax = float(np.max(v))
        ws = interface_widths(x, v, 0.1 * nmax, 0.9 * nmax)
        if ws:
            width = float(np.mean(ws))
    return SteadyReport("steady", "aggregate", plateaus, width,
                        float(win[-1, 5]), e_hi - e_lo)


# ---------------------------------------------------------------------------
# the run driver


@dataclass
class RunResult:
    config: cfgmod.RunConfig
    state: State
    records: np.ndarray
    status: str  # "t_end" | "steady" | "max_steps"
    steady: SteadyReport | None
    runtime_s: float
    accepted: int
    rejected: int
    nmin_traj: float
    nmax_traj: float
    diss_accum: float
    pos_accum: float
    energy0: float
    mass0: float
    outdir: str | None
    csv_path: str | None
    accept_streak: int = 0
    energy_slack: float = 0.0

    @property
    def mass_drift(self) -> float:
        return float(self.records[-1, 1] - self.mass0) if len(self.records) else 0.0

    @property
    def energy_drop(self) -> float:
        return float(self.energy0 - self.records[-1, 2]) if len(self.records) else 0.0

    @property
    def final_flux(self) -> float:
        return float(self.records[-1, 5]) if len(self.records) else float("nan")


def _raise_status(status: int, cfg: cfgmod.RunConfig, state: State):
    ctext = cfg.canonical_text()
    if status == kernels.STATUS_FP_FAIL:
        raise ConvergenceError(
            "relaxation fixed point failed to converge during stepping at "
            f"t={state.t:.6g}; config:\n{ctext}"
        )
    if status == kernels.STATUS_DT_UNDERFLOW:
        raise EnergyBlowUpError(
            f"energy blow-up at dt_min: controller exhausted at t={state.t:.6g}, "
            f"dt={state.dt:.3e}, step={state.step_index}; config:\n{ctext}"
        )
    if status == kernels.STATUS_NONFINITE:
        raise DomainError(f"non-finite energy at t={state.t:.6g}; config:\n{ctext}")
    if status == kernels.STATUS_DOMAIN:
        raise DomainError(
            "unregularized evaluation left its domain (density reached [1, inf) or "
            f"below 0) at t={state.t:.6g}; config:\n{ctext}"
        )


def _kernel_params(cfg: cfgmod.RunConfig, scheme: SchemeConfig) -> dict:
    return {
        "L": cfg.L,
        "h": cfg.L / cfg.N,
        "gamma": cfg.gamma,
        "sigma": cfg.sigma,
        "eps": cfg.eps,
        "nstar": cfg.nstar,
        "kconst": cfg.k,
        "fp_tol": cfg.get("scheme.fp_tol"),
        "fp_maxiter": cfg.get("scheme.fp_maxiter"),
        "energy_slack": scheme.energy_slack,
        "dt_min": scheme.dt_min,
        "dt_max": scheme.dt_max,
        "regularize": 1 if scheme.regularize else 0,
    }


def run(
    cfg: cfgmod.RunConfig,
    outdir: str | None = None,
    resume: tuple | None = None,
    write_outputs: bool = True,
) -> RunResult:
    """Integrate to t_end or steady state, streaming diagnostics and snapshots.

    `resume` is (state, accept_streak, energy_slack, energy0) from a restored
    checkpoint; the diagnostics CSV then contains only the continuation rows.
    """
    t_start = time.perf_counter()
    model = build_model(cfg)
    grid = model.grid

    if resume is None:
        pre = resolve_scheme(cfg, energy_slack=0.0)
        state = stepper.initial_state(cfgmod.initial_condition(cfg), pre, model)
        slack = cfg.get("scheme.energy_slack")
        if slack is None:
            slack = 1.0e-10 * abs(state.energy)
        scheme = resolve_scheme(cfg, energy_slack=slack)
        streak = 0
        energy0 = state.energy
    else:
        state, streak, slack, energy0 = resume
        scheme = resolve_scheme(cfg, energy_slack=slack)

    if outdir is None and write_outputs:
        outdir = cfg.outdir
    csv_path = None
    writer = None
    snap_stride = cfg.get("output.snapshot_stride")
    if write_outputs:
        os.makedirs(outdir, exist_ok=True)
        csv_path = os.path.join(outdir, "diagnostics.csv")
        writer = diag.DiagnosticsWriter(csv_path)

    record_every = cfg.get("output.diagnostics_stride")
    t_end = cfg.t_end
    max_steps = cfg.get("run.max_steps")
    steady_on = cfg.get("steady.enabled")
    tol_flux = cfg.get("steady.tol_flux")
    tol_energy = cfg.get("steady.tol_energy")
    window = cfg.get("steady.window")

    all_rows = []
    if state.step_index == 0:
        row0 = diag.record_row(state, model, scheme.regularize)
        all_rows.append(row0)
        if writer:
            writer.write_rows([row0])
        if write_outputs:
            save_snapshot(state.n, os.path.join(outdir, "snap_0.dat"))

    chunk = snap_stride if snap_stride > 0 else _CHUNK_DEFAULT
    params = _kernel_params(cfg, scheme)
    use_kernel = scheme.mode == StepMode.EXPLICIT

    accepted = rejected = 0
    diss_accum = pos_accum = 0.0
    nmin_traj = float(np.min(state.n.values))
    nmax_traj = float(np.max(state.n.values))
    status = "t_end"
    n_arr = np.array(state.n.values)
    phi_arr = np.array(state.phi.values)
    t, dt, step_index = state.t, state.dt, state.step_index
    last_energy = state.energy
    fp_last = state.fp_iterations

    while t < t_end * (1.0 - 1.0e-15) and accepted < max_steps:
        budget = min(chunk, max_steps - accepted)
        if use_kernel:
            rows_buf = np.empty((budget // max(record_every, 1) + 4, 10))
            res = kernels.advance_explicit(
                n_arr,
                phi_arr,
                t=t,
                dt=dt,
                step_index=step_index,
                accept_streak=streak,
                params=params,
                max_accepted=budget,
                t_end=t_end,
                record_every=record_every,
                records=rows_buf,
                diss_accum=diss_accum,
                pos_accum=pos_accum,
                nmin_traj=nmin_traj,
                nmax_traj=nmax_traj,
            )
            n_arr, phi_arr = res["n"], res["phi"]
            t, dt, step_index, streak = (
                res["t"], res["dt"], res["step_index"], res["accept_streak"],
            )
            accepted += res["accepted"]
            rejected += res["rejected"]
            diss_accum, pos_accum = res["diss_accum"], res["pos_accum"]
            nmin_traj, nmax_traj = res["nmin"], res["nmax"]
            fp_last = res["fp_last"] or fp_last
            new_rows = rows_buf[: res["nrec"]]
            if res["nrec"]:
                last_energy = float(new_rows[-1, 2])
            kstatus = res["status"]
        else:
            st = State(t, Field(grid, n_arr), Field(grid, phi_arr), dt, step_index,
                       last_energy, fp_last)
            try:
                st, new_rows, info = stepper.advance_python(
                    st, scheme, model, budget, t_end, record_every, streak
                )
            except RdchError as exc:
                if writer:
                    writer.close()
                raise type(exc)(
                    f"{exc}; config:\n{cfg.canonical_text()}"
                ) from exc
            n_arr = np.array(st.n.values)
            phi_arr = np.array(st.phi.values)
            t, dt, step_index = st.t, st.dt, st.step_index
            last_energy, fp_last = st.energy, st.fp_iterations
            streak = info["accept_streak"]
            accepted += info["accepted"]
            rejected += info["rejected"]
            diss_accum += info["diss_accum"]
            pos_accum += info["pos_accum"]
            nmin_traj = min(nmin_traj, info["nmin"])
            nmax_traj = max(nmax_traj, info["nmax"])
            kstatus = info["status"]

        if len(new_rows):
            all_rows.extend(np.array(new_rows))
            if writer:
                writer.write_rows(new_rows)
        if write_outputs and snap_stride > 0 and step_index % snap_stride == 0 and step_index > 0:
            save_snapshot(Field(grid, n_arr), os.path.join(outdir, f"snap_{step_index}.dat"))

        if kstatus != kernels.STATUS_OK:
            if writer:
                writer.close()
            _raise_status(
                kstatus, cfg,
                State(t, Field(grid, n_arr), Field(grid, phi_arr), dt, step_index),
            )

        if steady_on and len(all_rows) >= window:
            report = detect_steady_state(
                np.array(all_rows[-window:]), tol_flux, tol_energy, window,
                Field(grid, n_arr),
            )
            if report.status == "steady":
                status = "steady"
                break
        if accepted >= max_steps:
            status = "max_steps"
            break

    final_state = State(
        t, Field(grid, n_arr), Field(grid, phi_arr), dt, step_index, last_energy, fp_last
    )
    records = np.array(all_rows) if all_rows else np.empty((0, 10))
    steady_report = None
    if len(records) >= window:
        steady_report = detect_steady_state(
            records, tol_flux, tol_energy, window, final_state.n
        )

    if write_outputs:
        save_snapshot(final_state.n, os.path.join(outdir, f"snap_{step_index}.dat"))
        if writer:
            writer.close()

    mass0 = float(records[0, 1]) if len(records) else float("nan")
    return RunResult(
        config=cfg,
        state=final_state,
        records=records,
        status=status,
        steady=steady_report,
        runtime_s=time.perf_counter() - t_start,
        accepted=accepted,
        rejected=rejected,
        nmin_traj=nmin_traj,
        nmax_traj=nmax_traj,
        diss_accum=diss_accum,
        pos_accum=pos_accum,
        energy0=energy0,
        mass0=mass0,
        outdir=outdir,
        csv_path=csv_path,
        accept_streak=streak,
        energy_slack=scheme.energy_slack,
    )


# ---------------------------------------------------------------------------
# checkpoint / restore


def write_checkpoint(path, result_or_state, cfg: cfgmod.RunConfig,
                     accept_streak: int, energy_slack: float, energy0: float) -> None:
    state = result_or_state.state if isinstance(result_or_state, RunResult) else result_or_state
    np.savez(
        path,
        version=np.int64(CHECKPOINT_VERSION),
        config_text=np.str_(cfg.canonical_text()),
        n=state.n.values,
        phi=state.phi.values,
        t=np.float64(state.t),
        dt=np.float64(state.dt),
        step_index=np.int64(state.step_index),
        accept_streak=np.int64(accept_streak),
        energy=np.float64(state.energy if state.energy is not None else np.nan),
        energy_slack=np.float64(energy_slack),
        energy0=np.float64(energy0),
        fp_iterations=np.int64(state.fp_iterations),
    )


def read_checkpoint(path, expected_cfg: cfgmod.RunConfig | None = None):
    """Load a checkpoint; returns (config, state, accept_streak, slack, energy0)."""
    try:
        data = np.load(path, allow_pickle=False)
        version = int(data["version"])
        config_text = str(data["config_text"])
        n = np.array(data["n"], dtype=np.float64)
        phi = np.array(data["phi"], dtype=np.float64)
        t = float(data["t"])
        dt = float(data["dt"])
        step_index = int(data["step_index"])
        streak = int(data["accept_streak"])
        energy = float(data["energy"])
        slack = float(data["energy_slack"])
        energy0 = float(data["energy0"])
        fp_iterations = int(data["fp_iterations"])
    except (OSError, KeyError, ValueError, EOFError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {version} does not match supported {CHECKPOINT_VERSION}"
        )
    cfg = cfgmod.from_text(config_text, apply_env=False)
    if expected_cfg is not None and expected_cfg.canonical_text() != config_text:
        raise CheckpointError("checkpoint config does not match the requested config")
    grid = Grid1D(cfg.L, cfg.N)
    state = State(
        t, Field(grid, n), Field(grid, phi), dt, step_index, energy, fp_iterations
    )
    return cfg, state, streak, slack, energy0


def run_from_checkpoint(path, t_end: float | None = None, outdir: str | None = None,
                        write_outputs: bool = True) -> RunResult:
    cfg, state, streak, slack, energy0 = read_checkpoint(path)
    if t_end is not None:
        cfg = cfg.with_updates({"run.t_end": t_end})
    if outdir is None and write_outputs:
        outdir = cfg.outdir + "_resumed"
    return run(cfg, outdir=outdir, resume=(state, streak, slack, energy0),
               write_outputs=write_outputs)


# ---------------------------------------------------------------------------
# parameter sweeps


@dataclass
class SweepReport:
    param_name: str
    values: list
    errors: list
    runtimes: list
    accepted: list
    rejected: list
    reference_value: float
    ratios: list
    monotone_decreasing: bool
    dt_fixed: float
    extras: dict

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("param,error_l2,runtime_s,accepted_steps,rejected_steps\n")
            for v, e, r, a, j in zip(
                self.values, self.errors, self.runtimes, self.accepted, self.rejected
            ):
                fh.write(f"{v:.17g},{e:.17g},{r:.17g},{a},{j}\n")


class SweepMemberError(RdchError):
    def __init__(self, message, partial: SweepReport):
        super().__init__(message)
        self.partial = partial


def _l2_diff(a: np.ndarray, b: np.ndarray, h: float) -> float:
    d = a - b
    return float(np.sqrt(h * np.sum(d * d)))


def _sweep_member_cfg(base: cfgmod.RunConfig, updates: dict, dt_fixed: float,
                      t_end: float | None) -> cfgmod.RunConfig:
    u = dict(updates)
    u["scheme.dt0"] = dt_fixed
    u["scheme.dt_max"] = dt_fixed
    u["scheme.dt_min"] = dt_fixed * 2.0**-20
    u["steady.enabled"] = False
    if t_end is not None:
        u["run.t_end"] = t_end
    return base.with_updates(u)


def _run_members(configs, report, label):
    """Run independent sweep members, optionally across worker processes."""
    results = []
    if _SWEEP_WORKERS > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=_SWEEP_WORKERS) as pool:
            futures = [pool.submit(_run_member_nowrite, cfg) for cfg in configs]
            for cfg, fut in zip(configs, futures):
                try:
                    results.append(fut.result())
                except RdchError as exc:
                    raise SweepMemberError(
                        f"{label} member failed: {exc}", report
                    ) from exc
        return results
    for cfg in configs:
        try:
            results.append(run(cfg, write_outputs=False))
        except RdchError as exc:
            raise SweepMemberError(f"{label} member failed: {exc}", report) from exc
    return results


def _run_member_nowrite(cfg):
    return run(cfg, write_outputs=False)


_SWEEP_WORKERS = 1


def set_sweep_workers(n: int) -> None:
    """Worker-pool size for sweep members (each run is fully independent)."""
    global _SWEEP_WORKERS
    if n < 1:
        raise DomainError("worker count must be at least 1")
    _SWEEP_WORKERS = n


def sigma_sweep(base: cfgmod.RunConfig, sigmas, outdir=None, t_end=None) -> SweepReport:
    """Relaxation-parameter convergence study against a small-sigma reference."""
    sigmas = [float(s) for s in sigmas]
    if any(s2 >= s1 for s1, s2 in zip(sigmas, sigmas[1:])):
        raise DomainError("sigma values must be strictly decreasing")
    beta = 1.0 - base.nstar
    for s in sigmas:
        if not (s / base.gamma) * beta < 1.0:
            raise DomainError(f"sigma={s} violates the contraction bound")
    sigma_ref = sigmas[-1] / 10.0

    dt_fixed = stable_dt_estimate(
        base.L, base.N, base.gamma, sigma_ref, base.eps, base.nstar
    )
    report = SweepReport("sigma", [], [], [], [], [], sigma_ref, [], False, dt_fixed, {})

    member_cfgs = [
        _sweep_member_cfg(base, {"params.sigma": s}, dt_fixed, t_end)
        for s in [sigma_ref] + sigmas
    ]
    outs = _run_members(member_cfgs, report, "sigma")
    ref, members = outs[0], outs[1:]
    h = base.L / base.N

    for s, res in zip(sigmas, members):
        report.values.append(s)
        report.errors.append(_l2_diff(res.state.n.values, ref.state.n.values, h))
        report.runtimes.append(res.runtime_s)
        report.accepted.append(res.accepted)
        report.rejected.append(res.rejected)

    report.values.append(sigma_ref)
    report.errors.append(0.0)
    report.runtimes.append(ref.runtime_s)
    report.accepted.append(ref.accepted)
    report.rejected.append(ref.rejected)

    errs = report.errors[: len(sigmas)]
    report.ratios = [b / a for a, b in zip(errs, errs[1:]) if a > 0]
    report.monotone_decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
        report.write_csv(os.path.join(outdir, "sweep_sigma.csv"))
    return report


def eps_sweep(base: cfgmod.RunConfig, epsilons, outdir=None, t_end=None) -> SweepReport:
    """Regularization sweep; reports errors vs the smallest-eps member and the
    magnitude of bound violations along each trajectory."""
    epsilons = [float(e) for e in epsilons]
    if any(e2 >= e1 for e1, e2 in zip(epsilons, epsilons[1:])):
        raise DomainError("eps values must be strictly decreasing")
    for e in epsilons:
        if not (pot.EPS_MIN <= e <= pot.EPS_MAX):
            raise DomainError(f"eps={e} outside admissible range")

    dt_fixed = min(
        stable_dt_estimate(base.L, base.N, base.gamma, base.sigma, e, base.nstar)
        for e in epsilons
    )
    report = SweepReport(
        "eps", [], [], [], [], [], epsilons[-1], [], False, dt_fixed,
        {"violation_low": [], "violation_high": []},
    )

    member_cfgs = [
        _sweep_member_cfg(base, {"params.eps": e}, dt_fixed, t_end) for e in epsilons
    ]
    results = _run_members(member_cfgs, report, "eps")

    ref = results[-1]
    h = base.L / base.N
    for e, res in zip(epsilons, results):
        report.values.append(e)
        report.errors.append(_l2_diff(res.state.n.values, ref.state.n.values, h))
        report.runtimes.append(res.runtime_s)
        report.accepted.append(res.accepted)
        report.rejected.append(res.rejected)
        report.extras["violation_low"].append(max(0.0, -res.nmin_traj))
        report.extras["violation_high"].append(max(0.0, res.nmax_traj - 1.0))

    errs = report.errors[:-1]
    report.ratios = [b / a for a, b in zip(errs, errs[1:]) if a > 0]
    report.monotone_decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    if outdir is not None:
        os.makedirs(outdir, exist_ok=True)
        report.write_csv(os.path.join(outdir, "sweep_eps.csv"))
        with open(os.path.join(outdir, "sweep_eps_violations.csv"), "w") as fh:
            fh.write("eps,violation_low,violation_high\n")
            for e, lo, hi in zip(
                report.values,
                report.extras["violation_low"],
                report.extras["violation_high"],
            ):
                fh.write(f"{e:.17g},{lo:.17g},{hi:.17g}\n")
    return report
