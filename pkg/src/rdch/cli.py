"""Command-line interface: run, sweeps, steady classification, checkpointing."""

from __future__ import annotations

import argparse
import sys

from . import config as cfgmod
from . import harness
from .errors import RdchError


def _parse_overrides(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _load(args) -> cfgmod.RunConfig:
    return cfgmod.from_file(args.config, overrides=_parse_overrides(args.set))


def _print_run_report(res: harness.RunResult) -> None:
    print(f"status           : {res.status}")
    print(f"t final          : {res.state.t:.17g}")
    print(f"accepted steps   : {res.accepted}")
    print(f"rejected steps   : {res.rejected}")
    print(f"mass drift       : {res.mass_drift:.3e}")
    print(f"total energy drop: {res.energy_drop:.6g}")
    print(f"final flux_l2    : {res.final_flux:.3e}")
    print(f"density range    : [{res.nmin_traj:.6g}, {res.nmax_traj:.6g}] over trajectory")
    if res.steady is not None and res.steady.status == "steady":
        print(f"steady state     : {res.steady.kind}")
        if res.steady.kind == "aggregate":
            print(f"  plateaus       : {res.steady.plateau_count}")
            print(f"  interface width: {res.steady.interface_width:.6g}")
    print(f"runtime          : {res.runtime_s:.2f} s")
    if res.csv_path:
        print(f"diagnostics CSV  : {res.csv_path}")


def _values_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rdch",
        description="Relaxed degenerate Cahn-Hilliard laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one configuration")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (default: output.dir)")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_run.add_argument("--checkpoint", default=None, help="write final checkpoint here")

    p_ss = sub.add_parser("sweep-sigma", help="relaxation-parameter convergence study")
    p_ss.add_argument("config")
    p_ss.add_argument("--values", required=True, help="comma-separated decreasing sigmas")
    p_ss.add_argument("--out", default=None)
    p_ss.add_argument("--t-end", type=float, default=None)
    p_ss.add_argument("--workers", type=int, default=1)
    p_ss.add_argument("--set", action="append", metavar="KEY=VALUE")

    p_se = sub.add_parser("sweep-eps", help="regularization convergence study")
    p_se.add_argument("config")
    p_se.add_argument("--values", required=True, help="comma-separated decreasing epsilons")
    p_se.add_argument("--out", default=None)
    p_se.add_argument("--t-end", type=float, default=None)
    p_se.add_argument("--workers", type=int, default=1)
    p_se.add_argument("--set", action="append", metavar="KEY=VALUE")

    p_st = sub.add_parser("steady", help="run to steady state and classify it")
    p_st.add_argument("config")
    p_st.add_argument("--out", default=None)
    p_st.add_argument("--set", action="append", metavar="KEY=VALUE")

    p_ck = sub.add_parser("checkpoint", help="run and write a checkpoint")
    p_ck.add_argument("config")
    p_ck.add_argument("--out", required=True, help="checkpoint file (.npz)")
    p_ck.add_argument("--at-step", type=int, default=None,
                      help="stop after this many accepted steps so that a "
                           "resumed run reproduces the uninterrupted one "
                           "bit for bit (default: run to t_end)")
    p_ck.add_argument("--set", action="append", metavar="KEY=VALUE")

    p_rs = sub.add_parser("restore", help="resume from a checkpoint")
    p_rs.add_argument("checkpoint")
    p_rs.add_argument("--t-end", type=float, default=None)
    p_rs.add_argument("--out", default=None)
    p_rs.add_argument("--config", default=None,
                      help="optional config to verify against the checkpoint")

    p_b = sub.add_parser("bench", help="compare compiled and pure stepping kernels")
    p_b.add_argument("--n", type=int, default=256)
    p_b.add_argument("--steps", type=int, default=20000)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load(args)
            res = harness.run(cfg, outdir=args.out)
            _print_run_report(res)
            if args.checkpoint:
                harness.write_checkpoint(
                    args.checkpoint, res, cfg, res.accept_streak,
                    res.energy_slack, res.energy0,
                )
                print(f"checkpoint       : {args.checkpoint}")
        elif args.command == "sweep-sigma":
            cfg = _load(args)
            harness.set_sweep_workers(args.workers)
            rep = harness.sigma_sweep(cfg, _values_list(args.values),
                                      outdir=args.out or cfg.outdir, t_end=args.t_end)
            print(f"reference sigma  : {rep.reference_value:.6g} (fixed dt {rep.dt_fixed:.3e})")
            for v, e in zip(rep.values, rep.errors):
                print(f"  sigma={v:<12.6g} error_l2={e:.6e}")
            print(f"monotone decreasing: {rep.monotone_decreasing}")
        elif args.command == "sweep-eps":
            cfg = _load(args)
            harness.set_sweep_workers(args.workers)
            rep = harness.eps_sweep(cfg, _values_list(args.values),
                                    outdir=args.out or cfg.outdir, t_end=args.t_end)
            print(f"reference eps    : {rep.reference_value:.6g} (fixed dt {rep.dt_fixed:.3e})")
            for v, e, lo, hi in zip(rep.values, rep.errors,
                                    rep.extras["violation_low"],
                                    rep.extras["violation_high"]):
                print(f"  eps={v:<12.6g} error_l2={e:.6e} "
                      f"undershoot={lo:.3e} overshoot={hi:.3e}")
            print(f"monotone decreasing: {rep.monotone_decreasing}")
        elif args.command == "steady":
            cfg = _load(args)
            res = harness.run(cfg, outdir=args.out)
            _print_run_report(res)
            if res.steady is None or res.steady.status != "steady":
                print("steady state     : inconclusive (t_end reached first)")
        elif args.command == "checkpoint":
            cfg = _load(args)
            run_cfg = cfg
            if args.at_step is not None:
                run_cfg = cfg.with_updates({"run.max_steps": args.at_step})
            res = harness.run(run_cfg, outdir=None, write_outputs=False)
            harness.write_checkpoint(
                args.out, res, cfg, res.accept_streak, res.energy_slack, res.energy0
            )
            print(f"checkpoint written at t={res.state.t:.17g} "
                  f"(step {res.state.step_index}): {args.out}")
        elif args.command == "restore":
            expected = None
            if args.config is not None:
                expected = cfgmod.from_file(args.config)
                harness.read_checkpoint(args.checkpoint, expected)
            res = harness.run_from_checkpoint(args.checkpoint, t_end=args.t_end,
                                              outdir=args.out)
            _print_run_report(res)
        elif args.command == "bench":
            from .bench import run_benchmark

            run_benchmark(n=args.n, steps=args.steps)
    except RdchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
