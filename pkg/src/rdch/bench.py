"""Benchmark the compiled stepping kernel against the numpy fallback."""

from __future__ import annotations

import time

import numpy as np

from . import config as cfgmod
from . import kernels
from . import stepper
from .harness import _kernel_params, build_model, resolve_scheme


def _bench_config(n: int) -> cfgmod.RunConfig:
    return cfgmod.from_mapping(
        {
            "grid.N": str(n),
            "potential.nstar": "0.7",
            "params.gamma": "1e-3",
            "params.sigma": "1e-4",
            "init.kind": "cosine",
            "init.m": "0.5",
            "init.a": "0.01",
            "scheme.dt0": "1e-6",
            "scheme.dt_min": "1e-12",
            "scheme.dt_max": "1e-6",
            "run.t_end": "1e9",
            "steady.enabled": "false",
        },
        apply_env=False,
    )


def _time_backend(backend, cfg, steps: int) -> float:
    model = build_model(cfg)
    scheme = resolve_scheme(cfg, energy_slack=1.0e-12)
    state = stepper.initial_state(cfgmod.initial_condition(cfg), scheme, model)
    params = _kernel_params(cfg, scheme)
    records = np.empty((steps + 4, 10))
    n = np.array(state.n.values)
    phi = np.array(state.phi.values)
    t0 = time.perf_counter()
    backend.advance_explicit(
        n,
        phi,
        t=0.0,
        dt=scheme.dt0,
        step_index=0,
        accept_streak=0,
        params=params,
        max_accepted=steps,
        t_end=1.0e9,
        record_every=steps,
        records=records,
    )
    return time.perf_counter() - t0


def run_benchmark(n: int = 256, steps: int = 20000, quiet: bool = False) -> dict:
    cfg = _bench_config(n)
    out = {"n": n, "steps": steps, "compiled_available": kernels.compiled_available()}

    elapsed_pure = _time_backend(kernels.get_backend("pure"), cfg, steps)
    out["pure_s"] = elapsed_pure
    out["pure_steps_per_s"] = steps / elapsed_pure

    if out["compiled_available"]:
        elapsed_fast = _time_backend(kernels.get_backend("compiled"), cfg, steps)
        out["compiled_s"] = elapsed_fast
        out["compiled_steps_per_s"] = steps / elapsed_fast
        out["speedup"] = elapsed_pure / elapsed_fast

    if not quiet:
        print(f"explicit stepping benchmark: N={n}, {steps} accepted steps")
        print(f"  pure numpy : {out['pure_s']:8.3f} s  ({out['pure_steps_per_s']:10.0f} steps/s)")
        if out["compiled_available"]:
            print(
                f"  compiled   : {out['compiled_s']:8.3f} s  "
                f"({out['compiled_steps_per_s']:10.0f} steps/s)"
            )
            print(f"  speedup    : {out['speedup']:8.1f}x")
        else:
            print("  compiled   : extension not built")
    return out
