"""Run configuration: flat key=value text with section prefixes.

Example::

    grid.N=256
    params.gamma=1e-3
    init.kind=cosine

Any key can be overridden by an environment variable with the RDCH_ prefix
(dots become underscores, uppercased): grid.N -> RDCH_GRID_N.  Every
constraint violation raises ConfigError with a message naming the key.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import potentials as pot
from .errors import ConfigError
from .grid import Grid1D
from .stepper import StepMode

ENV_PREFIX = "RDCH_"

_AUTO = "auto"


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float_or_auto(s: str):
    if s.strip().lower() == _AUTO:
        return None
    return float(s)


def _fmt(v) -> str:
    if v is None:
        return _AUTO
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, StepMode):
        return v.value
    return str(v)


# key -> (parser, default)
SCHEMA: dict[str, tuple] = {
    "grid.L": (float, 1.0),
    "grid.N": (int, 256),
    "potential.nstar": (float, 0.3),
    "potential.k": (float, 1.0),
    "potential.kind": (str, "single_well_log"),
    "mobility.kind": (str, "polynomial"),
    "params.gamma": (float, 1.0e-3),
    "params.sigma": (float, 1.0e-4),
    "params.eps": (float, 1.0e-2),
    "scheme.mode": (str, "explicit"),
    "scheme.regularize": (_parse_bool, True),
    "scheme.dt0": (_parse_float_or_auto, None),
    "scheme.dt_min": (_parse_float_or_auto, None),
    "scheme.dt_max": (_parse_float_or_auto, None),
    "scheme.energy_slack": (_parse_float_or_auto, None),
    "scheme.fp_tol": (float, 1.0e-12),
    "scheme.fp_maxiter": (int, 200),
    "scheme.stabilization": (_parse_float_or_auto, None),
    "init.kind": (str, "cosine"),
    "init.m": (float, 0.5),
    "init.a": (float, 0.01),
    "init.j": (int, 1),
    "init.lo": (float, 0.05),
    "init.hi": (float, 0.9),
    "init.x1": (float, 0.25),
    "init.x2": (float, 0.75),
    "init.width": (float, 0.05),
    "init.seed": (int, 1234),
    "init.smooth_passes": (int, 10),
    "run.t_end": (float, 1.0),
    "run.max_steps": (int, 200_000_000),
    "output.dir": (str, "out"),
    "output.snapshot_stride": (int, 0),
    "output.diagnostics_stride": (int, 10),
    "steady.enabled": (_parse_bool, True),
    "steady.tol_flux": (float, 1.0e-8),
    "steady.tol_energy": (float, 1.0e-12),
    "steady.window": (int, 50),
}


@dataclass(frozen=True)
class RunConfig:
    values: tuple  # canonical ordered (key, parsed value) pairs

    def get(self, key: str):
        for k, v in self.values:
            if k == key:
                return v
        raise KeyError(key)

    # frequently used accessors
    @property
    def L(self):
        return self.get("grid.L")

    @property
    def N(self):
        return self.get("grid.N")

    @property
    def gamma(self):
        return self.get("params.gamma")

    @property
    def sigma(self):
        return self.get("params.sigma")

    @property
    def eps(self):
        return self.get("params.eps")

    @property
    def nstar(self):
        return self.get("potential.nstar")

    @property
    def k(self):
        return self.get("potential.k")

    @property
    def mode(self) -> StepMode:
        return StepMode(self.get("scheme.mode"))

    @property
    def t_end(self):
        return self.get("run.t_end")

    @property
    def outdir(self):
        return self.get("output.dir")

    def canonical_text(self) -> str:
        """Fully resolved key=value listing; stable fingerprint for checkpoints."""
        return "\n".join(f"{k}={_fmt(v)}" for k, v in self.values) + "\n"

    def to_dict(self) -> dict:
        return {k: v for k, v in self.values}

    def with_updates(self, updates: dict) -> "RunConfig":
        text = {k: _fmt(v) for k, v in self.values}
        for k, v in updates.items():
            text[k] = v if isinstance(v, str) else _fmt(v)
        return from_mapping(text, apply_env=False)


def _parse_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _env_name(key: str) -> str:
    return ENV_PREFIX + key.replace(".", "_").upper()


def from_mapping(mapping: dict, apply_env: bool = True, overrides: dict | None = None) -> RunConfig:
    unknown = set(mapping) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(mapping)
    if apply_env:
        for key in SCHEMA:
            env = os.environ.get(_env_name(key))
            if env is not None:
                merged[key] = env
    if overrides:
        bad = set(overrides) - set(SCHEMA)
        if bad:
            raise ConfigError(f"unknown override keys: {sorted(bad)}")
        merged.update(overrides)

    parsed = []
    for key, (parser, default) in SCHEMA.items():
        if key in merged:
            raw = merged[key]
            try:
                val = parser(raw) if isinstance(raw, str) else raw
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"config key {key}: cannot parse {raw!r} ({exc})") from exc
        else:
            val = default
        parsed.append((key, val))
    cfg = RunConfig(tuple(parsed))
    validate(cfg)
    return cfg


def from_text(text: str, apply_env: bool = True, overrides: dict | None = None) -> RunConfig:
    return from_mapping(_parse_text(text), apply_env=apply_env, overrides=overrides)


def from_file(path, apply_env: bool = True, overrides: dict | None = None) -> RunConfig:
    with open(path) as fh:
        return from_text(fh.read(), apply_env=apply_env, overrides=overrides)


def validate(cfg: RunConfig) -> None:
    """Reject every RunConfig constraint violation with a specific message."""
    if cfg.L <= 0:
        raise ConfigError("grid.L must be positive")
    if cfg.N < 8:
        raise ConfigError("grid.N must be at least 8")
    if not (0.0 < cfg.nstar <= pot.NSTAR_MAX):
        raise ConfigError(
            f"potential.nstar must lie in (0, {pot.NSTAR_MAX}] to keep the convex split convex"
        )
    if cfg.get("potential.kind") != "single_well_log":
        raise ConfigError("potential.kind must be 'single_well_log'")
    if cfg.get("mobility.kind") != "polynomial":
        raise ConfigError("mobility.kind must be 'polynomial'")
    if cfg.gamma <= 0:
        raise ConfigError("params.gamma must be positive")
    if cfg.sigma <= 0:
        raise ConfigError("params.sigma must be positive")
    if not (pot.EPS_MIN <= cfg.eps <= pot.EPS_MAX):
        raise ConfigError(f"params.eps must lie in [{pot.EPS_MIN}, {pot.EPS_MAX}]")
    beta = 1.0 - cfg.nstar
    if not (cfg.sigma / cfg.gamma) * beta < 1.0:
        raise ConfigError(
            "contraction condition violated: (sigma/gamma) * sup|psi_minus''| = "
            f"{(cfg.sigma / cfg.gamma) * beta:.6g} must be < 1"
        )
    try:
        StepMode(cfg.get("scheme.mode"))
    except ValueError:
        raise ConfigError(
            f"scheme.mode must be one of {[m.value for m in StepMode]}"
        ) from None
    dt0 = cfg.get("scheme.dt0")
    dt_min = cfg.get("scheme.dt_min")
    dt_max = cfg.get("scheme.dt_max")
    if dt0 is not None and dt0 <= 0:
        raise ConfigError("scheme.dt0 must be positive")
    if dt_min is not None and dt0 is not None and dt_min > dt0:
        raise ConfigError("scheme.dt_min must not exceed scheme.dt0")
    if dt_max is not None and dt0 is not None and dt0 > dt_max:
        raise ConfigError("scheme.dt0 must not exceed scheme.dt_max")
    if cfg.get("scheme.fp_tol") <= 0:
        raise ConfigError("scheme.fp_tol must be positive")
    if cfg.get("scheme.fp_maxiter") < 1:
        raise ConfigError("scheme.fp_maxiter must be at least 1")
    if cfg.t_end <= 0:
        raise ConfigError("run.t_end must be positive")
    if cfg.get("output.diagnostics_stride") < 1:
        raise ConfigError("output.diagnostics_stride must be at least 1")
    if cfg.get("output.snapshot_stride") < 0:
        raise ConfigError("output.snapshot_stride must be nonnegative")
    if cfg.get("steady.window") < 2:
        raise ConfigError("steady.window must be at least 2")
    if cfg.get("steady.tol_flux") <= 0 or cfg.get("steady.tol_energy") <= 0:
        raise ConfigError("steady tolerances must be positive")
    if cfg.get("init.kind") not in ("constant", "cosine", "tanh", "noise"):
        raise ConfigError("init.kind must be one of constant|cosine|tanh|noise")
    # building the profile also validates the [0, 1) sample range
    initial_condition(cfg)


def initial_condition(cfg: RunConfig) -> np.ndarray:
    """Build the initial density profile from the init.* DSL; samples in [0, 1)."""
    grid = Grid1D(cfg.L, cfg.N)
    x = grid.cell_centers()
    kind = cfg.get("init.kind")
    if kind == "constant":
        vals = np.full(cfg.N, cfg.get("init.m"))
    elif kind == "cosine":
        vals = cfg.get("init.m") + cfg.get("init.a") * np.cos(
            cfg.get("init.j") * np.pi * x / cfg.L
        )
    elif kind == "tanh":
        lo, hi = cfg.get("init.lo"), cfg.get("init.hi")
        x1, x2 = cfg.get("init.x1"), cfg.get("init.x2")
        width = cfg.get("init.width")
        if width <= 0:
            raise ConfigError("init.width must be positive")
        vals = lo + (hi - lo) * 0.5 * (
            np.tanh((x - x1) / width) - np.tanh((x - x2) / width)
        )
    elif kind == "noise":
        rng = np.random.default_rng(cfg.get("init.seed"))
        vals = rng.uniform(size=cfg.N)
        for _ in range(cfg.get("init.smooth_passes")):
            padded = np.concatenate(([vals[0]], vals, [vals[-1]]))
            vals = 0.25 * (padded[:-2] + 2.0 * padded[1:-1] + padded[2:])
        lo, hi = cfg.get("init.lo"), cfg.get("init.hi")
        span = vals.max() - vals.min()
        if span > 0:
            vals = lo + (hi - lo) * (vals - vals.min()) / span
        else:
            vals = np.full(cfg.N, 0.5 * (lo + hi))
    else:  # pragma: no cover - guarded by validate
        raise ConfigError(f"unknown init.kind {kind!r}")

    if np.any(vals < 0.0) or np.any(vals >= 1.0):
        raise ConfigError(
            "initial samples must lie in [0, 1); got range "
            f"[{vals.min():.6g}, {vals.max():.6g}]"
        )
    return vals
