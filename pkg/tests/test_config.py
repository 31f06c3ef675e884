import numpy as np
import pytest

from rdch import config as cfgmod
from rdch.errors import ConfigError


def make(d=None, **overrides):
    base = {} if d is None else dict(d)
    base.update(overrides)
    return cfgmod.from_mapping({k: str(v) for k, v in base.items()}, apply_env=False)


class TestParsing:
    def test_defaults_load(self):
        cfg = make()
        assert cfg.N == 256
        assert cfg.gamma == 1e-3

    def test_file_round_trip(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("grid.N=64\nparams.gamma=0.5  # comment\n\n# full comment\n")
        cfg = cfgmod.from_file(p, apply_env=False)
        assert cfg.N == 64 and cfg.gamma == 0.5

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            make({"grid.M": 10})

    def test_bad_line_rejected(self):
        with pytest.raises(ConfigError, match="key=value"):
            cfgmod.from_text("grid.N 64\n", apply_env=False)

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("RDCH_GRID_N", "96")
        cfg = cfgmod.from_mapping({}, apply_env=True)
        assert cfg.N == 96

    def test_explicit_override_beats_env(self, monkeypatch):
        monkeypatch.setenv("RDCH_GRID_N", "96")
        cfg = cfgmod.from_mapping({}, apply_env=True, overrides={"grid.N": "128"})
        assert cfg.N == 128

    def test_canonical_text_round_trip(self):
        cfg = make({"params.gamma": 2.5e-4, "init.kind": "noise", "init.lo": 0.1,
                    "init.hi": 0.6})
        again = cfgmod.from_text(cfg.canonical_text(), apply_env=False)
        assert again.canonical_text() == cfg.canonical_text()
        assert again.gamma == cfg.gamma

    def test_with_updates(self):
        cfg = make()
        cfg2 = cfg.with_updates({"params.sigma": 5e-5})
        assert cfg2.sigma == 5e-5
        assert cfg.sigma == 1e-4


CONSTRAINT_CASES = [
    ({"grid.L": -1.0}, "grid.L"),
    ({"grid.N": 4}, "grid.N"),
    ({"potential.nstar": 0.8}, "nstar"),
    ({"potential.nstar": 0.0}, "nstar"),
    ({"potential.kind": "double_well"}, "potential.kind"),
    ({"mobility.kind": "exp"}, "mobility.kind"),
    ({"params.gamma": 0.0}, "gamma"),
    ({"params.sigma": -1.0}, "sigma"),
    ({"params.eps": 0.5}, "eps"),
    ({"params.eps": 1e-12}, "eps"),
    ({"params.sigma": 5.0, "params.gamma": 1.0, "potential.nstar": 0.3}, "contraction"),
    ({"scheme.mode": "imex"}, "scheme.mode"),
    ({"scheme.dt0": -1e-6}, "dt0"),
    ({"scheme.dt0": 1e-6, "scheme.dt_min": 1e-3}, "dt_min"),
    ({"scheme.dt0": 1e-2, "scheme.dt_max": 1e-6}, "dt_max|dt0"),
    ({"scheme.fp_tol": 0.0}, "fp_tol"),
    ({"scheme.fp_maxiter": 0}, "fp_maxiter"),
    ({"run.t_end": 0.0}, "t_end"),
    ({"output.diagnostics_stride": 0}, "diagnostics_stride"),
    ({"output.snapshot_stride": -1}, "snapshot_stride"),
    ({"steady.window": 1}, "window"),
    ({"steady.tol_flux": 0.0}, "tolerances"),
    ({"init.kind": "square"}, "init.kind"),
    ({"init.kind": "constant", "init.m": 1.2}, r"\[0, 1\)"),
    ({"init.kind": "cosine", "init.m": 0.99, "init.a": 0.05}, r"\[0, 1\)"),
    ({"init.kind": "tanh", "init.width": -0.1}, "init.width"),
]


class TestValidation:
    @pytest.mark.parametrize("overrides,match", CONSTRAINT_CASES)
    def test_each_constraint_has_specific_message(self, overrides, match):
        with pytest.raises(ConfigError, match=match):
            make(overrides)


class TestInitialConditions:
    def test_constant(self):
        vals = cfgmod.initial_condition(make({"init.kind": "constant", "init.m": 0.3}))
        assert np.all(vals == 0.3)

    def test_cosine(self):
        cfg = make({"init.kind": "cosine", "init.m": 0.5, "init.a": 0.1, "init.j": 2})
        vals = cfgmod.initial_condition(cfg)
        x = (np.arange(cfg.N) + 0.5) / cfg.N
        assert np.allclose(vals, 0.5 + 0.1 * np.cos(2 * np.pi * x))

    def test_tanh_two_plateau(self):
        cfg = make({"init.kind": "tanh", "init.lo": 0.05, "init.hi": 0.8,
                    "init.x1": 0.3, "init.x2": 0.7, "init.width": 0.02})
        vals = cfgmod.initial_condition(cfg)
        x = (np.arange(cfg.N) + 0.5) / cfg.N
        assert vals[np.argmin(np.abs(x - 0.5))] == pytest.approx(0.8, abs=1e-3)
        assert vals[0] == pytest.approx(0.05, abs=1e-3)

    def test_noise_seeded_and_bounded(self):
        cfg = make({"init.kind": "noise", "init.lo": 0.1, "init.hi": 0.7,
                    "init.seed": 42})
        a = cfgmod.initial_condition(cfg)
        b = cfgmod.initial_condition(cfg)
        assert np.array_equal(a, b)
        assert a.min() == pytest.approx(0.1) and a.max() == pytest.approx(0.7)
        other = cfgmod.initial_condition(
            make({"init.kind": "noise", "init.lo": 0.1, "init.hi": 0.7,
                  "init.seed": 43})
        )
        assert not np.array_equal(a, other)

    def test_noise_is_smoothed(self):
        cfg = make({"init.kind": "noise", "init.lo": 0.1, "init.hi": 0.7,
                    "init.seed": 1, "init.smooth_passes": 25})
        vals = cfgmod.initial_condition(cfg)
        jumps = np.abs(np.diff(vals))
        assert np.max(jumps) < 0.2
