import os

import numpy as np
import pytest

from rdch import cli
from rdch import config as cfgmod
from rdch import harness
from rdch.errors import CheckpointError
from rdch.grid import Field, Grid1D


def make_cfg(**kv):
    base = {
        "grid.N": "64",
        "potential.nstar": "0.7",
        "params.gamma": "1e-3",
        "params.sigma": "1e-4",
        "init.kind": "cosine",
        "init.m": "0.5",
        "init.a": "0.01",
        "run.t_end": "0.001",
        "scheme.dt0": "1e-6",
        "scheme.dt_min": "1e-13",
        "scheme.dt_max": "1e-6",
        "steady.enabled": "false",
        "output.diagnostics_stride": "10",
    }
    base.update({k: str(v) for k, v in kv.items()})
    return cfgmod.from_mapping(base, apply_env=False)


class TestRun:
    def test_constant_data_stays_put(self, tmp_path):
        cfg = make_cfg(**{"init.kind": "constant", "init.m": 0.4,
                          "steady.enabled": "true", "run.t_end": "0.01"})
        res = harness.run(cfg, outdir=str(tmp_path / "out"))
        assert np.max(np.abs(res.state.n.values - 0.4)) <= 1e-12
        assert np.all(res.records[:, 5] <= 1e-13)  # flux_l2 ~ 0 from step 0
        assert res.status == "steady"
        assert res.steady.kind == "constant"

    def test_outputs_written(self, tmp_path):
        out = tmp_path / "out"
        cfg = make_cfg(**{"output.snapshot_stride": "500"})
        res = harness.run(cfg, outdir=str(out))
        assert (out / "diagnostics.csv").exists()
        assert (out / "snap_0.dat").exists()
        assert (out / f"snap_{res.state.step_index}.dat").exists()
        assert (out / "snap_500.dat").exists()
        header = (out / "diagnostics.csv").read_text().splitlines()[0]
        assert header == "t,mass,energy,dissipation,entropy,flux_l2,n_min,n_max,fp_iterations,dt"

    def test_records_align_with_stride(self, tmp_path):
        cfg = make_cfg()
        res = harness.run(cfg, write_outputs=False)
        # initial row + every 10th accepted step + final step
        assert res.records[0, 0] == 0.0
        assert res.accepted == 1000
        assert len(res.records) == 1 + 100

    def test_mass_and_energy_report(self):
        cfg = make_cfg()
        res = harness.run(cfg, write_outputs=False)
        assert abs(res.mass_drift) <= 1e-12
        assert res.energy_drop >= 0.0
        assert np.isfinite(res.final_flux)

    def test_determinism_same_config(self, tmp_path):
        cfg = make_cfg()
        a = harness.run(cfg, outdir=str(tmp_path / "a"))
        b = harness.run(cfg, outdir=str(tmp_path / "b"))
        assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == (
            tmp_path / "b" / "diagnostics.csv"
        ).read_bytes()
        assert np.array_equal(a.state.n.values, b.state.n.values)


class TestSteadyDetection:
    def _records(self, rows, flux, e, nmin=0.4, nmax=0.4):
        rec = np.zeros((rows, 10))
        rec[:, 0] = np.arange(rows)
        rec[:, 2] = e
        rec[:, 5] = flux
        rec[:, 6] = nmin
        rec[:, 7] = nmax
        return rec

    def test_needs_window(self):
        rec = self._records(10, 1e-12, 1.0)
        rep = harness.detect_steady_state(rec, 1e-8, 1e-12, window=50)
        assert rep.status == "inconclusive"

    def test_flux_gate(self):
        rec = self._records(60, 1e-5, 1.0)
        rep = harness.detect_steady_state(rec, 1e-8, 1e-12, window=50)
        assert rep.status == "inconclusive"

    def test_energy_gate(self):
        rec = self._records(60, 1e-12, 1.0)
        rec[:, 2] = 1.0 + 1e-6 * np.arange(60)
        rep = harness.detect_steady_state(rec, 1e-8, 1e-12, window=50)
        assert rep.status == "inconclusive"

    def test_constant_classification(self):
        rec = self._records(60, 1e-12, 1.0)
        rep = harness.detect_steady_state(rec, 1e-8, 1e-12, window=50)
        assert rep.status == "steady" and rep.kind == "constant"

    def test_aggregate_classification_with_field(self):
        grid = Grid1D(1.0, 256)
        x = grid.cell_centers()
        v = 0.7 * 0.5 * (np.tanh((x - 0.3) / 0.02) - np.tanh((x - 0.7) / 0.02))
        rec = self._records(60, 1e-12, 1.0, nmin=float(v.min()), nmax=float(v.max()))
        rep = harness.detect_steady_state(rec, 1e-8, 1e-12, window=50,
                                          final_field=Field(grid, v))
        assert rep.status == "steady" and rep.kind == "aggregate"
        assert rep.plateau_count >= 2
        # tanh 10-90 rise of this profile is about 2.2 * width
        assert rep.interface_width == pytest.approx(0.044, rel=0.2)

    def test_interface_widths_synthetic(self):
        x = np.linspace(0, 1, 2001)
        v = 0.5 * (np.tanh((x - 0.5) / 0.01) + 1.0)
        widths = harness.interface_widths(x, v, 0.1, 0.9)
        assert len(widths) == 1
        assert widths[0] == pytest.approx(0.01 * (np.arctanh(0.8) - np.arctanh(-0.8)), rel=0.02)

    def test_plateau_count(self):
        v = np.concatenate([np.zeros(20), np.full(30, 0.995), np.full(10, 0.5),
                            np.full(20, 0.003)])
        assert harness.count_plateaus(v) == 3


class TestCheckpoint:
    def test_round_trip_bitwise_and_split_determinism(self, tmp_path):
        cfg = make_cfg(**{"run.t_end": "0.002"})
        full = harness.run(cfg, outdir=str(tmp_path / "full"))

        # cut at an accepted-step boundary: the resumed run then replays the
        # exact arithmetic sequence of the uninterrupted one
        cfg_half = cfg.with_updates({"run.max_steps": 900})
        half = harness.run(cfg_half, outdir=str(tmp_path / "half"))
        assert half.status == "max_steps"
        ck = tmp_path / "state.npz"
        # the checkpoint carries the full-horizon config
        harness.write_checkpoint(ck, half, cfg, half.accept_streak,
                                 half.energy_slack, half.energy0)
        resumed = harness.run_from_checkpoint(ck, outdir=str(tmp_path / "resumed"))
        assert np.array_equal(resumed.state.n.values, full.state.n.values)
        assert np.array_equal(resumed.state.phi.values, full.state.phi.values)

        full_rows = (tmp_path / "full" / "diagnostics.csv").read_text().splitlines()
        res_rows = (tmp_path / "resumed" / "diagnostics.csv").read_text().splitlines()
        t_cut = half.state.t
        tail = [r for r in full_rows[1:] if float(r.split(",")[0]) > t_cut]
        assert res_rows[1:] == tail

    def test_restore_refuses_config_mismatch(self, tmp_path):
        cfg = make_cfg()
        res = harness.run(cfg, write_outputs=False)
        ck = tmp_path / "c.npz"
        harness.write_checkpoint(ck, res, cfg, res.accept_streak,
                                 res.energy_slack, res.energy0)
        other = make_cfg(**{"params.gamma": "2e-3"})
        with pytest.raises(CheckpointError, match="does not match"):
            harness.read_checkpoint(ck, expected_cfg=other)

    def test_restore_refuses_corrupt_file(self, tmp_path):
        bad = tmp_path / "bad.npz"
        bad.write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            harness.read_checkpoint(bad)


class TestSweeps:
    def test_sigma_sweep_constant_data_all_zero(self):
        cfg = make_cfg(**{"init.kind": "constant", "init.m": 0.4,
                          "run.t_end": "0.0005"})
        rep = harness.sigma_sweep(cfg, [2e-4, 1e-4], t_end=0.0005)
        assert all(e <= 1e-13 for e in rep.errors)
        assert rep.reference_value == pytest.approx(1e-5)
        assert rep.values[-1] == rep.reference_value and rep.errors[-1] == 0.0

    def test_sigma_sweep_validates_order(self):
        cfg = make_cfg()
        with pytest.raises(Exception, match="decreasing"):
            harness.sigma_sweep(cfg, [1e-4, 2e-4])

    def test_eps_sweep_reference_zero_and_csv(self, tmp_path):
        cfg = make_cfg(**{"run.t_end": "0.0005"})
        rep = harness.eps_sweep(cfg, [3e-2, 1e-2], outdir=str(tmp_path),
                                t_end=0.0005)
        assert rep.errors[-1] == 0.0
        csv = (tmp_path / "sweep_eps.csv").read_text().splitlines()
        assert csv[0] == "param,error_l2,runtime_s,accepted_steps,rejected_steps"
        assert len(csv) == 3
        assert (tmp_path / "sweep_eps_violations.csv").exists()

    def test_entropy_monotone_in_eps_at_fixed_profile(self):
        # entropy of the same initial data rises as eps shrinks
        from rdch import diagnostics as diag

        cfg = make_cfg()
        vals = cfgmod.initial_condition(cfg)
        entropies = []
        for eps in (1e-1, 3e-2, 1e-2):
            model = harness.build_model(cfg.with_updates({"params.eps": eps}))
            entropies.append(diag.entropy_arrays(vals, model.grid.h, model))
        assert entropies[0] < entropies[1] < entropies[2]

    def test_stable_dt_estimate_behaviour(self):
        a = harness.stable_dt_estimate(1.0, 128, 1e-3, 1e-4, 1e-2, 0.7)
        b = harness.stable_dt_estimate(1.0, 128, 1e-3, 1e-6, 1e-2, 0.7)
        c = harness.stable_dt_estimate(1.0, 256, 1e-3, 1e-4, 1e-2, 0.7)
        assert a > 0 and b > 0
        assert b < a  # smaller sigma is stiffer
        assert c < a  # finer grid is stiffer


class TestCLI:
    def test_run_and_report(self, tmp_path, capsys):
        p = tmp_path / "run.cfg"
        p.write_text(
            "grid.N=64\nrun.t_end=0.0005\nscheme.dt0=1e-6\nscheme.dt_max=1e-6\n"
            "scheme.dt_min=1e-12\nsteady.enabled=false\npotential.nstar=0.7\n"
        )
        rc = cli.main(["run", str(p), "--out", str(tmp_path / "out")])
        out = capsys.readouterr().out
        assert rc == 0
        assert "mass drift" in out and "final flux_l2" in out

    def test_checkpoint_restore_cycle(self, tmp_path, capsys):
        p = tmp_path / "run.cfg"
        p.write_text(
            "grid.N=64\nrun.t_end=0.001\nscheme.dt0=1e-6\nscheme.dt_max=1e-6\n"
            "scheme.dt_min=1e-12\nsteady.enabled=false\npotential.nstar=0.7\n"
        )
        ck = tmp_path / "c.npz"
        rc = cli.main(["checkpoint", str(p), "--out", str(ck), "--at-step", "500"])
        assert rc == 0 and ck.exists()
        rc = cli.main(["restore", str(ck), "--t-end", "0.001",
                       "--out", str(tmp_path / "resumed")])
        assert rc == 0
        assert (tmp_path / "resumed" / "diagnostics.csv").exists()

    def test_sweep_sigma_cli(self, tmp_path, capsys):
        p = tmp_path / "run.cfg"
        p.write_text(
            "grid.N=64\nrun.t_end=0.0005\ninit.kind=constant\ninit.m=0.4\n"
            "potential.nstar=0.7\nsteady.enabled=false\n"
        )
        rc = cli.main(["sweep-sigma", str(p), "--values", "2e-4,1e-4",
                       "--out", str(tmp_path / "sw"), "--t-end", "0.0005"])
        assert rc == 0
        assert (tmp_path / "sw" / "sweep_sigma.csv").exists()

    def test_config_error_reported(self, tmp_path, capsys):
        p = tmp_path / "run.cfg"
        p.write_text("grid.N=4\n")
        rc = cli.main(["run", str(p)])
        assert rc == 1
        assert "grid.N" in capsys.readouterr().err


class TestModesThroughRun:
    def test_u_formulation_run_matches_explicit(self):
        base = make_cfg(**{"run.t_end": "0.0005"})
        res_e = harness.run(base, write_outputs=False)
        res_u = harness.run(base.with_updates({"scheme.mode": "u_formulation"}),
                            write_outputs=False)
        dev = np.max(np.abs(res_e.state.n.values - res_u.state.n.values))
        assert dev <= 1e-9

    def test_semi_implicit_run_completes(self):
        cfg = make_cfg(**{"scheme.mode": "semi_implicit", "run.t_end": "0.001",
                          "scheme.dt0": "5e-5", "scheme.dt_max": "5e-5",
                          "scheme.dt_min": "1e-12"})
        res = harness.run(cfg, write_outputs=False)
        assert res.status == "t_end"
        assert abs(res.mass_drift) <= 1e-12
        de = np.diff(res.records[:, 2])
        assert np.all(de <= res.energy_slack + 1e-16)


class TestGoldenSpinodal:
    def test_aggregates_form_with_plateaus(self):
        # fast deep-quench run: plateaus near the empty phase appear, the peak
        # sits in the well region near nstar, and energy strictly decreases
        cfg = cfgmod.from_mapping(
            {
                "grid.N": "128",
                "potential.nstar": "0.7",
                "params.gamma": "4e-4",
                "params.sigma": "4e-5",
                "params.eps": "1e-2",
                "init.kind": "cosine",
                "init.m": "0.3",
                "init.a": "0.01",
                "init.j": "2",
                "run.t_end": "4.0",
                "steady.enabled": "false",
            },
            apply_env=False,
        )
        res = harness.run(cfg, write_outputs=False)
        v = res.state.n.values
        assert v.max() - v.min() > 0.3  # decidedly non-constant
        assert np.any(v < 1e-2)  # empty-phase plateau
        assert 0.5 < v.max() < 0.75  # peak in the well region near nstar
        assert res.records[-1, 2] < res.energy0 - 1e-3  # strict energy drop


class TestSweepWorkers:
    def test_parallel_members_match_serial(self):
        cfg = make_cfg(**{"run.t_end": "0.0005"})
        serial = harness.eps_sweep(cfg, [3e-2, 1e-2], t_end=0.0005)
        harness.set_sweep_workers(2)
        try:
            parallel = harness.eps_sweep(cfg, [3e-2, 1e-2], t_end=0.0005)
        finally:
            harness.set_sweep_workers(1)
        assert parallel.errors == serial.errors
        assert parallel.extras == serial.extras


class TestLargeMassConstant:
    def test_high_mean_density_relaxes_to_constant(self):
        # mean above the well puts the constant state in the stable range
        cfg = cfgmod.from_mapping(
            {
                "grid.N": "64",
                "potential.nstar": "0.7",
                "params.gamma": "1e-3",
                "params.sigma": "1e-4",
                "init.kind": "cosine",
                "init.m": "0.85",
                "init.a": "0.01",
                "run.t_end": "15.0",
                "steady.enabled": "true",
            },
            apply_env=False,
        )
        res = harness.run(cfg, write_outputs=False)
        assert res.status == "steady"
        assert res.steady.kind == "constant"
        mean = res.records[0, 1] / cfg.L
        assert np.max(np.abs(res.state.n.values - mean)) < 1e-6
