import csv
import json
import math

import pytest

from periorbit.cli import main

LN2 = math.log(2.0)

#: reduced sampling keeps the CLI integration tests quick; exit-code and
#: report semantics do not depend on the density
FAST_CHECKS = {"density": 1500, "refine_iters": 30}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return str(path)


def morse_config(n=3, gamma=1.0, epsilon=0.05, extra=None):
    doc = {
        "system": {
            "name": "morse-chain",
            "period": 1.0,
            "params": {"n": n, "gamma": gamma, "delta": 1.0, "a": LN2,
                       "epsilon": epsilon, "b": 1.5},
        },
        "checks": dict(FAST_CHECKS),
    }
    if extra:
        doc.update(extra)
    return doc


def pendulum_config(gammas=0.5):
    return {
        "system": {
            "name": "pendulum-chain",
            "period": 1.0,
            "params": {"pivots": [0.0, 2.5], "lengths": 1.0, "masses": 1.0,
                       "gammas": gammas, "kappa": 0.1,
                       "pivot_accel_amplitude": 0.2},
        },
        "checks": dict(FAST_CHECKS),
    }


def free_particle_config():
    return {
        "system": {
            "name": "generic",
            "period": 1.0,
            "blocks": [{"bounds": [[-5.0, 5.0]], "kind": "interval"}],
            "fields": [{"force": None,
                        "friction": {"expr": "0*p", "threshold": 1.0}}],
        },
        "checks": dict(FAST_CHECKS),
    }


class TestCheckCommand:
    def test_morse_applies_exit_zero(self, tmp_path):
        cfg = write_config(tmp_path, morse_config())
        out = tmp_path / "run"
        assert main(["check", "--config", cfg, "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["verdict"]["applies"] is True
        assert report["index"]["fixed_point_index"] == -1
        assert report["index"]["exit_set_char_oracle"] \
            == report["index"]["exit_set_char"]
        assert (out / "manifest.json").exists()

    def test_zero_friction_fails_h1_exit_one(self, tmp_path):
        cfg = write_config(tmp_path, pendulum_config(gammas=0.0))
        out = tmp_path / "run"
        assert main(["check", "--config", cfg, "--out", str(out)]) == 1
        report = json.loads((out / "report.json").read_text())
        assert report["verdict"]["applies"] is False
        assert "H1" in report["verdict"]["reasons"]

    def test_malformed_config_exit_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not valid json", encoding="utf-8")
        assert main(["check", "--config", str(bad),
                     "--out", str(tmp_path / "x")]) == 2

    def test_unknown_system_exit_two(self, tmp_path):
        cfg = write_config(tmp_path, {"system": {"name": "nonsense"}})
        assert main(["check", "--config", cfg,
                     "--out", str(tmp_path / "x")]) == 2

    def test_disjointness_violation_exit_two(self, tmp_path):
        doc = pendulum_config()
        doc["system"]["params"]["pivots"] = [0.0, 1.0]
        cfg = write_config(tmp_path, doc)
        assert main(["check", "--config", cfg,
                     "--out", str(tmp_path / "x")]) == 2

    def test_reports_are_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, morse_config(n=2))
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["check", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["check", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "report.json").read_bytes() \
            == (out2 / "report.json").read_bytes()
        assert (out1 / "manifest.json").read_bytes() \
            == (out2 / "manifest.json").read_bytes()

    def test_orbit_json_is_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, morse_config(n=2))
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["find-orbit", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["find-orbit", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "orbit.json").read_bytes() \
            == (out2 / "orbit.json").read_bytes()
        assert (out1 / "trajectory.csv").read_bytes() \
            == (out2 / "trajectory.csv").read_bytes()


class TestSimulateCommand:
    def test_free_particle_csv(self, tmp_path):
        doc = free_particle_config()
        doc["simulate"] = {"initial_state": [0.0, 1.0], "t_span": [0.0, 2.0]}
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "run"
        assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        with open(out / "trajectory.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[-1]["q_1"]) == pytest.approx(2.0, abs=1e-8)

    def test_state_outside_blocks_exit_two(self, tmp_path):
        doc = free_particle_config()
        doc["simulate"] = {"initial_state": [10.0, 0.0]}
        cfg = write_config(tmp_path, doc)
        assert main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / "x")]) == 2

    def test_periods_flag_and_caps_from_report(self, tmp_path):
        # seed-grid center, 10 periods: kinetic energies stay below the caps
        # on the whole computed trajectory
        cfg = write_config(tmp_path, morse_config(n=2))
        check_out = tmp_path / "chk"
        assert main(["check", "--config", cfg, "--out", str(check_out)]) == 0
        sim_out = tmp_path / "sim"
        assert main(["simulate", "--config", cfg, "--out", str(sim_out),
                     "--periods", "10",
                     "--report", str(check_out / "report.json")]) == 0
        with open(sim_out / "trajectory.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        report = json.loads((check_out / "report.json").read_text())
        caps = report["caps"]["caps"]
        for row in rows:
            assert float(row["T_1"]) <= caps[0] * (1 + 1e-9)
            assert float(row["T_2"]) <= caps[1] * (1 + 1e-9)


class TestFindOrbitCommand:
    def test_morse_orbit_exit_zero(self, tmp_path):
        cfg = write_config(tmp_path, morse_config(n=2))
        out = tmp_path / "run"
        assert main(["find-orbit", "--config", cfg, "--out", str(out)]) == 0
        orbit = json.loads((out / "orbit.json").read_text())
        assert orbit["converged"] is True
        assert orbit["residual"] < 1e-8
        assert orbit["interior"] is True
        assert orbit["verdict"]["applies"] is True
        assert (out / "trajectory.csv").exists()

    def test_gate_blocks_without_force(self, tmp_path):
        cfg = write_config(tmp_path, pendulum_config(gammas=0.0))
        out = tmp_path / "run"
        assert main(["find-orbit", "--config", cfg, "--out", str(out)]) == 1
        assert not (out / "orbit.json").exists()

    def test_force_searches_despite_failed_h1(self, tmp_path):
        # undamped forced oscillator: H1 fails, but the orbit still exists
        doc = {
            "system": {
                "name": "generic",
                "period": 1.0,
                "blocks": [{"bounds": [[-2.0, 2.0]], "kind": "interval"}],
                "fields": [{
                    "force": "sin(2*pi*t/T) - 4*q",
                    "friction": {"expr": "0*p", "threshold": 1.0},
                }],
            },
            "checks": dict(FAST_CHECKS),
        }
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "run"
        code = main(["find-orbit", "--config", cfg, "--out", str(out),
                     "--force"])
        assert code == 0
        orbit = json.loads((out / "orbit.json").read_text())
        assert orbit["converged"] is True
        assert orbit["verdict"]["applies"] is False
        assert "H1" in orbit["verdict"]["reasons"]


class TestSweepCommand:
    def test_gamma_axis(self, tmp_path):
        doc = morse_config(n=2, extra={
            "sweep": [{"param": "system.params.gamma", "values": [1.0, 1.5]}],
        })
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "run"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert all(row["applies"] == "true" for row in rows)
        assert all(row["error"] == "" for row in rows)
        assert (out / "point_000" / "report.json").exists()
        assert (out / "point_001" / "orbit.json").exists()

    def test_condition_violating_point_recorded(self, tmp_path):
        doc = morse_config(n=2, extra={
            "sweep": [{"param": "system.params.epsilon", "values": [0.0]}],
        })
        cfg = write_config(tmp_path, doc)
        out = tmp_path / "run"
        assert main(["sweep", "--config", cfg, "--out", str(out),
                     "--jobs", "2"]) == 0
        with open(out / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["applies"] == "false"

    def test_empty_axes_exit_two(self, tmp_path):
        cfg = write_config(tmp_path, morse_config(n=2, extra={"sweep": []}))
        assert main(["sweep", "--config", cfg,
                     "--out", str(tmp_path / "x")]) == 2

    def test_unknown_axis_parameter_exit_two(self, tmp_path):
        doc = morse_config(n=2, extra={
            "sweep": [{"param": "system.params.zeta", "values": [1.0]}],
        })
        cfg = write_config(tmp_path, doc)
        assert main(["sweep", "--config", cfg,
                     "--out", str(tmp_path / "x")]) == 2


class TestReportCommand:
    def test_summarizes_run_dir(self, tmp_path, capsys):
        cfg = write_config(tmp_path, morse_config(n=2))
        out = tmp_path / "run"
        assert main(["check", "--config", cfg, "--out", str(out)]) == 0
        assert main(["report", "--dir", str(out)]) == 0
        text = capsys.readouterr().out
        assert "morse-chain" in text
        assert "applies: True" in text

    def test_missing_dir_exit_two(self, tmp_path):
        assert main(["report", "--dir", str(tmp_path / "nope")]) == 2
