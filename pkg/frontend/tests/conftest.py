"""Fixtures producing real solver runs through the primary CLI.

The plot package consumes the solver only through its documented file
formats, so the fixtures shell out to the installed ``periorbit`` module
and hand the tests plain run directories.
"""

import json
import subprocess
import sys

import pytest

LN2 = 0.6931471805599453


def run_solver(args):
    proc = subprocess.run([sys.executable, "-m", "periorbit.cli", *args],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="session")
def morse_run(tmp_path_factory):
    """The oscillator-chain acceptance run: report, orbit, trajectory."""
    tmp = tmp_path_factory.mktemp("plots_morse")
    cfg = write_json(tmp / "config.json", {
        "system": {
            "name": "morse-chain",
            "period": 1.0,
            "params": {"n": 3, "gamma": 1.0, "delta": 1.0, "a": LN2,
                       "epsilon": 0.05, "b": 1.5},
        },
    })
    out = tmp / "run"
    code, stdout, stderr = run_solver(["find-orbit", "--config", cfg,
                                       "--out", str(out)])
    assert code == 0, stderr
    return out


@pytest.fixture(scope="session")
def sweep_run(tmp_path_factory):
    """A small two-axis sweep for the heatmap figure."""
    tmp = tmp_path_factory.mktemp("plots_sweep")
    cfg = write_json(tmp / "config.json", {
        "system": {
            "name": "morse-chain",
            "period": 1.0,
            "params": {"n": 2, "gamma": 1.0, "delta": 1.0, "a": LN2,
                       "epsilon": 0.05, "b": 1.5},
        },
        "checks": {"density": 800, "refine_iters": 20},
        "sweep": [
            {"param": "system.params.gamma", "values": [1.0, 1.5]},
            {"param": "system.params.epsilon", "values": [0.05, 0.08]},
        ],
    })
    out = tmp / "run"
    code, stdout, stderr = run_solver(["sweep", "--config", cfg,
                                       "--out", str(out)])
    assert code == 0, stderr
    return out


@pytest.fixture(scope="session")
def oscillator_run(tmp_path_factory):
    """Forced damped linear oscillator orbit (H1 fails: searched with
    --force), whose phase trace is an ellipse."""
    tmp = tmp_path_factory.mktemp("plots_linear")
    cfg = write_json(tmp / "config.json", {
        "system": {
            "name": "generic",
            "period": 1.0,
            "blocks": [{"bounds": [[-2.0, 2.0]], "kind": "interval"}],
            "fields": [{
                "force": "sin(2*pi*t/T) - 4*q",
                "friction": {"expr": "0*p", "threshold": 1.0},
            }],
        },
        "checks": {"density": 800, "refine_iters": 20},
    })
    out = tmp / "run"
    code, stdout, stderr = run_solver(["find-orbit", "--config", cfg,
                                       "--out", str(out), "--force"])
    assert code == 0, stderr
    return out
