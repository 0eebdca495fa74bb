import hashlib
import json
import math
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from orbitplots import FigureError, FigureSpec, render
from orbitplots.cli import main


def sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_plots(args):
    proc = subprocess.run([sys.executable, "-m", "orbitplots.cli", *args],
                          capture_output=True, text=True)
    return proc.returncode, proc.stderr


def figure_args(kind, run_dir, sweep_dir, out):
    """CLI argument list for each figure kind against a run directory."""
    if kind == "sweep-heatmap":
        return [kind, "--in", str(sweep_dir / "sweep.csv"),
                "--x", "system.params.gamma", "--y", "system.params.epsilon",
                "--value", "residual", "--out", str(out)]
    if kind == "convergence":
        return [kind, "--in", str(run_dir / "orbit.json"), "--out", str(out)]
    return [kind, "--in", str(run_dir / "trajectory.csv"),
            "--report", str(run_dir / "report.json"),
            "--block", "2", "--out", str(out)]


ALL_KINDS = ("phase", "timeseries", "energy", "sweep-heatmap", "convergence")


class TestAcceptanceSecondary:
    def test_all_kinds_render_deterministically(self, morse_run, sweep_run,
                                                tmp_path):
        """Every figure kind renders from the oscillator-chain run without
        error and byte-identically across two separate invocations."""
        ok = True
        for kind in ALL_KINDS:
            first = tmp_path / f"{kind}_a.png"
            second = tmp_path / f"{kind}_b.png"
            for out in (first, second):
                code, err = run_plots(figure_args(kind, morse_run,
                                                  sweep_run, out))
                ok = ok and code == 0 and out.exists() and out.stat().st_size > 0
                assert code == 0, f"{kind}: {err}"
            ok = ok and sha256(first) == sha256(second)
        print(f"ACCEPTANCE plot-component (5 kinds, deterministic): "
              f"{'PASS' if ok else 'FAIL'}")
        assert ok

    def test_rendering_is_read_only(self, morse_run, sweep_run, tmp_path):
        inputs = [morse_run / "trajectory.csv", morse_run / "report.json",
                  morse_run / "orbit.json", sweep_run / "sweep.csv"]
        before = [sha256(p) for p in inputs]
        for kind in ALL_KINDS:
            out = tmp_path / f"ro_{kind}.png"
            assert main(figure_args(kind, morse_run, sweep_run, out)) == 0
        assert [sha256(p) for p in inputs] == before


class TestFigureContent:
    def test_oscillator_phase_trace_is_closed_ellipse(self, oscillator_run,
                                                      tmp_path):
        frame = pd.read_csv(oscillator_run / "trajectory.csv")
        q = frame["q_1"].to_numpy()
        p = frame["p_1"].to_numpy()
        big_omega = 2 * math.pi
        # steady state q = A sin(big_omega t + phi): the quadratic invariant
        # (big_omega q)^2 + p^2 is constant along the trace
        invariant = (big_omega * q) ** 2 + p ** 2
        assert np.std(invariant) / np.mean(invariant) < 1e-3
        # closed curve: endpoints coincide over one period
        assert abs(q[0] - q[-1]) < 1e-8 and abs(p[0] - p[-1]) < 1e-8
        out = tmp_path / "ellipse.png"
        assert main(["phase", "--in", str(oscillator_run / "trajectory.csv"),
                     "--out", str(out)]) == 0
        assert out.exists()

    def test_energy_trace_stays_below_cap(self, morse_run, tmp_path):
        frame = pd.read_csv(morse_run / "trajectory.csv")
        report = json.loads((morse_run / "report.json").read_text())
        for i, block in enumerate(report["system"]["blocks"], start=1):
            assert frame[f"T_{i}"].max() < block["cap"]
        out = tmp_path / "energy.png"
        assert main(["energy", "--in", str(morse_run / "trajectory.csv"),
                     "--report", str(morse_run / "report.json"),
                     "--block", "1", "--out", str(out)]) == 0

    def test_heatmap_single_axis(self, sweep_run, tmp_path):
        out = tmp_path / "strip.png"
        assert main(["sweep-heatmap", "--in", str(sweep_run / "sweep.csv"),
                     "--x", "system.params.gamma", "--value", "residual",
                     "--out", str(out)]) == 0
        assert out.exists()

    def test_svg_output_deterministic(self, morse_run, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        for out in (a, b):
            code, err = run_plots(
                ["convergence", "--in", str(morse_run / "orbit.json"),
                 "--out", str(out)])
            assert code == 0, err
        assert sha256(a) == sha256(b)


class TestErrors:
    def test_missing_column_is_descriptive(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,q_1\n0.0,1.0\n", encoding="utf-8")
        code = main(["phase", "--in", str(bad),
                     "--out", str(tmp_path / "x.png")])
        assert code == 2
        assert "q_1" in capsys.readouterr().err

    def test_empty_csv_fails(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("", encoding="utf-8")
        assert main(["energy", "--in", str(empty),
                     "--out", str(tmp_path / "x.png")]) == 2

    def test_missing_file_fails(self, tmp_path):
        assert main(["convergence", "--in", str(tmp_path / "none.json"),
                     "--out", str(tmp_path / "x.png")]) == 2

    def test_bad_output_suffix(self, tmp_path):
        src = tmp_path / "orbit.json"
        src.write_text(json.dumps({"residual_history": [1.0, 0.1]}),
                       encoding="utf-8")
        assert main(["convergence", "--in", str(src),
                     "--out", str(tmp_path / "x.pdf")]) == 2

    def test_unknown_kind_rejected_by_parser(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["scatter3d", "--in", "x", "--out", "y.png"])

    def test_block_out_of_range_with_report(self, morse_run, tmp_path):
        code = main(["energy", "--in", str(morse_run / "trajectory.csv"),
                     "--report", str(morse_run / "report.json"),
                     "--block", "9", "--out", str(tmp_path / "x.png")])
        assert code == 2
