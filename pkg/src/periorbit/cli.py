"""Command-line interface: check, simulate, find-orbit, sweep, report.

All commands read one JSON config, write machine-readable outputs under a
run directory (``report.json``, ``trajectory.csv``, ``orbit.json``,
``sweep.csv``, ``manifest.json``), and use exit codes 0 (success /
applicable), 1 (a condition failed or no converged orbit), 2 (bad
configuration or numeric failure).  Identical configs produce
byte-identical JSON reports.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, get_by_path
from .dynamics import integrate
from .errors import (ConfigurationError, EscapeError, IntegrationError,
                     NumericError, PeriorbitError, ResourceError,
                     ValidationError)
from .hypotheses import HypothesisRun, run_hypothesis_checks
from .jsonio import dump, format_float
from .orbit import OrbitResult, find_periodic_orbit, seed_grid
from .systems import CoupledSystem
from .topology import (MAX_ORACLE_BLOCKS, PeriodicSegmentSpec, Verdict,
                       exit_set_char_closed_form, exit_set_char_oracle,
                       euler_char_product, fixed_point_index, theorem_applies)


@dataclass
class CheckContext:
    """Everything downstream commands reuse from a check run."""

    system: CoupledSystem
    run: HypothesisRun
    spec: PeriodicSegmentSpec
    verdict: Verdict
    report: dict


def perform_check(config: RunConfig) -> CheckContext:
    system = config.build_system()
    run = run_hypothesis_checks(system, config.sampler())
    caps = list(run.caps.caps) if run.caps is not None else None
    spec = PeriodicSegmentSpec.from_system(system, caps)
    verdict = theorem_applies(spec, run.reports)
    report = build_report(config, system, run, spec, verdict)
    return CheckContext(system=system, run=run, spec=spec,
                        verdict=verdict, report=report)


def build_report(config: RunConfig, system: CoupledSystem, run: HypothesisRun,
                 spec: PeriodicSegmentSpec, verdict: Verdict) -> dict:
    scales = system.meta.get("metric_scales", [None] * system.n)
    blocks = []
    for i, b in enumerate(system.blocks):
        blocks.append({
            "name": b.name,
            "kind": b.kind,
            "chi": int(b.chi),
            "bounds": [[float(lo), float(hi)] for lo, hi in b.bounds],
            "margin": float(b.margin),
            "metric_scale": scales[i],
            "threshold": system.frictions[i].threshold,
            "cap": run.caps.caps[i] if run.caps is not None else None,
        })
    index = {
        "euler_product": euler_char_product(spec),
        "exit_set_char": exit_set_char_closed_form(spec),
        "fixed_point_index": fixed_point_index(spec),
    }
    if spec.n <= MAX_ORACLE_BLOCKS:
        index["exit_set_char_oracle"] = exit_set_char_oracle(spec)
    return {
        "tool": "periorbit",
        "version": __version__,
        "config_hash": config.hash(),
        "system": {
            "name": system.meta.get("kind", "generic"),
            "n": system.n,
            "period": system.period,
            "blocks": blocks,
        },
        "caps": run.caps.to_json_dict() if run.caps is not None else None,
        "checks": [rep.to_json_dict() for rep in run.reports],
        "index": index,
        "verdict": verdict.to_json_dict(),
    }


def write_manifest(out: Path, config: RunConfig, command: str, files: list[str]):
    dump({
        "tool": "periorbit",
        "version": __version__,
        "command": command,
        "config_hash": config.hash(),
        "files": files,
    }, out / "manifest.json")


def _prepare_out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ----------------------------------------------------------------


def cmd_check(args) -> int:
    config = RunConfig.from_file(args.config)
    ctx = perform_check(config)
    out = _prepare_out(args)
    dump(ctx.report, out / "report.json")
    write_manifest(out, config, "check", ["report.json"])
    v = ctx.verdict
    print(f"applies={v.applies} index={v.index}"
          + (f" reasons={','.join(v.reasons)}" if v.reasons else ""))
    return 0 if v.applies else 1


def cmd_simulate(args) -> int:
    config = RunConfig.from_file(args.config)
    system = config.build_system()
    sim = config.simulate_section
    state0 = np.asarray(sim.get("initial_state", system.center_state()),
                        dtype=float)
    if state0.shape != (system.state_dim,):
        raise ConfigurationError(
            f"initial state needs {system.state_dim} entries")
    if not system.contains(state0, enlarged=False):
        raise ValidationError("initial state lies outside the blocks")
    t_span = sim.get("t_span")
    if args.periods is not None:
        t_span = [0.0, args.periods * system.period]
    if t_span is None:
        t_span = [0.0, system.period]
    caps = None
    if args.report is not None:
        import json
        with open(args.report, "r", encoding="utf-8") as fh:
            rep = json.load(fh)
        if rep.get("caps"):
            caps = rep["caps"]["caps"]
    traj = integrate(system, float(t_span[0]), state0, float(t_span[1]),
                     config.integrator(), caps=caps)
    out = _prepare_out(args)
    traj.to_csv(out / "trajectory.csv")
    write_manifest(out, config, "simulate", ["trajectory.csv"])
    counts: dict[str, int] = {}
    for ev in traj.events:
        counts[ev.kind] = counts.get(ev.kind, 0) + 1
    summary = ", ".join(f"{k}: {n}" for k, n in sorted(counts.items())) or "none"
    print(f"rows={len(traj.times)} reached_end={traj.reached_end} "
          f"events: {summary}")
    return 0


def cmd_find_orbit(args) -> int:
    config = RunConfig.from_file(args.config)
    ctx = perform_check(config)
    out = _prepare_out(args)
    dump(ctx.report, out / "report.json")
    if not ctx.verdict.applies and not args.force:
        write_manifest(out, config, "find-orbit", ["report.json"])
        print(f"theorem not applicable ({','.join(ctx.verdict.reasons)}); "
              f"use --force to search anyway")
        return 1

    solver = config.solver()
    tol = args.tol if args.tol is not None else solver.tol
    count = args.seed_grid if args.seed_grid is not None else config.seed_grid_count
    seeds = seed_grid(ctx.system, count)
    caps = list(ctx.run.caps.caps) if ctx.run.caps is not None else None
    integ = config.integrator()

    def solve(seed):
        try:
            return find_periodic_orbit(
                ctx.system, seed, method=solver.method, tol=tol,
                max_iter=solver.max_iter, config=integ, caps=caps,
                jacobian_refresh=solver.jacobian_refresh,
                fd_step=solver.fd_step)
        except (EscapeError, IntegrationError, NumericError) as exc:
            return exc

    results = _run_parallel(solve, seeds, args.jobs)
    best = _pick_best(results)
    if best is None:
        write_manifest(out, config, "find-orbit", ["report.json"])
        print("all seeds failed with numeric errors")
        return 2

    orbit_doc = best.to_json_dict()
    orbit_doc["verdict"] = ctx.verdict.to_json_dict()
    orbit_doc["seeds"] = [
        {"index": k,
         "converged": r.converged if isinstance(r, OrbitResult) else False,
         "residual": r.residual if isinstance(r, OrbitResult) else None,
         "error": None if isinstance(r, OrbitResult) else str(r)}
        for k, r in enumerate(results)]
    dump(orbit_doc, out / "orbit.json")
    files = ["report.json", "orbit.json"]
    if best.orbit is not None:
        best.orbit.to_csv(out / "trajectory.csv")
        files.append("trajectory.csv")
    write_manifest(out, config, "find-orbit", files)
    print(f"converged={best.converged} residual={format_float(best.residual)} "
          f"interior={best.interior} method={best.method}")
    return 0 if best.converged and best.interior else 1


def _run_parallel(fn, items, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _pick_best(results) -> OrbitResult | None:
    ok = [r for r in results if isinstance(r, OrbitResult)]
    if not ok:
        return None
    return min(ok, key=lambda r: (not r.converged, not r.interior, r.residual))


def cmd_sweep(args) -> int:
    config = RunConfig.from_file(args.config)
    axes = config.sweep_axes()
    if not axes:
        raise ConfigurationError("sweep requires at least one axis")
    out = _prepare_out(args)
    names = [axis["param"] for axis in axes]
    grids = [axis["values"] for axis in axes]
    points = list(itertools.product(*grids))

    def run_point(item):
        idx, values = item
        sub = config
        for name, value in zip(names, values):
            sub = sub.with_override(name, value)
        row = {name: value for name, value in zip(names, values)}
        point_dir = out / f"point_{idx:03d}"
        point_dir.mkdir(parents=True, exist_ok=True)
        try:
            ctx = perform_check(sub)
            dump(ctx.report, point_dir / "report.json")
            row["applies"] = ctx.verdict.applies
            row["index"] = ctx.verdict.index
            solver = sub.solver()
            caps = list(ctx.run.caps.caps) if ctx.run.caps is not None else None
            seeds = seed_grid(ctx.system, sub.seed_grid_count)
            results = [find_periodic_orbit(
                ctx.system, s, method=solver.method, tol=solver.tol,
                max_iter=solver.max_iter, config=sub.integrator(), caps=caps,
                jacobian_refresh=solver.jacobian_refresh,
                fd_step=solver.fd_step) for s in seeds]
            best = _pick_best(results)
            doc = best.to_json_dict()
            doc["verdict"] = ctx.verdict.to_json_dict()
            dump(doc, point_dir / "orbit.json")
            row["converged"] = best.converged
            row["residual"] = best.residual
            row["min_position_margin"] = min(
                (m.position for m in best.interior_margins), default=None)
            row["min_energy_margin"] = min(
                (m.energy for m in best.interior_margins), default=None)
            row["max_multiplier"] = float(np.max(np.abs(best.floquet))) \
                if best.floquet is not None else None
            row["error"] = ""
        except PeriorbitError as exc:
            row.setdefault("applies", None)
            row["error"] = str(exc)
        return row

    rows = _run_parallel(run_point, list(enumerate(points)), args.jobs)
    header = names + ["applies", "index", "converged", "residual",
                      "min_position_margin", "min_energy_margin",
                      "max_multiplier", "error"]
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row.get(col)) for col in header])
    write_manifest(out, config, "sweep", ["sweep.csv"])
    print(f"swept {len(rows)} points over {', '.join(names)}")
    return 0


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def cmd_report(args) -> int:
    import json
    run_dir = Path(args.dir)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        raise ConfigurationError(f"no report.json under {run_dir}")
    with open(report_path, "r", encoding="utf-8") as fh:
        rep = json.load(fh)
    verdict = rep.get("verdict", {})
    print(f"system: {rep['system']['name']} (n={rep['system']['n']}, "
          f"T={rep['system']['period']})")
    print(f"index: {rep['index']['fixed_point_index']} "
          f"(chi product {rep['index']['euler_product']}, "
          f"exit set {rep['index']['exit_set_char']})")
    for check in rep.get("checks", []):
        status = "pass" if check["pass"] else "FAIL"
        margin = check.get("margin")
        extra = f" margin={margin:.3g}" if isinstance(margin, float) else ""
        print(f"  {check['name']}: {status}{extra}")
    print(f"applies: {verdict.get('applies')}"
          + (f" reasons={','.join(verdict['reasons'])}"
             if verdict.get("reasons") else ""))
    orbit_path = run_dir / "orbit.json"
    if orbit_path.exists():
        with open(orbit_path, "r", encoding="utf-8") as fh:
            orb = json.load(fh)
        print(f"orbit: converged={orb['converged']} "
              f"residual={orb['residual']:.3g} interior={orb['interior']}")
    return 0


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="periorbit",
        description="verify periodic-solution hypotheses for coupled "
                    "dissipative systems and locate the guaranteed orbit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=True):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default="periorbit_out", help="output directory")
        if jobs:
            p.add_argument("--jobs", type=int, default=1,
                           help="concurrent seeds / sweep points")

    p_check = sub.add_parser("check", help="run hypothesis checks and the index")
    common(p_check, jobs=False)
    p_check.set_defaults(func=cmd_check)

    p_sim = sub.add_parser("simulate", help="integrate and export a trajectory")
    common(p_sim, jobs=False)
    p_sim.add_argument("--periods", type=float, default=None,
                       help="integrate this many forcing periods")
    p_sim.add_argument("--report", default=None,
                       help="report.json supplying energy caps for events")
    p_sim.set_defaults(func=cmd_simulate)

    p_orbit = sub.add_parser("find-orbit", help="solve for the periodic orbit")
    common(p_orbit)
    p_orbit.add_argument("--force", action="store_true",
                         help="search even when the checks fail")
    p_orbit.add_argument("--seed-grid", type=int, default=None,
                         help="initial guesses per block")
    p_orbit.add_argument("--tol", type=float, default=None,
                         help="residual tolerance override")
    p_orbit.set_defaults(func=cmd_find_orbit)

    p_sweep = sub.add_parser("sweep", help="check + orbit across parameter grids")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("report", help="summarize a run directory")
    p_rep.add_argument("--dir", required=True, help="run directory to summarize")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, IntegrationError, EscapeError, ResourceError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
