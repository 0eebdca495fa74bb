"""Figure rendering from the solver's documented file formats.

Every figure is built purely from the CSV/JSON outputs of a run directory
(trajectory.csv, report.json, orbit.json, sweep.csv); nothing is ever
recomputed from dynamics.  Rendering is deterministic: fixed style, fixed
hash salt, and no timestamps in the image metadata.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

KINDS = ("phase", "timeseries", "energy", "sweep-heatmap", "convergence")

plt.rcParams["svg.hashsalt"] = "orbitplots"
plt.rcParams["figure.figsize"] = (6.4, 4.2)
plt.rcParams["axes.grid"] = True
plt.rcParams["grid.alpha"] = 0.3


class FigureError(ValueError):
    """Unusable inputs: missing files, missing columns, or empty data."""


@dataclass
class FigureSpec:
    kind: str
    source: Path
    out: Path
    report: Path | None = None
    block: int = 1
    coord: int = 0
    x: str | None = None          # sweep-heatmap axes
    y: str | None = None
    value: str = "residual"
    xlabel: str | None = None
    ylabel: str | None = None
    title: str | None = None
    dpi: int = 110

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {KINDS}")
        self.source = Path(self.source)
        self.out = Path(self.out)
        if self.report is not None:
            self.report = Path(self.report)
        if self.out.suffix.lower() not in (".png", ".svg"):
            raise FigureError("output path must end in .png or .svg")


def render(spec: FigureSpec) -> Path:
    """Render one figure and return the written path."""
    handler = {
        "phase": _render_phase,
        "timeseries": _render_timeseries,
        "energy": _render_energy,
        "sweep-heatmap": _render_heatmap,
        "convergence": _render_convergence,
    }[spec.kind]
    fig = handler(spec)
    try:
        spec.out.parent.mkdir(parents=True, exist_ok=True)
        metadata = {"Date": None} if spec.out.suffix.lower() == ".svg" else {}
        fig.savefig(spec.out, dpi=spec.dpi, metadata=metadata)
    finally:
        plt.close(fig)
    return spec.out


# -- input loading ----------------------------------------------------------


def load_trajectory(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise FigureError(f"input file {path} does not exist")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise FigureError(f"cannot parse {path}: {exc}") from exc
    if frame.empty:
        raise FigureError(f"{path} contains no rows")
    return frame


def load_json(path: Path) -> dict:
    if not path.exists():
        raise FigureError(f"input file {path} does not exist")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FigureError(f"cannot parse {path}: {exc}") from exc


def block_columns(frame: pd.DataFrame, block: int, coord: int):
    """Resolve the q/p column names for a block (bracketed for 2-D)."""
    flat = (f"q_{block}", f"p_{block}")
    indexed = (f"q_{block}[{coord}]", f"p_{block}[{coord}]")
    if all(c in frame.columns for c in flat):
        return flat
    if all(c in frame.columns for c in indexed):
        return indexed
    raise FigureError(
        f"columns for block {block} not found (looked for {flat[0]!r} and "
        f"{indexed[0]!r}); available: {', '.join(frame.columns)}")


def require_column(frame: pd.DataFrame, name: str, path: Path):
    if name not in frame.columns:
        raise FigureError(f"column {name!r} missing from {path}; "
                          f"available: {', '.join(frame.columns)}")


def _block_overlay(spec: FigureSpec):
    """Block bounds and cap level for overlays, read from report.json."""
    if spec.report is None:
        return None
    report = load_json(spec.report)
    blocks = report.get("system", {}).get("blocks", [])
    if not 1 <= spec.block <= len(blocks):
        raise FigureError(f"block {spec.block} out of range for report "
                          f"({len(blocks)} blocks)")
    return blocks[spec.block - 1]


# -- renderers --------------------------------------------------------------


def _render_phase(spec: FigureSpec):
    frame = load_trajectory(spec.source)
    qcol, pcol = block_columns(frame, spec.block, spec.coord)
    fig, ax = plt.subplots()
    ax.plot(frame[qcol], frame[pcol], color="tab:blue", lw=1.2)
    ax.plot(frame[qcol].iloc[0], frame[pcol].iloc[0], "o",
            color="tab:red", ms=4)
    overlay = _block_overlay(spec)
    if overlay is not None:
        lo, hi = overlay["bounds"][spec.coord]
        ax.axvline(lo, color="k", ls="--", lw=1)
        ax.axvline(hi, color="k", ls="--", lw=1)
        cap = overlay.get("cap")
        scale = overlay.get("metric_scale")
        if cap is not None and scale:
            p_cap = math.sqrt(cap / scale)
            ax.axhline(p_cap, color="tab:orange", ls=":", lw=1)
            ax.axhline(-p_cap, color="tab:orange", ls=":", lw=1)
    ax.set_xlabel(spec.xlabel or qcol)
    ax.set_ylabel(spec.ylabel or pcol)
    ax.set_title(spec.title or f"phase portrait, block {spec.block}")
    fig.tight_layout()
    return fig


def _render_timeseries(spec: FigureSpec):
    frame = load_trajectory(spec.source)
    require_column(frame, "t", spec.source)
    qcol, pcol = block_columns(frame, spec.block, spec.coord)
    fig, (ax_q, ax_p) = plt.subplots(2, 1, sharex=True)
    ax_q.plot(frame["t"], frame[qcol], color="tab:blue", lw=1.2)
    ax_q.set_ylabel(qcol)
    ax_p.plot(frame["t"], frame[pcol], color="tab:green", lw=1.2)
    ax_p.set_ylabel(pcol)
    ax_p.set_xlabel(spec.xlabel or "t")
    overlay = _block_overlay(spec)
    if overlay is not None:
        lo, hi = overlay["bounds"][spec.coord]
        ax_q.axhline(lo, color="k", ls="--", lw=1)
        ax_q.axhline(hi, color="k", ls="--", lw=1)
    ax_q.set_title(spec.title or f"orbit trace, block {spec.block}")
    fig.tight_layout()
    return fig


def _render_energy(spec: FigureSpec):
    frame = load_trajectory(spec.source)
    require_column(frame, "t", spec.source)
    col = f"T_{spec.block}"
    require_column(frame, col, spec.source)
    fig, ax = plt.subplots()
    ax.plot(frame["t"], frame[col], color="tab:blue", lw=1.2, label=col)
    overlay = _block_overlay(spec)
    if overlay is not None and overlay.get("cap") is not None:
        ax.axhline(overlay["cap"], color="tab:red", ls="--", lw=1.2,
                   label="cap")
    ax.set_xlabel(spec.xlabel or "t")
    ax.set_ylabel(spec.ylabel or "kinetic energy")
    ax.set_title(spec.title or f"energy vs cap, block {spec.block}")
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def _render_heatmap(spec: FigureSpec):
    frame = load_trajectory(spec.source)
    require_column(frame, spec.value, spec.source)
    x = spec.x or frame.columns[0]
    require_column(frame, x, spec.source)
    values = pd.to_numeric(frame[spec.value], errors="coerce")
    fig, ax = plt.subplots()
    if spec.y is not None:
        require_column(frame, spec.y, spec.source)
        pivot = frame.assign(__v=values).pivot_table(
            index=spec.y, columns=x, values="__v", aggfunc="mean")
        mesh = ax.pcolormesh(pivot.columns, pivot.index, pivot.values,
                             shading="nearest", cmap="viridis")
        ax.set_ylabel(spec.ylabel or spec.y)
    else:
        xs = pd.to_numeric(frame[x], errors="coerce")
        order = np.argsort(xs.to_numpy())
        grid = values.to_numpy()[order][None, :]
        mesh = ax.pcolormesh(xs.to_numpy()[order], [0, 1],
                             np.vstack([grid, grid]),
                             shading="nearest", cmap="viridis")
        ax.set_yticks([])
    fig.colorbar(mesh, ax=ax, label=spec.value)
    ax.set_xlabel(spec.xlabel or x)
    ax.set_title(spec.title or f"sweep: {spec.value}")
    fig.tight_layout()
    return fig


def _render_convergence(spec: FigureSpec):
    doc = load_json(spec.source)
    history = doc.get("residual_history")
    if not history:
        raise FigureError(f"no residual_history in {spec.source}")
    fig, ax = plt.subplots()
    ax.semilogy(range(len(history)), history, "o-", color="tab:blue",
                lw=1.2, ms=4)
    tol_line = doc.get("residual")
    if tol_line:
        ax.axhline(tol_line, color="tab:red", ls=":", lw=1,
                   label="final residual")
        ax.legend(loc="best")
    ax.set_xlabel(spec.xlabel or "iteration")
    ax.set_ylabel(spec.ylabel or "residual (max norm)")
    ax.set_title(spec.title or f"solver convergence ({doc.get('method', '?')})")
    fig.tight_layout()
    return fig
