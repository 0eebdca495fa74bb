"""Deterministic sup/inf scanning for the hypothesis checkers.

All checks share the same recipe: evaluate the target quantity on an
unscrambled Halton point set over a box of scan variables, keep the worst
sample, then polish it with a coordinate-cycling golden-section line
search.  Everything is deterministic, so repeated runs of the same
configuration produce identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import ConfigurationError

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SamplerConfig:
    """Sampling plan shared by every checker.

    density:       Halton points per check (split across faces/blocks when a
                   check aggregates several scans).
    refine_iters:  golden-section iteration budget for polishing the worst
                   sample.
    strictness:    margin separating a strict inequality from round-off.
    safety:        inflation factor applied to sampled force bounds.
    """

    density: int = 10_000
    refine_iters: int = 50
    strictness: float = 1e-6
    safety: float = 1.1

    def describe(self, dims: int, points: int) -> str:
        return (f"halton n={points} dims={dims} + "
                f"golden-section refine {self.refine_iters}")


def halton_points(dims: int, count: int) -> np.ndarray:
    """``count`` unscrambled Halton points in the ``dims``-dimensional unit
    cube, skipping the degenerate all-zeros first point."""
    if dims < 1 or count < 1:
        raise ConfigurationError("sample plan must have >= 1 dimension and point")
    engine = qmc.Halton(d=dims, scramble=False)
    engine.fast_forward(1)
    return engine.random(count)


def golden_section_max(f, lo: float, hi: float, iters: int):
    """Golden-section maximization of a scalar function on [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max(iters - 2, 0)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def refine_max(f, x0: np.ndarray, ranges: np.ndarray, iters: int):
    """Polish a maximizer by cycling golden-section searches per coordinate.

    Returns the better of the refined point and the original.
    """
    x = np.array(x0, dtype=float)
    best_val = f(x)
    dims = x.size
    if iters <= 0 or dims == 0:
        return x, best_val
    per_coord = max(iters // max(dims, 1), 4)
    for c in range(dims):
        lo, hi = ranges[c]
        if hi <= lo:
            continue

        def along(s, c=c):
            trial = x.copy()
            trial[c] = s
            return f(trial)

        s_best, val = golden_section_max(along, lo, hi, per_coord)
        if val > best_val:
            best_val = val
            x[c] = s_best
    return x, best_val


@dataclass
class ScanResult:
    point: np.ndarray
    value: float
    evaluations: int
    description: str


def scan_max(f, ranges, sampler: SamplerConfig, points: int | None = None) -> ScanResult:
    """Maximize ``f`` over the box ``ranges`` (list of (lo, hi) pairs).

    Halton sweep followed by golden-section refinement of the best sample.
    """
    ranges = np.atleast_2d(np.asarray(ranges, dtype=float))
    dims = ranges.shape[0]
    n = points if points is not None else sampler.density
    unit = halton_points(dims, n)
    pts = ranges[:, 0] + unit * (ranges[:, 1] - ranges[:, 0])
    best_val = -math.inf
    best = pts[0]
    for row in pts:
        val = f(row)
        if val > best_val:
            best_val = val
            best = row
    x, val = refine_max(f, best, ranges, sampler.refine_iters)
    if val < best_val:  # refinement never loses ground
        x, val = best, best_val
    return ScanResult(point=np.asarray(x), value=float(val),
                      evaluations=n + sampler.refine_iters,
                      description=sampler.describe(dims, n))


def scan_min(f, ranges, sampler: SamplerConfig, points: int | None = None) -> ScanResult:
    """Minimize ``f`` over the box ``ranges`` (via ``scan_max`` of ``-f``)."""
    res = scan_max(lambda x: -f(x), ranges, sampler, points)
    return ScanResult(point=res.point, value=-res.value,
                      evaluations=res.evaluations, description=res.description)
