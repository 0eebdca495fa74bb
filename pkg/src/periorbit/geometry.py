"""Single-chart coordinate blocks with Riemannian metric data.

Each factor manifold is represented by one chart: a closed coordinate box
(an interval in 1-D, a rectangle in 2-D) carrying a metric field, optional
analytic Christoffel symbols, and an enlargement margin.  The enlarged box
is where dynamics may still be evaluated once a trajectory has left the
block proper.

Conventions:

* ``metric(q)`` returns a symmetric positive definite ``dim x dim`` matrix
  in chart coordinates.
* ``christoffel(q)[k, i, j]`` multiplies ``p^i p^j`` in the chart
  acceleration and is symmetric in ``(i, j)``.  When absent, symbols are
  obtained by central finite differences of the metric.
* Forces are contravariant chart vectors; inner products always go through
  the metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NumericError, ValidationError

MetricFn = Callable[[np.ndarray], np.ndarray]
ChristoffelFn = Callable[[np.ndarray], np.ndarray]

#: central-difference step used for metric derivatives
CHRISTOFFEL_FD_STEP = 1e-5

#: default enlargement margin, as a fraction of each coordinate span
DEFAULT_MARGIN_FRACTION = 0.1

KINDS = ("interval", "disk-like-2d", "closed")

#: Euler characteristic implied by the block kind (closed blocks declare theirs)
KIND_CHI = {"interval": 1, "disk-like-2d": 1}

#: Euler characteristic of the block boundary, by kind.  An interval has a
#: two-point boundary; a disk-like 2-D block is bounded by circles; closed
#: blocks have no boundary.
BOUNDARY_CHI = {"interval": 2, "disk-like-2d": 0, "closed": 0}


def as_point(q) -> np.ndarray:
    """Coerce chart coordinates (scalar or sequence) to a 1-D float array."""
    arr = np.atleast_1d(np.asarray(q, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"expected a coordinate vector, got shape {arr.shape}")
    return arr


def finite_difference_christoffel(metric: MetricFn, q: np.ndarray,
                                  step: float = CHRISTOFFEL_FD_STEP) -> np.ndarray:
    """Christoffel symbols of ``metric`` at ``q`` by central differences.

    Returns an array ``gamma[k, i, j] = 0.5 * g^{kl} (d_i g_{lj} + d_j g_{li}
    - d_l g_{ij})``.
    """
    q = as_point(q)
    dim = q.size
    dg = np.empty((dim, dim, dim))  # dg[l] = d g / d q_l
    for axis in range(dim):
        offset = np.zeros(dim)
        offset[axis] = step
        dg[axis] = (np.asarray(metric(q + offset), dtype=float)
                    - np.asarray(metric(q - offset), dtype=float)) / (2.0 * step)
    ginv = np.linalg.inv(np.asarray(metric(q), dtype=float))
    gamma = np.empty((dim, dim, dim))
    for i in range(dim):
        for j in range(dim):
            term = dg[i, :, j] + dg[j, :, i] - dg[:, i, j]
            gamma[:, i, j] = 0.5 * ginv @ term
    return gamma


@dataclass
class ChartBlock:
    """A compact coordinate box with metric, boundary, and chi bookkeeping.

    ``bounds`` is a ``(dim, 2)`` array of closed per-coordinate intervals.
    ``margin`` extends every coordinate on both sides to form the enlarged
    box; it defaults to 10% of the largest coordinate span.
    """

    bounds: np.ndarray
    kind: str = "interval"
    metric: MetricFn | None = None
    christoffel: ChristoffelFn | None = None
    margin: float | None = None
    chi: int | None = None
    name: str = ""

    def __post_init__(self):
        self.bounds = np.atleast_2d(np.asarray(self.bounds, dtype=float))
        if self.bounds.shape[1] != 2:
            raise ValidationError(f"bounds must be (dim, 2), got {self.bounds.shape}")
        dim = self.bounds.shape[0]
        if dim not in (1, 2):
            raise ValidationError(f"blocks must be 1- or 2-dimensional, got dim={dim}")
        if np.any(self.bounds[:, 1] <= self.bounds[:, 0]):
            raise ValidationError("each bound interval needs lower < upper")
        if self.kind not in KINDS:
            raise ValidationError(f"unknown block kind {self.kind!r}")
        if self.kind == "interval" and dim != 1:
            raise ValidationError("interval blocks must be 1-dimensional")
        if self.kind == "disk-like-2d" and dim != 2:
            raise ValidationError("disk-like-2d blocks must be 2-dimensional")
        if self.chi is None:
            if self.kind == "closed":
                raise ValidationError("closed blocks must declare chi")
            self.chi = KIND_CHI[self.kind]
        elif self.kind in KIND_CHI and self.chi != KIND_CHI[self.kind]:
            raise ValidationError(
                f"kind {self.kind!r} has chi {KIND_CHI[self.kind]}, not {self.chi}")
        if self.margin is None:
            self.margin = DEFAULT_MARGIN_FRACTION * float(np.max(self.span))
        if self.margin <= 0:
            raise ValidationError("margin must be positive")

    # -- basic geometry -------------------------------------------------

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def span(self) -> np.ndarray:
        return self.bounds[:, 1] - self.bounds[:, 0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.bounds[:, 0] + self.bounds[:, 1])

    @property
    def enlarged_bounds(self) -> np.ndarray:
        out = self.bounds.copy()
        out[:, 0] -= self.margin
        out[:, 1] += self.margin
        return out

    def contains(self, q, enlarged: bool = False, tol: float = 0.0) -> bool:
        q = as_point(q)
        b = self.enlarged_bounds if enlarged else self.bounds
        return bool(np.all(q >= b[:, 0] - tol) and np.all(q <= b[:, 1] + tol))

    def require_inside(self, q, enlarged: bool = True):
        if not self.contains(q, enlarged=enlarged):
            which = "enlarged bounds" if enlarged else "bounds"
            raise DomainError(
                f"point {as_point(q)} outside {which} of block {self.name or '?'}")

    # -- metric data ----------------------------------------------------

    def metric_at(self, q) -> np.ndarray:
        if self.metric is None:
            return np.eye(self.dim)
        g = np.asarray(self.metric(as_point(q)), dtype=float)
        g = np.atleast_2d(g)
        if g.shape != (self.dim, self.dim):
            raise ValueError(f"metric returned shape {g.shape}, expected "
                             f"({self.dim}, {self.dim})")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"metric non-finite at q={as_point(q)}")
        return g

    def christoffel_at(self, q) -> np.ndarray:
        if self.christoffel is not None:
            return np.asarray(self.christoffel(as_point(q)), dtype=float)
        if self.metric is None:
            return np.zeros((self.dim, self.dim, self.dim))
        return finite_difference_christoffel(self.metric_at, as_point(q))

    def faces(self) -> list["BoundaryFace"]:
        """Boundary faces in a fixed order (coordinate-major, lower first)."""
        if self.kind == "closed":
            return []
        out = []
        for c in range(self.dim):
            out.append(BoundaryFace(self, c, "lower"))
            out.append(BoundaryFace(self, c, "upper"))
        return out

    # -- validation -----------------------------------------------------

    def validate(self, samples: int = 100, tol: float = 1e-6, seed: int = 0):
        """Sample-based consistency checks: SPD metric, Christoffel symmetry,
        and agreement of analytic symbols with finite differences."""
        rng = np.random.default_rng(seed)
        enl = self.enlarged_bounds
        pts = enl[:, 0] + rng.random((samples, self.dim)) * (enl[:, 1] - enl[:, 0])
        for q in pts:
            g = self.metric_at(q)
            if not np.allclose(g, g.T, atol=1e-12):
                raise ValidationError(f"metric not symmetric at q={q}")
            if np.any(np.linalg.eigvalsh(g) <= 0):
                raise ValidationError(f"metric not positive definite at q={q}")
            gamma = self.christoffel_at(q)
            if not np.allclose(gamma, np.swapaxes(gamma, 1, 2), atol=1e-9):
                raise ValidationError(f"Christoffel symbols not symmetric at q={q}")
            if self.christoffel is not None and self.metric is not None:
                fd = finite_difference_christoffel(self.metric_at, q)
                if not np.allclose(gamma, fd, atol=tol):
                    raise ValidationError(
                        f"analytic Christoffel symbols disagree with finite "
                        f"differences at q={q} (tol={tol})")


@dataclass
class BoundaryFace:
    """One face of a block: a coordinate held at its lower or upper bound."""

    block: ChartBlock
    coord: int
    side: str  # "lower" | "upper"

    def __post_init__(self):
        if self.side not in ("lower", "upper"):
            raise ValidationError(f"face side must be lower/upper, got {self.side!r}")

    @property
    def value(self) -> float:
        col = 0 if self.side == "lower" else 1
        return float(self.block.bounds[self.coord, col])

    @property
    def label(self) -> str:
        return f"q[{self.coord}]:{self.side}"

    def outward_normal(self, q) -> np.ndarray:
        """Unit outward normal vector at ``q`` with respect to the metric.

        The normal is ``+- g^{-1} e_c / sqrt(g^{cc})``: metric-orthogonal to
        the face and of unit metric length.
        """
        ginv = np.linalg.inv(self.block.metric_at(q))
        col = ginv[:, self.coord]
        nu = col / math.sqrt(ginv[self.coord, self.coord])
        return nu if self.side == "upper" else -nu

    def point(self, free_coords=()) -> np.ndarray:
        """Assemble a point on the face from the free-coordinate values."""
        q = np.empty(self.block.dim)
        free = list(free_coords)
        for c in range(self.block.dim):
            q[c] = self.value if c == self.coord else free.pop(0)
        return q

    def signed_gap(self, q) -> float:
        """Inward-positive distance of ``q`` from the face plane."""
        g = as_point(q)[self.coord] - self.value
        return g if self.side == "lower" else -g


@dataclass
class TangentState:
    """Chart coordinates and velocity components for one block."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.q = as_point(self.q)
        self.p = as_point(self.p)
        if self.q.shape != self.p.shape:
            raise ValueError("q and p must have matching shapes")


# -- operations ---------------------------------------------------------


def metric_inner(block: ChartBlock, q, u, v, *, check: bool = True) -> float:
    """Metric inner product ``u^T g(q) v``."""
    if check:
        block.require_inside(q, enlarged=True)
    val = float(as_point(u) @ block.metric_at(q) @ as_point(v))
    if not math.isfinite(val):
        raise NumericError(f"inner product non-finite at q={as_point(q)}")
    return val


def kinetic_energy(block: ChartBlock, q, p, *, check: bool = True) -> float:
    """Kinetic energy ``<p, p>`` of a block state (squared metric norm)."""
    return metric_inner(block, q, p, p, check=check)


def metric_norm(block: ChartBlock, q, v, *, check: bool = True) -> float:
    """Metric norm ``sqrt(<v, v>)`` of a chart vector."""
    return math.sqrt(max(metric_inner(block, q, v, v, check=check), 0.0))


def covariant_accel(block: ChartBlock, q, p, force, *, check: bool = True) -> np.ndarray:
    """Chart acceleration ``qdd^k = -Gamma^k_ij p^i p^j + F^k``.

    With zero force this is geodesic acceleration.
    """
    if check:
        block.require_inside(q, enlarged=True)
    q = as_point(q)
    p = as_point(p)
    f = as_point(force)
    gamma = block.christoffel_at(q)
    acc = f - np.einsum("kij,i,j->k", gamma, p, p)
    if not np.all(np.isfinite(acc)):
        raise NumericError(f"acceleration non-finite at q={q}")
    return acc
