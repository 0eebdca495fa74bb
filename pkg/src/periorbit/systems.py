"""Force fields and assembly of coupled second-order systems.

A coupled system is a list of chart blocks together with, per block, an
external force field, a friction-like field, and an interaction field that
may read the whole state.  The full state is a flat vector laid out block
by block as ``[q_1, p_1, q_2, p_2, ...]``.

Two systems are built in: a row of planar pendulums above the horizontal
line with pairwise repulsion and a periodically accelerating pivot rail,
and a chain of Morse-potential oscillators between fixed end particles in
a periodic external field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NumericError, ValidationError
from .geometry import (ChartBlock, TangentState, as_point, kinetic_energy,
                       metric_norm)

GRAVITY = 9.81


@dataclass
class ForceField:
    """External force on one block: ``eval(t, q_i, p_i) -> vector``."""

    eval: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    declared_bound: float | None = None


@dataclass
class FrictionField:
    """Friction-like force on one block.

    ``threshold`` is the kinetic-energy level above which the dissipation
    quotient ``<f, p>/<p, p>`` is declared to stay below ``gamma_sup < 0``.
    """

    eval: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    threshold: float = 1.0
    gamma_sup: float | None = None

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValidationError("friction threshold must be positive")


@dataclass
class InteractionField:
    """Force on one block that may depend on the full state:
    ``eval(t, state) -> vector``."""

    eval: Callable[[float, np.ndarray], np.ndarray]
    declared_bound: float | None = None


def zero_field(dim: int) -> ForceField:
    z = np.zeros(dim)
    return ForceField(eval=lambda t, q, p: z, declared_bound=0.0)


def zero_interaction(dim: int) -> InteractionField:
    z = np.zeros(dim)
    return InteractionField(eval=lambda t, state: z, declared_bound=0.0)


def viscous_friction(gamma: float, threshold: float = 1.0) -> FrictionField:
    """Plain viscous friction ``-gamma * p`` with exact quotient ``-gamma``."""
    return FrictionField(eval=lambda t, q, p: -gamma * p,
                         threshold=threshold,
                         gamma_sup=-gamma if gamma > 0 else 0.0)


@dataclass
class CoupledSystem:
    """Blocks, per-block force fields, and the common forcing period."""

    blocks: list[ChartBlock]
    forces: list[ForceField]
    frictions: list[FrictionField]
    interactions: list[InteractionField]
    period: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.blocks)
        if not (len(self.forces) == len(self.frictions) == len(self.interactions) == n):
            raise ValidationError("need one force/friction/interaction per block")
        if n == 0:
            raise ValidationError("a system needs at least one block")
        if self.period <= 0:
            raise ValidationError("period must be strictly positive")
        offs = []
        off = 0
        for b in self.blocks:
            offs.append(off)
            off += 2 * b.dim
        self._offsets = offs
        self._state_dim = off

    # -- state layout ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def state_dim(self) -> int:
        return self._state_dim

    def slices(self, i: int) -> tuple[slice, slice]:
        d = self.blocks[i].dim
        off = self._offsets[i]
        return slice(off, off + d), slice(off + d, off + 2 * d)

    def block_state(self, i: int, state: np.ndarray) -> TangentState:
        qs, ps = self.slices(i)
        return TangentState(q=state[qs], p=state[ps])

    def pack(self, parts: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
        out = np.empty(self.state_dim)
        for i, (q, p) in enumerate(parts):
            qs, ps = self.slices(i)
            out[qs] = as_point(q)
            out[ps] = as_point(p)
        return out

    def center_state(self) -> np.ndarray:
        return self.pack([(b.center, np.zeros(b.dim)) for b in self.blocks])

    def energies(self, state: np.ndarray) -> np.ndarray:
        out = np.empty(self.n)
        for i, b in enumerate(self.blocks):
            qs, ps = self.slices(i)
            out[i] = kinetic_energy(b, state[qs], state[ps], check=False)
        return out

    def contains(self, state: np.ndarray, enlarged: bool = False) -> bool:
        return all(b.contains(state[self.slices(i)[0]], enlarged=enlarged)
                   for i, b in enumerate(self.blocks))

    def require_inside(self, state: np.ndarray, enlarged: bool = True):
        for i, b in enumerate(self.blocks):
            b.require_inside(state[self.slices(i)[0]], enlarged=enlarged)

    def validate(self):
        for b in self.blocks:
            b.validate()


def total_force(system: CoupledSystem, i: int, t: float, state: np.ndarray,
                *, check: bool = True) -> np.ndarray:
    """Sum of external, friction, and interaction forces on block ``i``."""
    if check:
        system.require_inside(state, enlarged=True)
    qs, ps = system.slices(i)
    q, p = state[qs], state[ps]
    out = (np.asarray(system.forces[i].eval(t, q, p), dtype=float)
           + np.asarray(system.frictions[i].eval(t, q, p), dtype=float)
           + np.asarray(system.interactions[i].eval(t, state), dtype=float))
    if not np.all(np.isfinite(out)):
        raise NumericError(f"total force on block {i} non-finite at t={t}")
    return out


# -- built-in: pendulums above the horizontal line ------------------------


def make_pendulum_chain(pivots: Sequence[float],
                        lengths: Sequence[float] | float = 1.0,
                        masses: Sequence[float] | float = 1.0,
                        frictions: Sequence[float] | float = 0.5,
                        pivot_accel_amplitude: float = 0.0,
                        repulsion: float = 0.0,
                        gravity: float = GRAVITY,
                        period: float = 1.0,
                        friction_threshold: float = 1.0) -> CoupledSystem:
    """A row of planar pendulums held above the horizontal pivot line.

    Angles are measured from the upward vertical, so the blocks are
    ``phi_i in [-pi/2, pi/2]`` with the kinetic metric ``m_i l_i^2``.  All
    pivots ride a common horizontally oscillating rail whose acceleration
    is ``pivot_accel_amplitude * sin(2 pi t / period)``; only the pivot
    acceleration enters the dynamics.  Every pair of bobs repels along the
    line joining them with constant magnitude ``repulsion``.

    Pivot spacing must strictly exceed the summed lengths of each pair, so
    the pendulums can never touch.
    """
    s = [float(v) for v in pivots]
    n = len(s)
    if n == 0:
        raise ValidationError("need at least one pendulum")
    l = _broadcast(lengths, n, "lengths")
    m = _broadcast(masses, n, "masses")
    gam = _broadcast(frictions, n, "frictions")
    if any(v <= 0 for v in l) or any(v <= 0 for v in m):
        raise ValidationError("lengths and masses must be positive")
    if any(v < 0 for v in gam):
        raise ValidationError("friction coefficients must be non-negative")
    if repulsion < 0:
        raise ValidationError("repulsion magnitude must be non-negative")
    for i in range(n):
        for j in range(i + 1, n):
            if abs(s[i] - s[j]) <= l[i] + l[j]:
                raise ValidationError(
                    f"pendulums {i} and {j} are not disjoint: pivot distance "
                    f"{abs(s[i] - s[j])} <= {l[i] + l[j]}")

    amp = float(pivot_accel_amplitude)
    omega = 2.0 * math.pi / period

    def pivot_accel(t: float) -> float:
        return amp * math.sin(omega * t)

    blocks, forces, fric_fields, inters = [], [], [], []
    half = math.pi / 2.0
    for i in range(n):
        scale = m[i] * l[i] ** 2
        blocks.append(ChartBlock(bounds=[[-half, half]], kind="interval",
                                 metric=(lambda q, s=scale: np.array([[s]])),
                                 name=f"pendulum_{i}"))

        def force_eval(t, q, p, li=l[i]):
            phi = q[0]
            return np.array([-pivot_accel(t) / li * math.cos(phi)
                             + gravity / li * math.sin(phi)])

        # metric norm of the force vector: sqrt(m) * l * |f_chart|
        force_bound = math.sqrt(m[i]) * l[i] * (amp + gravity) / l[i]
        forces.append(ForceField(eval=force_eval, declared_bound=force_bound))
        fric_fields.append(viscous_friction(gam[i], threshold=friction_threshold))
        inters.append(_pendulum_interaction(i, s, l, m, repulsion))

    meta = {
        "kind": "pendulum-chain",
        "pivots": s, "lengths": l, "masses": m, "gammas": gam,
        "pivot_accel_amplitude": amp, "repulsion": repulsion,
        "gravity": gravity,
        "metric_scales": [m[i] * l[i] ** 2 for i in range(n)],
    }
    sys_ = CoupledSystem(blocks=blocks, forces=forces, frictions=fric_fields,
                         interactions=inters, period=period, meta=meta)
    sys_.validate()
    return sys_


def pendulum_positions(pivots, lengths, phis) -> np.ndarray:
    """Bob positions in the plane; the common rail offset cancels in all
    pairwise differences, so it is omitted."""
    return np.array([[pivots[i] + lengths[i] * math.sin(phis[i]),
                      lengths[i] * math.cos(phis[i])]
                     for i in range(len(pivots))])


def pendulum_pair_force(i: int, j: int, pivots, lengths, phis,
                        magnitude: float) -> np.ndarray:
    """Planar repelling force on bob ``i`` from bob ``j``."""
    r = pendulum_positions(pivots, lengths, phis)
    diff = r[i] - r[j]
    dist = float(np.linalg.norm(diff))
    if dist <= 0:
        raise NumericError(f"bobs {i} and {j} coincide")
    return magnitude * diff / dist


def _pendulum_interaction(i, s, l, m, kappa) -> InteractionField:
    n = len(s)
    if n == 1 or kappa == 0.0:
        return zero_interaction(1)

    def inter_eval(t, state, i=i):
        phis = [state[2 * j] for j in range(n)]
        e_phi = np.array([math.cos(phis[i]), -math.sin(phis[i])])
        torque = 0.0
        for j in range(n):
            if j == i:
                continue
            fij = pendulum_pair_force(i, j, s, l, phis, kappa)
            torque += float(fij @ e_phi)
        return np.array([torque / (m[i] * l[i])])

    # |F_ij| = kappa, projected onto a unit direction, summed over n-1 bobs;
    # metric norm multiplies by sqrt(m) * l.
    bound = math.sqrt(m[i]) * l[i] * (n - 1) * kappa / (m[i] * l[i])
    return InteractionField(eval=inter_eval, declared_bound=bound)


# -- built-in: Morse-potential oscillator chain ---------------------------

LN2 = math.log(2.0)


def morse_potential(gap: float, delta: float) -> float:
    u = 1.0 - math.exp(-(gap - delta))
    return 0.5 * u * u


def morse_force(gap: float, delta: float) -> float:
    """Derivative of the pair potential with respect to the gap."""
    e = math.exp(-(gap - delta))
    return (1.0 - e) * e


class MorseForcing:
    """Default external field ``eps * cos(pi x/(delta+a)) * (b + cos(2 pi t/T))``.

    At every junction abscissa ``k (delta + a)`` the spatial factor equals
    ``(-1)^k``, which gives the alternating-sign property the chain's
    boundary-exit argument needs (strictly, once ``eps > 0`` and ``b > 1``).
    """

    def __init__(self, epsilon: float, b: float, period: float,
                 delta: float, a: float):
        self.epsilon = float(epsilon)
        self.b = float(b)
        self.period = float(period)
        self.spacing = float(delta + a)

    def __call__(self, t: float, x: float) -> float:
        return (self.epsilon * math.cos(math.pi * x / self.spacing)
                * (self.b + math.cos(2.0 * math.pi * t / self.period)))

    @property
    def declared_bound(self) -> float:
        return abs(self.epsilon) * (abs(self.b) + 1.0)


def default_morse_forcing(epsilon: float, b: float, period: float,
                          delta: float, a: float) -> MorseForcing:
    return MorseForcing(epsilon, b, period, delta, a)


def make_morse_chain(n: int, gamma: float, delta: float, a: float,
                     forcing: Callable[[float, float], float] | None = None,
                     period: float = 1.0,
                     friction_threshold: float = 1.0) -> CoupledSystem:
    """Chain of unit-mass oscillators with Morse pair attraction.

    Particle ``i`` lives on ``[(2i-1)(delta+a), 2i(delta+a)]`` (1-based),
    between fixed end particles at ``0`` and ``(2n+1)(delta+a)``.  The gap
    parameter must satisfy ``a >= ln 2`` so that the pair force is
    non-increasing on every realizable gap.
    """
    if n < 1:
        raise ValidationError("need at least one oscillator")
    if gamma < 0:
        raise ValidationError("friction coefficient must be non-negative")
    if delta <= 0:
        raise ValidationError("delta must be positive")
    if a < LN2 - 1e-12:
        raise ValidationError(f"a must be >= ln 2 = {LN2:.12f}, got {a}")

    spacing = delta + a
    left_wall = 0.0
    right_wall = (2 * n + 1) * spacing

    blocks, forces, fric_fields, inters = [], [], [], []
    for i in range(1, n + 1):
        lo, hi = (2 * i - 1) * spacing, 2 * i * spacing
        blocks.append(ChartBlock(bounds=[[lo, hi]], kind="interval",
                                 name=f"oscillator_{i}"))
        if forcing is None:
            forces.append(zero_field(1))
        else:
            bound = getattr(forcing, "declared_bound", None)
            forces.append(ForceField(
                eval=(lambda t, q, p, F=forcing: np.array([F(t, q[0])])),
                declared_bound=bound))
        fric_fields.append(viscous_friction(gamma, threshold=friction_threshold))

        def inter_eval(t, state, idx=i - 1):
            x = state[2 * idx]
            left = left_wall if idx == 0 else state[2 * (idx - 1)]
            right = right_wall if idx == n - 1 else state[2 * (idx + 1)]
            return np.array([-morse_force(x - left, delta)
                             + morse_force(right - x, delta)])

        # each neighbor contributes at most the global pair-force peak 1/4
        inters.append(InteractionField(eval=inter_eval, declared_bound=0.5))

    meta = {
        "kind": "morse-chain",
        "n": n, "gamma": gamma, "delta": delta, "a": a,
        "spacing": spacing,
        "junctions": [k * spacing for k in range(1, 2 * n + 1)],
        "metric_scales": [1.0] * n,
    }
    if isinstance(forcing, MorseForcing):
        meta["forcing"] = {"epsilon": forcing.epsilon, "b": forcing.b}
    sys_ = CoupledSystem(blocks=blocks, forces=forces, frictions=fric_fields,
                         interactions=inters, period=period, meta=meta)
    sys_.meta["forcing_fn"] = forcing
    sys_.validate()
    return sys_


# -- sampled force bounds --------------------------------------------------


@dataclass
class BoundsEstimate:
    force: float
    interaction: float
    force_sampled: float
    interaction_sampled: float

    def __iter__(self):
        return iter((self.force, self.interaction))


def estimate_bounds(system: CoupledSystem, i: int, sampler,
                    energy_caps: Sequence[float] | None = None,
                    validate: bool = True) -> BoundsEstimate:
    """Sampled sup of the metric norms of the external and interaction
    forces on block ``i``, inflated by the sampler's safety factor.

    Velocities range over the per-block energy balls (``energy_caps`` or,
    if absent, the friction thresholds).  Declared bounds, when present,
    are validated against the sampled maxima.
    """
    from .sampling import scan_max  # local import to avoid cycles

    caps = list(energy_caps) if energy_caps is not None else \
        [f.threshold for f in system.frictions]
    ranges, decode = _full_state_ranges(system, caps)
    block = system.blocks[i]

    def force_norm(row):
        t, state = decode(row)
        qs, ps = system.slices(i)
        v = np.asarray(system.forces[i].eval(t, state[qs], state[ps]), dtype=float)
        _require_finite(v, f"force on block {i}")
        return metric_norm(block, state[qs], v, check=False)

    def inter_norm(row):
        t, state = decode(row)
        qs, _ = system.slices(i)
        v = np.asarray(system.interactions[i].eval(t, state), dtype=float)
        _require_finite(v, f"interaction on block {i}")
        return metric_norm(block, state[qs], v, check=False)

    res_f = scan_max(force_norm, ranges, sampler)
    res_i = scan_max(inter_norm, ranges, sampler)
    est = BoundsEstimate(force=sampler.safety * res_f.value,
                         interaction=sampler.safety * res_i.value,
                         force_sampled=res_f.value,
                         interaction_sampled=res_i.value)
    if validate:
        decl_f = system.forces[i].declared_bound
        decl_i = system.interactions[i].declared_bound
        tol = 1e-9
        if decl_f is not None and res_f.value > decl_f * (1 + tol) + tol:
            raise ValidationError(
                f"sampled force norm {res_f.value} exceeds declared bound "
                f"{decl_f} on block {i}")
        if decl_i is not None and res_i.value > decl_i * (1 + tol) + tol:
            raise ValidationError(
                f"sampled interaction norm {res_i.value} exceeds declared "
                f"bound {decl_i} on block {i}")
    return est


def _full_state_ranges(system: CoupledSystem, caps: Sequence[float]):
    """Scan box [t] + per block [q coords, energy fraction, direction] and a
    decoder mapping scan rows to (t, full state)."""
    ranges = [(0.0, system.period)]
    layout = []
    for j, b in enumerate(system.blocks):
        for c in range(b.dim):
            ranges.append(tuple(b.bounds[c]))
        ranges.append((0.0, 1.0))        # energy fraction of cap
        ranges.append((0.0, 1.0))        # direction parameter
        layout.append(b.dim)

    def decode(row):
        t = row[0]
        k = 1
        parts = []
        for j, b in enumerate(system.blocks):
            d = b.dim
            q = np.asarray(row[k:k + d], dtype=float)
            frac, direction = row[k + d], row[k + d + 1]
            p = velocity_from_energy(b, q, caps[j] * frac, direction)
            parts.append((q, p))
            k += d + 2
        return t, system.pack(parts)

    return ranges, decode


def velocity_from_energy(block: ChartBlock, q: np.ndarray, energy: float,
                         direction: float) -> np.ndarray:
    """Velocity of prescribed kinetic energy at ``q``.

    ``direction`` in [0, 1] selects the sign (1-D) or the angle (2-D) of
    the raw chart direction, which is then rescaled to the requested
    metric energy.
    """
    if energy <= 0:
        return np.zeros(block.dim)
    if block.dim == 1:
        raw = np.array([1.0 if direction >= 0.5 else -1.0])
    else:
        ang = 2.0 * math.pi * direction
        raw = np.array([math.cos(ang), math.sin(ang)])
    cur = kinetic_energy(block, q, raw, check=False)
    return raw * math.sqrt(energy / cur)


def _broadcast(value, n: int, what: str) -> list[float]:
    if np.isscalar(value):
        return [float(value)] * n
    out = [float(v) for v in value]
    if len(out) != n:
        raise ValidationError(f"{what} needs 1 or {n} entries, got {len(out)}")
    return out


def _require_finite(v: np.ndarray, what: str):
    if not np.all(np.isfinite(v)):
        raise NumericError(f"{what} evaluated to a non-finite value")
