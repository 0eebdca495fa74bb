"""Time integration in chart coordinates, exit-event detection, and the
period (stroboscopic) map.

Integration runs in the enlarged boxes: leaving a block through a face is
an event, not an error, because the trapping argument needs trajectories
slightly past the block boundary.  Leaving the enlarged box itself ends
the integration.  Face crossings and kinetic-energy cap crossings are
localized by sign-change bracketing refined to 1e-10 relative in time.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (ConfigurationError, EscapeError, IntegrationError,
                     ValidationError)
from .geometry import covariant_accel
from .systems import CoupledSystem, total_force

#: relative localization tolerance for event times
EVENT_TIME_RTOL = 1e-10


@dataclass
class IntegratorConfig:
    method: str = "rk45-adaptive"   # or "rk4-fixed"
    rtol: float = 1e-10
    atol: float = 1e-10
    step: float = 1e-3              # fixed-step size for rk4-fixed
    max_steps: int = 1_000_000
    samples: int = 200              # dense-output rows per call

    def __post_init__(self):
        if self.method not in ("rk45-adaptive", "rk4-fixed"):
            raise ConfigurationError(f"unknown integrator method {self.method!r}")
        if self.rtol <= 0 or self.atol <= 0 or self.step <= 0:
            raise ConfigurationError("tolerances and step must be positive")
        if self.max_steps < 1 or self.samples < 2:
            raise ConfigurationError("max_steps >= 1 and samples >= 2 required")


@dataclass
class TrajectoryEvent:
    time: float
    kind: str            # "block-exit" | "energy-cap" | "escape"
    block: int
    face: str | None
    state: np.ndarray

    @property
    def label(self) -> str:
        body = f"{self.kind}:{self.block}"
        return body if self.face is None else f"{body}:{self.face}"


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray            # (len(times), state_dim)
    energies: np.ndarray          # (len(times), n_blocks)
    events: list[TrajectoryEvent]
    block_dims: list[int]
    reached_end: bool

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def column_names(self) -> list[str]:
        cols = ["t"]
        for i, d in enumerate(self.block_dims, start=1):
            if d == 1:
                cols += [f"q_{i}", f"p_{i}"]
            else:
                cols += [f"q_{i}[{c}]" for c in range(d)]
                cols += [f"p_{i}[{c}]" for c in range(d)]
        cols += [f"T_{i}" for i in range(1, len(self.block_dims) + 1)]
        cols.append("event")
        return cols

    def to_csv(self, path):
        """RFC-4180-style CSV; events appear as labeled rows merged in time
        order with the dense samples (simultaneous events share a row)."""
        labels: dict[float, str] = {}
        for ev in self.events:
            key = round(ev.time, 15)
            labels[key] = f"{labels[key]};{ev.label}" if key in labels \
                else ev.label
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.column_names())
            for t, row, en in zip(self.times, self.states, self.energies):
                label = labels.get(round(float(t), 15), "")
                writer.writerow([_fmt(t), *map(_fmt, row), *map(_fmt, en), label])


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def rhs(system: CoupledSystem, t: float, state, *, check: bool = True) -> np.ndarray:
    """State derivative of the coupled second-order system."""
    state = np.asarray(state, dtype=float)
    if check:
        system.require_inside(state, enlarged=True)
    out = np.empty_like(state)
    for i, block in enumerate(system.blocks):
        qs, ps = system.slices(i)
        f = total_force(system, i, t, state, check=False)
        out[qs] = state[ps]
        out[ps] = covariant_accel(block, state[qs], state[ps], f, check=False)
    return out


# -- event machinery -------------------------------------------------------


class _Event:
    """Scalar event function with scipy-compatible attributes."""

    def __init__(self, fn, kind, block, face, direction, terminal):
        self._fn = fn
        self.kind = kind
        self.block = block
        self.face = face
        self.direction = direction
        self.terminal = terminal

    def __call__(self, t, y):
        return self._fn(t, y)


def _build_events(system: CoupledSystem, caps, stop_at_block_exit,
                  stop_at_cap) -> list[_Event]:
    events: list[_Event] = []
    for i, block in enumerate(system.blocks):
        qs, _ = system.slices(i)
        for f in block.faces():
            idx = qs.start + f.coord
            direction = 1.0 if f.side == "upper" else -1.0
            events.append(_Event(
                (lambda t, y, idx=idx, v=f.value: y[idx] - v),
                "block-exit", i, f.label, direction, stop_at_block_exit))
        # enlarged-box faces: always terminal
        enl = block.enlarged_bounds
        for c in range(block.dim):
            idx = qs.start + c
            events.append(_Event(
                (lambda t, y, idx=idx, v=enl[c, 0]: y[idx] - v),
                "escape", i, f"q[{c}]:lower", -1.0, True))
            events.append(_Event(
                (lambda t, y, idx=idx, v=enl[c, 1]: y[idx] - v),
                "escape", i, f"q[{c}]:upper", 1.0, True))
    if caps is not None:
        for i, cap in enumerate(caps):
            def shell(t, y, i=i, cap=cap):
                qs, ps = system.slices(i)
                g = system.blocks[i].metric_at(y[qs])
                return float(y[ps] @ g @ y[ps]) - cap
            events.append(_Event(shell, "energy-cap", i, None, 1.0, stop_at_cap))
    return events


def integrate(system: CoupledSystem, t0: float, state0, t1: float,
              config: IntegratorConfig | None = None,
              caps: Sequence[float] | None = None,
              stop_at_block_exit: bool = True,
              stop_at_cap: bool = True) -> Trajectory:
    """Integrate the coupled system from ``t0`` to ``t1``.

    Stops early with an event when a block face is crossed outward or a
    kinetic energy crosses its cap (if ``caps`` are supplied), unless the
    corresponding ``stop_at_*`` flag is cleared; crossing the enlarged
    bounds always ends the integration.
    """
    config = config or IntegratorConfig()
    state0 = np.asarray(state0, dtype=float)
    if t1 <= t0:
        raise ValidationError("need t1 > t0")
    if state0.shape != (system.state_dim,):
        raise ValidationError(
            f"state has shape {state0.shape}, expected ({system.state_dim},)")
    system.require_inside(state0, enlarged=True)
    events = _build_events(system, caps, stop_at_block_exit, stop_at_cap)
    if config.method == "rk4-fixed":
        return _integrate_rk4(system, t0, state0, t1, config, events)
    return _integrate_rk45(system, t0, state0, t1, config, events)


def _integrate_rk45(system, t0, state0, t1, config, events) -> Trajectory:
    fun = lambda t, y: rhs(system, t, y, check=False)
    t_eval = np.linspace(t0, t1, config.samples)
    # only escape events stop the solver itself; face and cap crossings are
    # localized afterwards on the dense output, so a trajectory that grazes
    # a face exactly at the end time cannot confuse the solver
    hard_stops = [ev for ev in events if ev.kind == "escape"]
    sol = solve_ivp(fun, (t0, t1), state0, method="RK45",
                    t_eval=t_eval, events=hard_stops or None,
                    rtol=config.rtol, atol=config.atol, dense_output=True)
    if sol.status == -1:
        partial = _assemble(system, sol.t, sol.y.T, [], reached_end=False)
        raise IntegrationError(f"integration failed: {sol.message}", partial)

    knots = sol.sol.ts if sol.sol is not None else np.array([t0])
    recorded = _scan_events(sol.sol, events, knots)
    cutoff = math.inf
    for ev_rec, terminal in recorded:
        if terminal:
            cutoff = min(cutoff, ev_rec.time)
    recorded = sorted([e for e, _ in recorded if e.time <= cutoff + 1e-15],
                      key=lambda e: e.time)

    times = [float(t) for t in sol.t if t <= cutoff + 1e-15]
    states = [np.asarray(sol.y[:, k]) for k, t in enumerate(sol.t)
              if t <= cutoff + 1e-15]
    for ev in recorded:
        if not any(abs(ev.time - t) < 1e-14 for t in times):
            times.append(ev.time)
            states.append(ev.state)
    order = np.argsort(times)
    times = [times[k] for k in order]
    states = [states[k] for k in order]
    reached_end = sol.status == 0 and math.isinf(cutoff) \
        and abs(times[-1] - t1) <= 1e-12 * max(1.0, abs(t1))
    return _assemble(system, times, states, recorded, reached_end)


def _scan_events(dense, events, knots):
    """Sign-change bracketing over the accepted solver steps, refined by
    bisection on the dense interpolant."""
    out = []
    for a, b in zip(knots[:-1], knots[1:]):
        if b <= a:
            continue
        ya, yb = dense(a), dense(b)
        for ev in events:
            va, vb = ev(a, ya), ev(b, yb)
            if not _crossed(va, vb, ev.direction):
                continue
            lo, hi = a, b
            v_lo = va
            for _ in range(200):
                if hi - lo <= EVENT_TIME_RTOL * max(1.0, abs(hi)):
                    break
                mid = 0.5 * (lo + hi)
                v_mid = ev(mid, dense(mid))
                if _crossed(v_lo, v_mid, ev.direction):
                    hi = mid
                else:
                    lo, v_lo = mid, v_mid
            out.append((TrajectoryEvent(float(hi), ev.kind, ev.block, ev.face,
                                        np.asarray(dense(hi))), ev.terminal))
    return out


def _integrate_rk4(system, t0, state0, t1, config, events) -> Trajectory:
    fun = lambda t, y: rhs(system, t, y, check=False)
    h = config.step
    n_steps = int(math.ceil((t1 - t0) / h - 1e-12))
    if n_steps > config.max_steps:
        raise IntegrationError(
            f"{n_steps} steps exceed max_steps={config.max_steps}", None)
    times = [t0]
    states = [state0.copy()]
    recorded: list[TrajectoryEvent] = []
    t, y = t0, state0.copy()
    prev_vals = [ev(t, y) for ev in events]
    stop = False
    for k in range(n_steps):
        h_k = min(h, t1 - t)
        y_new = _rk4_step(fun, t, y, h_k)
        vals = [ev(t + h_k, y_new) for ev in events]
        hits = []
        for ev, v0, v1 in zip(events, prev_vals, vals):
            if _crossed(v0, v1, ev.direction):
                s, y_ev = _bisect_event(fun, ev, t, y, h_k)
                hits.append((t + s, ev, y_ev))
        hits.sort(key=lambda item: item[0])
        cut = None
        for te, ev, ye in hits:
            recorded.append(TrajectoryEvent(te, ev.kind, ev.block, ev.face, ye))
            if ev.terminal:
                cut = (te, ye)
                break
        if cut is not None:
            recorded = [e for e in recorded if e.time <= cut[0] + 1e-15]
            times.append(cut[0])
            states.append(cut[1])
            stop = True
            break
        t, y, prev_vals = t + h_k, y_new, vals
        times.append(t)
        states.append(y.copy())
    reached_end = not stop and abs(times[-1] - t1) <= 1e-12 * max(1.0, abs(t1))
    for ev in recorded:
        if not any(abs(ev.time - tk) < 1e-14 for tk in times):
            times.append(ev.time)
            states.append(ev.state)
    order = np.argsort(times)
    times = [times[k] for k in order]
    states = [states[k] for k in order]
    return _assemble(system, times, states, recorded, reached_end)


def _rk4_step(fun, t, y, h):
    k1 = fun(t, y)
    k2 = fun(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = fun(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = fun(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _crossed(v0, v1, direction) -> bool:
    if direction > 0:
        return v0 < 0.0 <= v1
    if direction < 0:
        return v0 > 0.0 >= v1
    return v0 * v1 <= 0.0 and (v0 != 0.0 or v1 != 0.0)


def _bisect_event(fun, ev, t, y, h):
    """Locate the event inside one step by bisection on the substep size."""
    lo, hi = 0.0, h
    v_lo = ev(t, y)
    y_hi = _rk4_step(fun, t, y, hi)
    for _ in range(200):
        if hi - lo <= EVENT_TIME_RTOL * max(1.0, abs(t + hi)):
            break
        mid = 0.5 * (lo + hi)
        y_mid = _rk4_step(fun, t, y, mid)
        v_mid = ev(t + mid, y_mid)
        if _crossed(v_lo, v_mid, ev.direction):
            hi, y_hi = mid, y_mid
        else:
            lo, v_lo = mid, v_mid
    return hi, y_hi


def _assemble(system, times, states, events, reached_end) -> Trajectory:
    times = np.asarray([float(t) for t in times])
    states = np.asarray(states, dtype=float)
    energies = np.array([system.energies(s) for s in states]) \
        if len(states) else np.empty((0, system.n))
    return Trajectory(times=times, states=states, energies=energies,
                      events=list(events), reached_end=reached_end,
                      block_dims=[b.dim for b in system.blocks])


# -- stroboscopic map -------------------------------------------------------


def stroboscopic_map(system: CoupledSystem, state0,
                     config: IntegratorConfig | None = None,
                     caps: Sequence[float] | None = None,
                     return_trajectory: bool = False):
    """Flow the state over one forcing period.

    Block exits and cap crossings are recorded but do not stop the flow;
    leaving the enlarged bounds raises ``EscapeError``.  Fixed points of
    this map are initial conditions of periodic solutions.
    """
    config = config or IntegratorConfig()
    if not return_trajectory:
        config = replace(config, samples=2)
    traj = integrate(system, 0.0, state0, system.period, config, caps=caps,
                     stop_at_block_exit=False, stop_at_cap=False)
    if not traj.reached_end:
        escape = next((e for e in traj.events if e.kind == "escape"), None)
        where = f" at t={escape.time:.6g} ({escape.label})" if escape else ""
        raise EscapeError(f"trajectory left the enlarged bounds{where}")
    if return_trajectory:
        return traj.final_state, traj
    return traj.final_state
