"""Locating periodic solutions as fixed points of the period map.

The finder runs a damped Newton iteration on ``G(x) = P(x) - x`` with a
finite-difference Jacobian that is refreshed every few iterations and an
Armijo backtracking line search on the residual norm.  When Newton stalls
it falls back to plain Picard iteration, which converges on its own for
strongly damped systems.  A converged orbit is certified by its interior
margins: the distance of each coordinate trace from the block boundary and
of each kinetic energy from its cap.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import IntegratorConfig, Trajectory, stroboscopic_map
from .errors import EscapeError, ValidationError
from .systems import CoupledSystem

#: finite-difference step for period-map Jacobians
FD_STEP = 1e-6

#: tolerance floor for the tightened integrations behind monodromy columns
MONODROMY_TOL = 1e-12


@dataclass
class BlockMargins:
    block: int
    position: float   # min chart-box distance of the trace to the boundary
    energy: float     # min of cap minus kinetic energy along the trace

    def to_json_dict(self) -> dict:
        return {"block": self.block, "position": self.position,
                "energy": self.energy}


@dataclass
class OrbitResult:
    fixed_point: np.ndarray
    residual: float
    converged: bool
    iterations: int
    method: str
    orbit: Trajectory | None = None
    interior_margins: list[BlockMargins] = field(default_factory=list)
    floquet: np.ndarray | None = None
    monodromy_matrix: np.ndarray | None = None
    residual_history: list[float] = field(default_factory=list)
    restarts: int = 0
    seed: np.ndarray | None = None

    @property
    def interior(self) -> bool:
        return bool(self.interior_margins) and \
            all(m.position > 0 and m.energy > 0 for m in self.interior_margins)

    def to_json_dict(self) -> dict:
        return {
            "fixed_point": [float(v) for v in self.fixed_point],
            "residual": self.residual,
            "converged": self.converged,
            "iterations": self.iterations,
            "method": self.method,
            "interior_margins": [m.to_json_dict() for m in self.interior_margins],
            "interior": self.interior,
            "floquet": [{"re": float(m.real), "im": float(m.imag),
                         "abs": float(abs(m))} for m in self.floquet]
            if self.floquet is not None else None,
            "residual_history": self.residual_history,
            "restarts": self.restarts,
            "seed": [float(v) for v in self.seed] if self.seed is not None else None,
        }


def seed_grid(system: CoupledSystem, per_block_count: int = 1) -> list[np.ndarray]:
    """Deterministic initial guesses: per block, ``per_block_count``
    equispaced interior points ordered center-out, combined across blocks
    (centers first), all with zero velocity."""
    if per_block_count < 1:
        raise ValidationError("per_block_count must be >= 1")
    per_block = []
    for b in system.blocks:
        pts = _block_points(b, per_block_count)
        pts.sort(key=lambda q: float(np.linalg.norm(q - b.center)))
        per_block.append(pts)
    seeds = []
    for combo in itertools.product(*per_block):
        seeds.append(system.pack([(q, np.zeros(b.dim))
                                  for q, b in zip(combo, system.blocks)]))
    return seeds


def _block_points(block, count):
    if block.dim == 1:
        lo, hi = block.bounds[0]
        span = hi - lo
        return [np.array([lo + span * (j + 1) / (count + 1)]) for j in range(count)]
    side = max(int(math.ceil(math.sqrt(count))), 1)
    axes = []
    for c in range(block.dim):
        lo, hi = block.bounds[c]
        span = hi - lo
        axes.append([lo + span * (j + 1) / (side + 1) for j in range(side)])
    pts = [np.array(v) for v in itertools.product(*axes)]
    pts.sort(key=lambda q: float(np.linalg.norm(q - block.center)))
    return pts[:count]


def project_into_blocks(system: CoupledSystem, state, caps=None,
                        inset: float = 1e-3) -> np.ndarray:
    """Pull a state back into the blocks: clip coordinates slightly inside
    the bounds and rescale any over-cap velocity to half its cap."""
    state = np.array(state, dtype=float)
    for i, b in enumerate(system.blocks):
        qs, ps = system.slices(i)
        lo = b.bounds[:, 0] + inset * b.span
        hi = b.bounds[:, 1] - inset * b.span
        state[qs] = np.clip(state[qs], lo, hi)
        if caps is not None:
            energy = float(state[ps] @ b.metric_at(state[qs]) @ state[ps])
            cap = caps[i]
            if energy > cap:
                state[ps] *= math.sqrt(0.5 * cap / energy)
    return state


def find_periodic_orbit(system: CoupledSystem, guess,
                        method: str = "newton",
                        tol: float = 1e-10,
                        max_iter: int = 40,
                        config: IntegratorConfig | None = None,
                        caps=None,
                        jacobian_refresh: int = 3,
                        fd_step: float = FD_STEP,
                        max_restarts: int = 5,
                        compute_floquet: bool = True) -> OrbitResult:
    """Solve ``P(x) = x`` for the period map ``P`` starting from ``guess``.

    ``method`` is ``"newton"`` (with automatic Picard fallback on stall) or
    ``"picard"``.  Residuals are max-norms over the chart coordinates.  If
    an iterate escapes the enlarged bounds the solve restarts from a state
    projected back into the blocks, at most ``max_restarts`` times.
    """
    if method not in ("newton", "picard"):
        raise ValidationError(f"unknown method {method!r}")
    config = config or IntegratorConfig()
    x0 = np.asarray(guess, dtype=float)
    restarts = 0
    while True:
        try:
            result = _solve(system, x0, method, tol, max_iter, config,
                            jacobian_refresh, fd_step)
            break
        except EscapeError:
            restarts += 1
            if restarts > max_restarts:
                raise
            x0 = project_into_blocks(system, x0, caps)
    result.restarts = restarts
    result.seed = np.asarray(guess, dtype=float)

    if result.converged:
        _, traj = stroboscopic_map(system, result.fixed_point,
                                   config=config, caps=list(caps) if caps is not None else None,
                                   return_trajectory=True)
        result.orbit = traj
        result.interior_margins = interior_margins(system, traj, caps)
        if compute_floquet:
            mono, eig = monodromy(system, result.fixed_point, config)
            result.monodromy_matrix = mono
            result.floquet = eig
    return result


def _solve(system, x0, method, tol, max_iter, config, jacobian_refresh, fd_step):
    def pmap(x):
        return stroboscopic_map(system, x, config=config)

    x = x0.copy()
    gx = pmap(x) - x
    res = float(np.max(np.abs(gx)))
    history = [res]
    best_x, best_res = x.copy(), res
    jac = None
    since_refresh = jacobian_refresh   # force a build on first use
    stall = 0
    mode = method
    iterations = 0

    for iterations in range(1, max_iter + 1):
        if res < tol:
            break
        if mode == "picard":
            x = x + gx            # i.e. x <- P(x)
        else:
            if since_refresh >= jacobian_refresh or jac is None:
                jac = _fd_jacobian(pmap, x, gx + x, fd_step)
                since_refresh = 0
            since_refresh += 1
            try:
                dx = np.linalg.solve(jac, -gx)
            except np.linalg.LinAlgError:
                dx, *_ = np.linalg.lstsq(jac, -gx, rcond=None)
            x = _armijo(pmap, x, gx, dx, res)
        gx = pmap(x) - x
        res = float(np.max(np.abs(gx)))
        history.append(res)
        if res < best_res:
            best_x, best_res = x.copy(), res
        # stall detection: less than 10% reduction over 3 iterations
        if mode == "newton" and len(history) >= 4:
            if history[-1] > 0.9 * history[-4]:
                stall += 1
            else:
                stall = 0
            if stall >= 3:
                mode = "picard"
                stall = 0
    converged = best_res < tol
    return OrbitResult(fixed_point=best_x, residual=best_res,
                       converged=converged, iterations=iterations,
                       method=mode if mode == method else f"{method}+picard",
                       residual_history=history)


def _fd_jacobian(pmap, x, px, fd_step):
    """Forward-difference Jacobian of ``G(x) = P(x) - x``."""
    dim = x.size
    jac = np.empty((dim, dim))
    gx = px - x
    for j in range(dim):
        xp = x.copy()
        xp[j] += fd_step
        gp = pmap(xp) - xp
        jac[:, j] = (gp - gx) / fd_step
    return jac


def _armijo(pmap, x, gx, dx, res, shrink=0.5, slope=1e-4, max_backtracks=8):
    alpha = 1.0
    for _ in range(max_backtracks):
        trial = x + alpha * dx
        try:
            r_trial = float(np.max(np.abs(pmap(trial) - trial)))
        except EscapeError:
            alpha *= shrink
            continue
        if r_trial <= (1.0 - slope * alpha) * res:
            return trial
        alpha *= shrink
    return x + alpha * dx / shrink  # smallest step that was attempted


def monodromy(system: CoupledSystem, x_star,
              config: IntegratorConfig | None = None,
              fd_step: float = FD_STEP):
    """Finite-difference Jacobian of the period map at a fixed point, with
    its eigenvalues (the orbit's stability multipliers).

    Column integrations run at tightened tolerances so the differencing
    noise stays well below the step size.
    """
    config = config or IntegratorConfig()
    tight = replace(config, rtol=min(config.rtol, MONODROMY_TOL),
                    atol=min(config.atol, MONODROMY_TOL))
    x_star = np.asarray(x_star, dtype=float)

    def pmap(x):
        return stroboscopic_map(system, x, config=tight)

    base = pmap(x_star)
    dim = x_star.size
    mono = np.empty((dim, dim))
    for j in range(dim):
        xp = x_star.copy()
        xp[j] += fd_step
        mono[:, j] = (pmap(xp) - base) / fd_step
    return mono, np.linalg.eigvals(mono)


def interior_margins(system: CoupledSystem, orbit: Trajectory,
                     caps=None) -> list[BlockMargins]:
    """Worst-case interiority of an orbit trace, per block.

    Position margins use chart box distance to the boundary (closed blocks
    have no boundary and get an effectively infinite margin); energy
    margins are against the caps when provided.
    """
    out = []
    big = 1e308
    for i, b in enumerate(system.blocks):
        qs, _ = system.slices(i)
        qtrace = orbit.states[:, qs]
        if b.faces():
            lo_gap = np.min(qtrace - b.bounds[:, 0])
            hi_gap = np.min(b.bounds[:, 1] - qtrace)
            pos = float(min(lo_gap, hi_gap))
        else:
            pos = big
        if caps is not None:
            energy = float(np.min(caps[i] - orbit.energies[:, i]))
        else:
            energy = big
        out.append(BlockMargins(block=i, position=pos, energy=energy))
    return out
