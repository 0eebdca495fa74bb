"""Run configuration: one JSON document describing the system, the
integrator, the check sampling plan, the solver, and optional sweep axes.

Systems are either built-ins selected by name (``pendulum-chain``,
``morse-chain``) or generic block lists whose scalar fields are expression
strings over ``t``, ``q``, ``p`` (and ``q1..qn``/``p1..pn`` for
interactions).
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import numpy as np

from .dynamics import IntegratorConfig
from .errors import ConfigurationError
from .expressions import compile_expression
from .geometry import ChartBlock
from .jsonio import sha256_of
from .sampling import SamplerConfig
from .systems import (CoupledSystem, ForceField, FrictionField,
                      InteractionField, default_morse_forcing,
                      make_morse_chain, make_pendulum_chain, zero_field,
                      zero_interaction)

BUILTIN_SYSTEMS = ("pendulum-chain", "morse-chain")


@dataclass
class SolverSettings:
    method: str = "newton"
    tol: float = 1e-10
    max_iter: int = 40
    jacobian_refresh: int = 3
    fd_step: float = 1e-6


@dataclass
class RunConfig:
    raw: dict

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigurationError("config root must be a JSON object")
        return cls(raw=raw)

    # -- sections ---------------------------------------------------------

    @property
    def system_spec(self) -> dict:
        spec = self.raw.get("system")
        if not isinstance(spec, dict):
            raise ConfigurationError("config needs a 'system' object")
        return spec

    def integrator(self) -> IntegratorConfig:
        sec = dict(self.raw.get("integrator", {}))
        try:
            return IntegratorConfig(**sec)
        except TypeError as exc:
            raise ConfigurationError(f"bad integrator section: {exc}") from exc

    def sampler(self) -> SamplerConfig:
        sec = dict(self.raw.get("checks", {}))
        try:
            return SamplerConfig(**sec)
        except TypeError as exc:
            raise ConfigurationError(f"bad checks section: {exc}") from exc

    def solver(self) -> SolverSettings:
        sec = dict(self.raw.get("solver", {}))
        try:
            settings = SolverSettings(**sec)
        except TypeError as exc:
            raise ConfigurationError(f"bad solver section: {exc}") from exc
        if settings.method not in ("newton", "picard"):
            raise ConfigurationError(f"unknown solver method {settings.method!r}")
        return settings

    @property
    def seed_grid_count(self) -> int:
        count = self.raw.get("seed_grid", 1)
        if not isinstance(count, int) or count < 1:
            raise ConfigurationError("seed_grid must be a positive integer")
        return count

    @property
    def simulate_section(self) -> dict:
        return dict(self.raw.get("simulate", {}))

    def sweep_axes(self) -> list[dict]:
        axes = self.raw.get("sweep", [])
        if not isinstance(axes, list):
            raise ConfigurationError("sweep must be a list of axes")
        for axis in axes:
            if not isinstance(axis, dict) or "param" not in axis \
                    or "values" not in axis or not axis["values"]:
                raise ConfigurationError(
                    "each sweep axis needs 'param' and non-empty 'values'")
            get_by_path(self.raw, axis["param"])  # must reference an existing key
        return axes

    # -- derived ----------------------------------------------------------

    def build_system(self) -> CoupledSystem:
        return build_system(self.system_spec)

    def hash(self) -> str:
        return sha256_of(_canonical(self.raw))

    def with_override(self, path: str, value) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        set_by_path(raw, path, value)
        return RunConfig(raw=raw)


def _canonical(obj):
    """Key-sorted deep copy so hashing ignores key order."""
    if isinstance(obj, dict):
        return {k: _canonical(obj[k]) for k in sorted(obj)}
    if isinstance(obj, list):
        return [_canonical(v) for v in obj]
    return obj


def get_by_path(raw: dict, path: str):
    node = raw
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigurationError(f"sweep parameter {path!r} not found in config")
        node = node[part]
    return node


def set_by_path(raw: dict, path: str, value):
    parts = path.split(".")
    node = raw
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigurationError(f"parameter path {path!r} not found in config")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigurationError(f"parameter path {path!r} not found in config")
    node[parts[-1]] = value


# -- system building --------------------------------------------------------


def build_system(spec: dict) -> CoupledSystem:
    period = spec.get("period", 1.0)
    if not isinstance(period, (int, float)) or period <= 0:
        raise ConfigurationError("system.period must be a positive number")
    name = spec.get("name", "generic")
    if name == "pendulum-chain":
        return _build_pendulum(spec.get("params", {}), float(period))
    if name == "morse-chain":
        return _build_morse(spec.get("params", {}), float(period))
    if name == "generic":
        return _build_generic(spec, float(period))
    raise ConfigurationError(
        f"unknown system name {name!r}; expected one of "
        f"{BUILTIN_SYSTEMS + ('generic',)}")


def _build_pendulum(params: dict, period: float) -> CoupledSystem:
    try:
        return make_pendulum_chain(
            pivots=params["pivots"],
            lengths=params.get("lengths", 1.0),
            masses=params.get("masses", 1.0),
            frictions=params.get("gammas", 0.5),
            pivot_accel_amplitude=params.get("pivot_accel_amplitude", 0.0),
            repulsion=params.get("kappa", 0.0),
            gravity=params.get("gravity", 9.81),
            period=period,
            friction_threshold=params.get("friction_threshold", 1.0))
    except KeyError as exc:
        raise ConfigurationError(f"pendulum-chain params missing {exc}") from exc


def _build_morse(params: dict, period: float) -> CoupledSystem:
    try:
        n = params["n"]
        gamma = params["gamma"]
        delta = params["delta"]
        a = params["a"]
    except KeyError as exc:
        raise ConfigurationError(f"morse-chain params missing {exc}") from exc
    forcing = None
    if "epsilon" in params:
        forcing = default_morse_forcing(params["epsilon"], params.get("b", 1.5),
                                        period, delta, a)
    return make_morse_chain(n=n, gamma=gamma, delta=delta, a=a,
                            forcing=forcing, period=period,
                            friction_threshold=params.get("friction_threshold", 1.0))


def _build_generic(spec: dict, period: float) -> CoupledSystem:
    blocks_spec = spec.get("blocks")
    fields_spec = spec.get("fields")
    if not blocks_spec or not fields_spec or len(blocks_spec) != len(fields_spec):
        raise ConfigurationError(
            "generic systems need matching 'blocks' and 'fields' lists")
    constants = dict(spec.get("constants", {}))
    constants.setdefault("T", period)

    blocks = []
    metric_scales = []
    for k, bs in enumerate(blocks_spec):
        if "bounds" not in bs:
            raise ConfigurationError(f"block {k} needs 'bounds'")
        metric_fn, scale = _constant_metric(bs.get("metric"), k)
        blocks.append(ChartBlock(bounds=bs["bounds"],
                                 kind=bs.get("kind", "interval"),
                                 metric=metric_fn,
                                 margin=bs.get("margin"),
                                 chi=bs.get("chi"),
                                 name=bs.get("name", f"block_{k}")))
        metric_scales.append(scale)

    n = len(blocks)
    forces, frictions, interactions = [], [], []
    for i, fs in enumerate(fields_spec):
        dim = blocks[i].dim
        forces.append(_force_from_spec(fs.get("force"), fs.get("force_bound"),
                                       dim, constants))
        frictions.append(_friction_from_spec(fs.get("friction"), dim, constants, i))
        interactions.append(_interaction_from_spec(
            fs.get("interaction"), fs.get("interaction_bound"),
            blocks, i, constants))

    meta = {"kind": "generic", "metric_scales": metric_scales}
    system = CoupledSystem(blocks=blocks, forces=forces, frictions=frictions,
                           interactions=interactions, period=period, meta=meta)
    system.validate()
    return system


def _constant_metric(value, block_index):
    if value is None:
        return None, 1.0
    if isinstance(value, (int, float)):
        if value <= 0:
            raise ConfigurationError(f"block {block_index}: metric must be positive")
        g = float(value)
        return (lambda q, g=g: g * np.eye(q.size)), g
    if isinstance(value, list):
        mat = np.asarray(value, dtype=float)
        return (lambda q, mat=mat: mat), None
    raise ConfigurationError(
        f"block {block_index}: metric must be a number or a matrix")


def _component_vars(dim: int) -> list[str]:
    if dim == 1:
        return ["t", "q", "p"]
    names = ["t"]
    names += [f"q{c}" for c in range(dim)]
    names += [f"p{c}" for c in range(dim)]
    return names


def _compile_components(exprs, dim, constants) -> list:
    if isinstance(exprs, str):
        exprs = [exprs]
    if len(exprs) != dim:
        raise ConfigurationError(
            f"field needs {dim} component expression(s), got {len(exprs)}")
    variables = _component_vars(dim)
    return [compile_expression(e, variables, constants) for e in exprs]


def _force_from_spec(expr, bound, dim, constants) -> ForceField:
    if expr is None:
        return zero_field(dim)
    fns = _compile_components(expr, dim, constants)

    def ev(t, q, p):
        args = (t, *q, *p) if dim > 1 else (t, q[0], p[0])
        return np.array([fn(*args) for fn in fns])

    return ForceField(eval=ev, declared_bound=bound)


def _friction_from_spec(spec, dim, constants, block_index) -> FrictionField:
    if spec is None:
        raise ConfigurationError(
            f"block {block_index}: a friction spec with 'expr' is required")
    if isinstance(spec, str):
        spec = {"expr": spec}
    if "expr" not in spec:
        raise ConfigurationError(f"block {block_index}: friction needs 'expr'")
    fns = _compile_components(spec["expr"], dim, constants)

    def ev(t, q, p):
        args = (t, *q, *p) if dim > 1 else (t, q[0], p[0])
        return np.array([fn(*args) for fn in fns])

    return FrictionField(eval=ev,
                         threshold=spec.get("threshold", 1.0),
                         gamma_sup=spec.get("gamma_sup"))


def _interaction_from_spec(expr, bound, blocks, i, constants) -> InteractionField:
    dim = blocks[i].dim
    if expr is None:
        return zero_interaction(dim)
    if any(b.dim != 1 for b in blocks):
        raise ConfigurationError(
            "interaction expressions require all blocks to be 1-dimensional")
    n = len(blocks)
    variables = ["t"]
    variables += [f"q{j}" for j in range(1, n + 1)]
    variables += [f"p{j}" for j in range(1, n + 1)]
    if isinstance(expr, list):
        raise ConfigurationError("interaction expression must be a single string")
    fn = compile_expression(expr, variables, constants)

    def ev(t, state):
        qs = [state[2 * j] for j in range(n)]
        ps = [state[2 * j + 1] for j in range(n)]
        return np.array([fn(t, *qs, *ps)])

    return InteractionField(eval=ev, declared_bound=bound)
