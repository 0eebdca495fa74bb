"""Numeric checkers for the dissipativity and boundary-exit conditions.

Each checker scans a deterministic low-discrepancy sample of the relevant
states, polishes the worst sample by golden-section line searches, and
reports a pass/fail verdict with a witness point and a margin (distance
from failure).  A strictness margin separates strict inequalities from
round-off.  Sampling is a numeric proxy, not a proof: the checks certify
the hypotheses at desk scale only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, HypothesisFailure
from .geometry import BoundaryFace, covariant_accel, metric_inner
from .sampling import SamplerConfig, scan_max, scan_min
from .systems import (BoundsEstimate, CoupledSystem, estimate_bounds,
                      total_force, velocity_from_energy)

#: default cap inflation factor in the closed-form cap formula
CAP_SAFETY = 1.5

#: provisional kinetic-energy range multiplier used before caps exist
PROVISIONAL_ENERGY_FACTOR = 4.0


@dataclass
class CheckReport:
    """Outcome of one numeric check.

    ``margin`` measures the distance from failure in the check's natural
    units; the check passes iff the margin is positive.  A ``None`` margin
    marks a vacuous or not-evaluated check (see ``notes``).
    """

    name: str
    passed: bool
    margin: float | None
    value: float | None
    witness: dict
    sampler: str
    notes: str = ""
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "margin": self.margin,
            "value": self.value,
            "witness": self.witness,
            "sampler": self.sampler,
            "notes": self.notes,
            "details": self.details,
        }


@dataclass
class EnergyCaps:
    """Kinetic-energy cap per block, plus the inputs that produced it."""

    caps: list[float]
    thresholds: list[float]
    gamma_sups: list[float]
    force_bounds: list[float]
    interaction_bounds: list[float]
    safety: float = CAP_SAFETY

    def __getitem__(self, i: int) -> float:
        return self.caps[i]

    def __iter__(self):
        return iter(self.caps)

    def __len__(self):
        return len(self.caps)

    def to_json_dict(self) -> dict:
        return {
            "caps": self.caps,
            "thresholds": self.thresholds,
            "gamma_sups": self.gamma_sups,
            "force_bounds": self.force_bounds,
            "interaction_bounds": self.interaction_bounds,
            "safety": self.safety,
        }


# -- point evaluators (shared by checks and witness re-evaluation) ---------


def h1_quotient(system: CoupledSystem, i: int, t: float, q, p) -> float:
    """Dissipation quotient ``<f_friction, p> / <p, p>`` on block ``i``."""
    block = system.blocks[i]
    f = np.asarray(system.frictions[i].eval(t, np.atleast_1d(q),
                                            np.atleast_1d(p)), dtype=float)
    num = metric_inner(block, q, f, p, check=False)
    den = metric_inner(block, q, p, p, check=False)
    return num / den


def cap_shell_derivative(system: CoupledSystem, i: int, t: float, state) -> float:
    """Time derivative of the kinetic energy of block ``i``:
    ``2 <total force, p_i>``."""
    state = np.asarray(state, dtype=float)
    qs, ps = system.slices(i)
    f = total_force(system, i, t, state, check=False)
    return 2.0 * metric_inner(system.blocks[i], state[qs], f, state[ps], check=False)


def outward_acceleration(system: CoupledSystem, i: int, face: BoundaryFace,
                         t: float, state) -> float:
    """Metric inner product of the outward face normal with the covariant
    acceleration of block ``i``."""
    state = np.asarray(state, dtype=float)
    qs, ps = system.slices(i)
    q, p = state[qs], state[ps]
    f = total_force(system, i, t, state, check=False)
    acc = covariant_accel(system.blocks[i], q, p, f, check=False)
    nu = face.outward_normal(q)
    return metric_inner(system.blocks[i], q, nu, acc, check=False)


def forcing_sign_value(forcing, spacing: float, k: int, t: float) -> float:
    """Alternating-sign junction value ``(-1)^(k+1) F(t, k * spacing)``;
    the condition requires it to stay strictly negative."""
    return (-1.0) ** (k + 1) * forcing(t, k * spacing)


# -- individual checks ------------------------------------------------------


def check_H1(system: CoupledSystem, i: int, threshold: float | None = None,
             sampler: SamplerConfig | None = None,
             energy_max: float | None = None) -> CheckReport:
    """Sampled supremum of the dissipation quotient on block ``i`` over
    kinetic energies in ``(threshold, energy_max]``; passes iff it stays
    below ``-strictness`` (and below the declared ``gamma_sup``, if any)."""
    sampler = sampler or SamplerConfig()
    block = system.blocks[i]
    fric = system.frictions[i]
    d = float(threshold if threshold is not None else fric.threshold)
    if d <= 0:
        raise ConfigurationError("H1 threshold must be positive")
    e_max = float(energy_max) if energy_max is not None \
        else PROVISIONAL_ENERGY_FACTOR * d
    if e_max <= d:
        e_max = 2.0 * d

    ranges = [(0.0, system.period)]
    ranges += [tuple(b) for b in block.bounds]
    ranges += [(1e-6, 1.0), (0.0, 1.0)]   # energy fraction above d, direction

    def quotient(row):
        t = row[0]
        q = np.asarray(row[1:1 + block.dim])
        frac, direction = row[1 + block.dim], row[2 + block.dim]
        energy = d + frac * (e_max - d)
        p = velocity_from_energy(block, q, energy, direction)
        return h1_quotient(system, i, t, q, p)

    res = scan_max(quotient, ranges, sampler)
    sup = res.value
    margin = -sup - sampler.strictness
    notes = ""
    if fric.gamma_sup is not None and sup > fric.gamma_sup + sampler.strictness:
        # declared quotient bound violated: report that (negative) gap instead
        margin = fric.gamma_sup + sampler.strictness - sup
        notes = (f"sampled quotient {sup:.6g} exceeds declared "
                 f"gamma_sup {fric.gamma_sup:.6g}")
    passed = margin > 0
    t_w = res.point[0]
    q_w = res.point[1:1 + block.dim]
    p_w = velocity_from_energy(block, q_w,
                               d + res.point[1 + block.dim] * (e_max - d),
                               res.point[2 + block.dim])
    return CheckReport(
        name=f"H1:block{i}", passed=passed, margin=margin, value=sup,
        witness={"t": float(t_w), "q": list(map(float, q_w)),
                 "p": list(map(float, p_w)), "value": sup},
        sampler=res.description, notes=notes,
        details={"threshold": d, "energy_max": e_max,
                 "declared_gamma_sup": fric.gamma_sup})


def compute_energy_caps(system: CoupledSystem,
                        force_bounds: Sequence[float],
                        interaction_bounds: Sequence[float],
                        gamma_sups: Sequence[float] | None = None,
                        safety: float = CAP_SAFETY) -> EnergyCaps:
    """Energy caps from the dissipation balance.

    ``c_i = safety^2 * max(d_i, ((B_i + B_i^int) / (-gamma_sup_i))^2)``,
    which makes ``(B_i + B_i^int)/sqrt(c_i) + gamma_sup_i`` strictly
    negative, so the energy shells are crossed inward.
    """
    n = system.n
    if gamma_sups is None:
        gamma_sups = [f.gamma_sup for f in system.frictions]
    gamma_sups = [float(g) if g is not None else 0.0 for g in gamma_sups]
    thresholds = [f.threshold for f in system.frictions]
    caps = []
    for i in range(n):
        g = gamma_sups[i]
        if not g < 0:
            raise HypothesisFailure(
                f"block {i}: dissipation quotient bound {g} is not negative")
        b_total = float(force_bounds[i]) + float(interaction_bounds[i])
        if not math.isfinite(b_total):
            raise HypothesisFailure(f"block {i}: force bounds are not finite")
        caps.append(safety ** 2 * max(thresholds[i], (b_total / (-g)) ** 2))
    return EnergyCaps(caps=caps, thresholds=list(thresholds),
                      gamma_sups=gamma_sups,
                      force_bounds=[float(b) for b in force_bounds],
                      interaction_bounds=[float(b) for b in interaction_bounds],
                      safety=safety)


def check_energy_cap(system: CoupledSystem, caps: EnergyCaps | Sequence[float],
                     sampler: SamplerConfig | None = None) -> CheckReport:
    """On each block's cap shell, the kinetic energy must strictly decrease:
    sampled sup of ``dT_i/dt`` over shell states, all block positions, and
    capped foreign velocities must be negative."""
    sampler = sampler or SamplerConfig()
    cap_list = list(caps)
    n = system.n
    per_block = max(sampler.density // n, 256)
    worst = -math.inf
    worst_witness: dict = {}
    details = {}
    descr = ""
    for i in range(n):
        ranges, decode = _shell_ranges(system, cap_list, i)

        def ddt(row, i=i, decode=decode):
            t, state = decode(row)
            return cap_shell_derivative(system, i, t, state)

        res = scan_max(ddt, ranges, sampler, points=per_block)
        descr = res.description
        t_w, state_w = decode(res.point)
        details[f"block{i}"] = {"sup_dTdt": res.value,
                                "margin": -res.value - sampler.strictness}
        if res.value > worst:
            worst = res.value
            worst_witness = {"t": float(t_w), "block": i,
                             "state": list(map(float, state_w)),
                             "value": res.value}
    margin = -worst - sampler.strictness
    return CheckReport(name="energy-cap", passed=margin > 0, margin=margin,
                       value=worst, witness=worst_witness, sampler=descr,
                       details=details)


def check_boundary_exit(system: CoupledSystem, caps: EnergyCaps | Sequence[float],
                        sampler: SamplerConfig | None = None) -> CheckReport:
    """Outward acceleration on every block face.

    For states on a face with face-tangent velocity below the cap (zero for
    1-D blocks) and arbitrary capped states elsewhere, the outward normal
    component of the covariant acceleration must be uniformly positive.
    This is the checkable finite-sample proxy for instantaneous exit.
    """
    sampler = sampler or SamplerConfig()
    cap_list = list(caps)
    faces = [(i, f) for i, b in enumerate(system.blocks) for f in b.faces()]
    if not faces:
        return CheckReport(
            name="boundary-exit", passed=True, margin=None, value=None,
            witness={}, sampler="vacuous",
            notes="no boundary faces; exit condition is vacuous")
    per_face = max(sampler.density // len(faces), 256)
    worst = math.inf
    worst_witness: dict = {}
    details = {}
    descr = ""
    for i, face in faces:
        ranges, decode = _face_ranges(system, cap_list, i, face)

        def outward(row, i=i, face=face, decode=decode):
            t, state = decode(row)
            return outward_acceleration(system, i, face, t, state)

        res = scan_min(outward, ranges, sampler, points=per_face)
        descr = res.description
        t_w, state_w = decode(res.point)
        key = f"block{i}:{face.label}"
        details[key] = {"inf_outward": res.value,
                        "margin": res.value - sampler.strictness}
        if res.value < worst:
            worst = res.value
            worst_witness = {"t": float(t_w), "block": i, "face": face.label,
                             "state": list(map(float, state_w)),
                             "value": res.value}
    margin = worst - sampler.strictness
    return CheckReport(name="boundary-exit", passed=margin > 0, margin=margin,
                       value=worst, witness=worst_witness, sampler=descr,
                       details=details)


def check_morse_condition(forcing, delta: float, a: float, n: int,
                          period: float,
                          sampler: SamplerConfig | None = None) -> CheckReport:
    """Alternating-sign condition of the oscillator chain's external field
    at the 2n junction abscissae, over a full forcing period."""
    sampler = sampler or SamplerConfig()
    spacing = delta + a
    junctions = list(range(1, 2 * n + 1))
    per_junction = max(sampler.density // len(junctions), 256)
    worst = -math.inf
    worst_witness: dict = {}
    details = {}
    descr = ""
    for k in junctions:
        def signed(row, k=k):
            return forcing_sign_value(forcing, spacing, k, row[0])

        res = scan_max(signed, [(0.0, period)], sampler, points=per_junction)
        descr = res.description
        details[f"junction{k}"] = {"sup": res.value,
                                   "margin": -res.value - sampler.strictness}
        if res.value > worst:
            worst = res.value
            worst_witness = {"t": float(res.point[0]), "junction": k,
                             "x": k * spacing, "value": res.value}
    margin = -worst - sampler.strictness
    return CheckReport(name="forcing-sign", passed=margin > 0, margin=margin,
                       value=worst, witness=worst_witness, sampler=descr,
                       details=details)


# -- scan-space builders ----------------------------------------------------


def _foreign_ranges(block):
    """Scan dims for a block not otherwise constrained: q coords, energy
    fraction of its cap, direction."""
    return [tuple(b) for b in block.bounds] + [(0.0, 1.0), (0.0, 1.0)]


def _shell_ranges(system, caps, i):
    """Block ``i`` pinned to its cap shell; all other blocks range over
    their boxes and capped velocity balls."""
    ranges = [(0.0, system.period)]
    for j, b in enumerate(system.blocks):
        if j == i:
            ranges += [tuple(bb) for bb in b.bounds] + [(0.0, 1.0)]  # direction
        else:
            ranges += _foreign_ranges(b)

    def decode(row):
        t = row[0]
        k = 1
        parts = []
        for j, b in enumerate(system.blocks):
            d = b.dim
            q = np.asarray(row[k:k + d], dtype=float)
            if j == i:
                direction = row[k + d]
                p = velocity_from_energy(b, q, caps[j], direction)
                k += d + 1
            else:
                frac, direction = row[k + d], row[k + d + 1]
                p = velocity_from_energy(b, q, caps[j] * frac, direction)
                k += d + 2
            parts.append((q, p))
        return t, system.pack(parts)

    return ranges, decode


def _face_ranges(system, caps, i, face):
    """Block ``i`` pinned to ``face`` with face-tangent velocity below its
    cap; other blocks range over boxes and capped balls."""
    block = system.blocks[i]
    free_coords = [c for c in range(block.dim) if c != face.coord]
    ranges = [(0.0, system.period)]
    ranges += [tuple(block.bounds[c]) for c in free_coords]
    tangent_dims = block.dim - 1
    ranges += [(-1.0, 1.0)] * tangent_dims   # signed tangent speed fraction
    for j, b in enumerate(system.blocks):
        if j != i:
            ranges += _foreign_ranges(b)

    def decode(row):
        t = row[0]
        k = 1
        q_i = face.point(row[k:k + len(free_coords)])
        k += len(free_coords)
        p_i = np.zeros(block.dim)
        for c, frac in zip(free_coords, row[k:k + tangent_dims]):
            g = block.metric_at(q_i)
            p_i[c] = frac * math.sqrt(caps[i] / g[c, c])
        k += tangent_dims
        parts = []
        for j, b in enumerate(system.blocks):
            if j == i:
                parts.append((q_i, p_i))
                continue
            d = b.dim
            q = np.asarray(row[k:k + d], dtype=float)
            frac, direction = row[k + d], row[k + d + 1]
            parts.append((q, velocity_from_energy(b, q, caps[j] * frac, direction)))
            k += d + 2
        return t, system.pack(parts)

    return ranges, decode


# -- pipeline ---------------------------------------------------------------


@dataclass
class HypothesisRun:
    """Everything the applicability verdict needs: reports, caps, bounds."""

    reports: list[CheckReport]
    caps: EnergyCaps | None
    bounds: list[BoundsEstimate] | None


def run_hypothesis_checks(system: CoupledSystem,
                          sampler: SamplerConfig | None = None) -> HypothesisRun:
    """Full checker pipeline.

    Order: provisional H1 scan, sampled force bounds and energy caps
    (iterated until the caps stabilize, since the bound sampler ranges over
    the cap balls), final H1 on the capped range, cap-shell dissipation,
    boundary exit, and the junction sign condition for oscillator chains.
    When the dissipation data cannot produce caps, the dependent checks are
    reported as failed rather than raising.
    """
    sampler = sampler or SamplerConfig()
    n = system.n
    prelim = [check_H1(system, i, sampler=sampler) for i in range(n)]
    gamma_sups = []
    for i, rep in enumerate(prelim):
        declared = system.frictions[i].gamma_sup
        gamma_sups.append(declared if declared is not None else rep.value)

    caps = None
    bounds = None
    caps_error = ""
    if all(g is not None and g < 0 for g in gamma_sups) \
            and all(r.passed for r in prelim):
        try:
            caps, bounds = _caps_fixed_point(system, sampler, gamma_sups)
        except HypothesisFailure as exc:
            caps_error = str(exc)
    else:
        caps_error = "dissipation quotient is not negative"

    reports: list[CheckReport] = []
    if caps is not None:
        for i in range(n):
            reports.append(check_H1(system, i, sampler=sampler,
                                    energy_max=caps[i]))
        reports.append(_h2_report(system, bounds, sampler))
        reports.append(check_energy_cap(system, caps, sampler))
        reports.append(check_boundary_exit(system, caps, sampler))
    else:
        reports.extend(prelim)
        try:
            ests = [estimate_bounds(system, i, sampler, validate=False)
                    for i in range(n)]
            reports.append(_h2_report(system, ests, sampler))
            bounds = ests
        except Exception as exc:  # keep the report list complete
            reports.append(CheckReport(
                name="H2:bounds", passed=False, margin=None, value=None,
                witness={}, sampler="", notes=f"bound sampling failed: {exc}"))
        note = f"not evaluated: energy caps unavailable ({caps_error})"
        reports.append(CheckReport(name="energy-cap", passed=False,
                                   margin=None, value=None, witness={},
                                   sampler="", notes=note))
        reports.append(CheckReport(name="boundary-exit", passed=False,
                                   margin=None, value=None, witness={},
                                   sampler="", notes=note))

    forcing = system.meta.get("forcing_fn")
    if system.meta.get("kind") == "morse-chain" and forcing is not None:
        reports.append(check_morse_condition(
            forcing, system.meta["delta"], system.meta["a"],
            system.meta["n"], system.period, sampler))

    return HypothesisRun(reports=reports, caps=caps, bounds=bounds)


def _caps_fixed_point(system, sampler, gamma_sups, max_rounds: int = 8):
    """Iterate bound sampling over the current cap balls until caps settle;
    converges immediately for velocity-independent fields."""
    caps_vals = [f.threshold for f in system.frictions]
    caps = None
    bounds = None
    for _ in range(max_rounds):
        bounds = [estimate_bounds(system, i, sampler, energy_caps=caps_vals,
                                  validate=False)
                  for i in range(system.n)]
        caps = compute_energy_caps(system,
                                   [b.force for b in bounds],
                                   [b.interaction for b in bounds],
                                   gamma_sups=gamma_sups)
        if all(abs(c - c0) <= 1e-9 * max(1.0, c0)
               for c, c0 in zip(caps.caps, caps_vals)):
            break
        caps_vals = list(caps.caps)
    return caps, bounds


def _h2_report(system, bounds, sampler) -> CheckReport:
    """Boundedness report: sampled force norms are finite and respect any
    declared bounds (up to a 1e-9 slack for bounds that are attained)."""
    gaps = []
    details = {}
    finite = True
    for i, est in enumerate(bounds):
        entry = {"force_sampled": est.force_sampled,
                 "interaction_sampled": est.interaction_sampled,
                 "force_bound": est.force,
                 "interaction_bound": est.interaction}
        if not (math.isfinite(est.force_sampled)
                and math.isfinite(est.interaction_sampled)):
            finite = False
        decl_f = system.forces[i].declared_bound
        decl_i = system.interactions[i].declared_bound
        if decl_f is not None:
            entry["declared_force_bound"] = decl_f
            gaps.append(decl_f - est.force_sampled)
        if decl_i is not None:
            entry["declared_interaction_bound"] = decl_i
            gaps.append(decl_i - est.interaction_sampled)
        details[f"block{i}"] = entry
    if not finite:
        return CheckReport(name="H2:bounds", passed=False, margin=None,
                           value=None, witness={},
                           sampler=sampler.describe(0, 0),
                           notes="sampled a non-finite force norm",
                           details=details)
    margin = (min(gaps) + 1e-9) if gaps else None
    passed = margin is None or margin > 0
    notes = "" if gaps else "no declared bounds; finiteness only"
    return CheckReport(name="H2:bounds", passed=passed, margin=margin,
                       value=None, witness={}, sampler=sampler.describe(0, 0),
                       notes=notes, details=details)
