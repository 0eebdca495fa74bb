"""Euler-characteristic bookkeeping and the fixed-point index.

The time-extended block ``W = [0, T] x (blocks x capped velocity balls)``
is a simple periodic segment once the dissipation and boundary-exit checks
hold.  Its essential exit set deformation-retracts onto products where one
or more factors are replaced by their boundaries, so all characteristic
arithmetic reduces to integer products over block kinds.  Blocks with a
two-point boundary (compact intervals) are the only ones that contribute;
their count ``k`` drives the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .errors import ConfigurationError, ResourceError
from .geometry import BOUNDARY_CHI

#: subset enumeration guard for the inclusion-exclusion oracle
MAX_ORACLE_BLOCKS = 12

REQUIRED_CHECK_FAMILIES = ("H1", "H2", "energy-cap", "boundary-exit")
OPTIONAL_CHECK_FAMILIES = ("forcing-sign",)


@dataclass
class PeriodicSegmentSpec:
    """Combinatorial description of the segment: block kinds, chi values,
    energy caps, and the time interval."""

    kinds: list[str]
    chis: list[int]
    caps: list[float] = field(default_factory=list)
    period: float = 1.0

    def __post_init__(self):
        if len(self.kinds) != len(self.chis):
            raise ConfigurationError("kinds and chis must align")
        for k in self.kinds:
            if k not in BOUNDARY_CHI:
                raise ConfigurationError(f"unknown block kind {k!r}")
        if not self.caps:
            self.caps = [1.0] * len(self.kinds)

    @property
    def n(self) -> int:
        return len(self.kinds)

    @property
    def boundary_chis(self) -> list[int]:
        return [BOUNDARY_CHI[k] for k in self.kinds]

    @property
    def two_point_count(self) -> int:
        """Number of blocks whose boundary is a two-point set."""
        return sum(1 for k in self.kinds if k == "interval")

    def face_labels(self) -> list[str]:
        out = []
        for i, k in enumerate(self.kinds):
            if k == "interval":
                out += [f"block{i}:q[0]:lower", f"block{i}:q[0]:upper"]
            elif k == "disk-like-2d":
                out += [f"block{i}:q[{c}]:{side}"
                        for c in (0, 1) for side in ("lower", "upper")]
        return out

    @classmethod
    def from_system(cls, system, caps=None) -> "PeriodicSegmentSpec":
        return cls(kinds=[b.kind for b in system.blocks],
                   chis=[int(b.chi) for b in system.blocks],
                   caps=list(caps) if caps is not None else [],
                   period=system.period)


def euler_char_product(spec: PeriodicSegmentSpec) -> int:
    """Characteristic of the product of all blocks."""
    out = 1
    for chi in spec.chis:
        out *= int(chi)
    return out


def exit_set_char_closed_form(spec: PeriodicSegmentSpec) -> int:
    """Characteristic of the essential exit set: ``chi(M) * (1 + (-1)^(k+1))``
    with ``k`` the number of two-point-boundary blocks."""
    k = spec.two_point_count
    return euler_char_product(spec) * (1 + (-1) ** (k + 1))


def exit_set_char_oracle(spec: PeriodicSegmentSpec) -> int:
    """Inclusion-exclusion over the per-block exit faces.

    Enumerates every nonempty subset J of blocks, replaces the factors in J
    by their boundaries, and sums ``(-1)^(|J|+1)`` times the product
    characteristic.  Must agree with the closed form; kept brute-force as
    an independent cross-check.
    """
    n = spec.n
    if n > MAX_ORACLE_BLOCKS:
        raise ResourceError(f"oracle enumeration limited to n <= {MAX_ORACLE_BLOCKS}")
    chis = spec.chis
    bchis = spec.boundary_chis
    total = 0
    for size in range(1, n + 1):
        for subset in combinations(range(n), size):
            prod = 1
            for i in range(n):
                prod *= bchis[i] if i in subset else chis[i]
            total += (-1) ** (size + 1) * prod
    return total


def fixed_point_index(spec: PeriodicSegmentSpec) -> int:
    """Index of the period map on the trapped set:
    ``chi(W_0) - chi(W_0^-) = chi(M) * (-1)^k``."""
    return euler_char_product(spec) - exit_set_char_closed_form(spec)


@dataclass
class Verdict:
    """Aggregate applicability of the existence theorem."""

    applies: bool
    index: int
    reasons: list[str]
    euler_product: int
    exit_set_char: int
    conclusion: str = ""

    def to_json_dict(self) -> dict:
        return {
            "applies": self.applies,
            "index": self.index,
            "reasons": self.reasons,
            "euler_product": self.euler_product,
            "exit_set_char": self.exit_set_char,
            "conclusion": self.conclusion,
        }


def theorem_applies(spec: PeriodicSegmentSpec, reports) -> Verdict:
    """Combine the characteristic data with the checker reports.

    ``reports`` is an iterable of CheckReport-like objects with ``name``
    and ``passed`` attributes.  Report names are grouped by the prefix
    before the first ":".  Families H1, H2, energy-cap, and boundary-exit
    are required; a forcing-sign report participates when present.
    """
    by_family: dict[str, bool] = {}
    for rep in reports:
        fam = rep.name.split(":", 1)[0]
        by_family[fam] = by_family.get(fam, True) and bool(rep.passed)

    for fam in REQUIRED_CHECK_FAMILIES:
        if fam not in by_family:
            raise ConfigurationError(f"missing required check report family {fam!r}")

    reasons = []
    if any(chi == 0 for chi in spec.chis):
        reasons.append("chi")
    for fam in REQUIRED_CHECK_FAMILIES:
        if not by_family[fam]:
            reasons.append(fam)
    for fam in OPTIONAL_CHECK_FAMILIES:
        if fam in by_family and not by_family[fam]:
            reasons.append(fam)
    index = fixed_point_index(spec)
    if index == 0:
        reasons.append("index")

    applies = not reasons
    conclusion = ""
    if applies:
        conclusion = ("a periodic solution with the forcing period exists, "
                      "with every coordinate staying in the interior of its "
                      "block and every kinetic energy below its cap")
    return Verdict(applies=applies, index=index, reasons=reasons,
                   euler_product=euler_char_product(spec),
                   exit_set_char=exit_set_char_closed_form(spec),
                   conclusion=conclusion)
