"""Verification and location of forced periodic oscillations in coupled
dissipative systems on compact coordinate blocks.

The library checks the dissipativity and boundary-exit hypotheses of the
trapped-block existence argument numerically, evaluates the fixed-point
index from Euler-characteristic bookkeeping, and then finds the periodic
solution as a fixed point of the period map.
"""

__version__ = "0.1.0"

from .dynamics import IntegratorConfig, Trajectory, integrate, rhs, stroboscopic_map
from .geometry import (BoundaryFace, ChartBlock, TangentState, covariant_accel,
                       kinetic_energy, metric_inner)
from .hypotheses import (CheckReport, EnergyCaps, check_H1, check_boundary_exit,
                         check_energy_cap, check_morse_condition,
                         compute_energy_caps, run_hypothesis_checks)
from .orbit import OrbitResult, find_periodic_orbit, monodromy, seed_grid
from .sampling import SamplerConfig
from .systems import (CoupledSystem, ForceField, FrictionField,
                      InteractionField, default_morse_forcing, estimate_bounds,
                      make_morse_chain, make_pendulum_chain, total_force)
from .topology import (PeriodicSegmentSpec, Verdict, euler_char_product,
                       exit_set_char_closed_form, exit_set_char_oracle,
                       fixed_point_index, theorem_applies)

__all__ = [
    "__version__",
    "BoundaryFace", "ChartBlock", "TangentState",
    "metric_inner", "kinetic_energy", "covariant_accel",
    "CoupledSystem", "ForceField", "FrictionField", "InteractionField",
    "total_force", "make_pendulum_chain", "make_morse_chain",
    "default_morse_forcing", "estimate_bounds",
    "CheckReport", "EnergyCaps", "check_H1", "compute_energy_caps",
    "check_energy_cap", "check_boundary_exit", "check_morse_condition",
    "run_hypothesis_checks", "SamplerConfig",
    "PeriodicSegmentSpec", "Verdict", "euler_char_product",
    "exit_set_char_closed_form", "exit_set_char_oracle",
    "fixed_point_index", "theorem_applies",
    "IntegratorConfig", "Trajectory", "rhs", "integrate", "stroboscopic_map",
    "OrbitResult", "find_periodic_orbit", "monodromy", "seed_grid",
]
