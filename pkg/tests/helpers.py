"""Shared builders for the test suite."""

import math

import numpy as np

from periorbit.geometry import ChartBlock
from periorbit.sampling import SamplerConfig
from periorbit.systems import (CoupledSystem, ForceField, FrictionField,
                               InteractionField, default_morse_forcing,
                               make_morse_chain, make_pendulum_chain,
                               viscous_friction, zero_field, zero_interaction)

LN2 = math.log(2.0)

#: reduced sampling for unit tests; acceptance runs use the defaults
FAST_SAMPLER = SamplerConfig(density=2000, refine_iters=30)


def build_morse(n=3, gamma=1.0, delta=1.0, a=LN2, epsilon=0.05, b=1.5,
                period=1.0):
    forcing = None
    if epsilon is not None:
        forcing = default_morse_forcing(epsilon, b, period, delta, a)
    return make_morse_chain(n=n, gamma=gamma, delta=delta, a=a,
                            forcing=forcing, period=period)


def build_pendulum(pivots=(0.0, 2.5), gammas=0.5, kappa=0.1, amp=0.2,
                   period=1.0, gravity=9.81):
    return make_pendulum_chain(pivots=list(pivots), lengths=1.0, masses=1.0,
                               frictions=gammas, pivot_accel_amplitude=amp,
                               repulsion=kappa, period=period, gravity=gravity)


def single_block_system(bounds=(-1.0, 1.0), force=None, friction=None,
                        gamma=0.5, period=1.0, metric=None, kind="interval",
                        chi=None, margin=None, force_bound=None):
    """One flat (or custom-metric) block with optional scalar force."""
    block = ChartBlock(bounds=[list(bounds)], kind=kind, metric=metric,
                       chi=chi, margin=margin, name="test_block")
    if force is None:
        ff = zero_field(1)
    else:
        ff = ForceField(eval=lambda t, q, p: np.array([force(t, q[0], p[0])]),
                        declared_bound=force_bound)
    fric = friction if friction is not None else viscous_friction(gamma)
    return CoupledSystem(blocks=[block], forces=[ff], frictions=[fric],
                         interactions=[zero_interaction(1)], period=period,
                         meta={"kind": "generic", "metric_scales": [1.0]})


def damped_oscillator(gamma=0.5, omega=2.0, amplitude=0.0, period=1.0,
                      bounds=(-2.0, 2.0)):
    """Forced damped linear oscillator ``xdd = -gamma xd - omega^2 x +
    amplitude sin(2 pi t / period)`` as a one-block system."""
    w2 = omega * omega
    big_omega = 2.0 * math.pi / period

    def force(t, x, p):
        return -w2 * x + amplitude * math.sin(big_omega * t)

    return single_block_system(bounds=bounds, force=force, gamma=gamma,
                               period=period,
                               force_bound=w2 * max(abs(b) for b in bounds)
                               + abs(amplitude))


def stable_pendulum(gamma=0.5, g_over_l=9.81, period=1.0):
    """Hanging pendulum (restoring gravity): stable equilibrium at zero."""
    return single_block_system(
        bounds=(-1.5, 1.5),
        force=lambda t, x, p: -g_over_l * math.sin(x),
        gamma=gamma, period=period, force_bound=g_over_l)


def two_block_system(forces, gammas=(0.5, 0.5), bounds=((-2, 2), (-2, 2)),
                     period=1.0):
    """Two decoupled flat blocks with scalar forces (for monodromy tests)."""
    blocks = [ChartBlock(bounds=[list(b)], kind="interval", name=f"b{i}")
              for i, b in enumerate(bounds)]
    ffs = [ForceField(eval=(lambda t, q, p, f=f: np.array([f(t, q[0], p[0])])))
           for f in forces]
    frics = [viscous_friction(g) for g in gammas]
    inters = [zero_interaction(1), zero_interaction(1)]
    return CoupledSystem(blocks=blocks, forces=ffs, frictions=frics,
                         interactions=inters, period=period,
                         meta={"kind": "generic", "metric_scales": [1.0, 1.0]})


def polar_block(analytic=True, margin=None):
    """2-D block with the flat-plane metric in polar-type coordinates
    ``diag(1, r^2)``; Christoffel symbols optionally supplied analytically."""
    def metric(q):
        return np.diag([1.0, q[0] ** 2])

    def christoffel(q):
        r = q[0]
        gamma = np.zeros((2, 2, 2))
        gamma[0, 1, 1] = -r
        gamma[1, 0, 1] = 1.0 / r
        gamma[1, 1, 0] = 1.0 / r
        return gamma

    return ChartBlock(bounds=[[1.0, 2.0], [0.0, 1.0]], kind="disk-like-2d",
                      metric=metric,
                      christoffel=christoffel if analytic else None,
                      margin=margin, name="polar")
