"""Acceptance suite.

One test per criterion, run at the stated tolerances with the default
sampling densities, printing one PASS/FAIL line per criterion.  The two
reproduction runs go through the CLI end to end and are shared between
criteria via session fixtures.
"""

import json
import math
import time
from itertools import product

import numpy as np
import pytest

from helpers import LN2, build_morse, build_pendulum
from helpers import damped_oscillator
from periorbit.cli import main
from periorbit.dynamics import IntegratorConfig, integrate
from periorbit.hypotheses import check_energy_cap
from periorbit.orbit import find_periodic_orbit
from periorbit.sampling import SamplerConfig
from periorbit.topology import (PeriodicSegmentSpec, euler_char_product,
                                exit_set_char_closed_form,
                                exit_set_char_oracle, fixed_point_index)


def _verdict_line(name, ok):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"acceptance criterion failed: {name}"


def _write(tmp, doc, name):
    path = tmp / name
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return str(path)


MORSE_CONFIG = {
    "system": {
        "name": "morse-chain",
        "period": 1.0,
        "params": {"n": 3, "gamma": 1.0, "delta": 1.0, "a": LN2,
                   "epsilon": 0.05, "b": 1.5},
    },
}

PENDULUM_CONFIG = {
    "system": {
        "name": "pendulum-chain",
        "period": 1.0,
        "params": {"pivots": [0.0, 2.5], "lengths": 1.0, "masses": 1.0,
                   "gammas": 0.5, "kappa": 0.1,
                   "pivot_accel_amplitude": 0.2},
    },
}


@pytest.fixture(scope="session")
def morse_ctx(tmp_path_factory):
    """Full Morse-chain acceptance run (default densities) via the CLI."""
    tmp = tmp_path_factory.mktemp("morse_acceptance")
    cfg = _write(tmp, MORSE_CONFIG, "config.json")
    out_check, out_orbit = tmp / "check", tmp / "orbit"
    start = time.perf_counter()
    code_check = main(["check", "--config", cfg, "--out", str(out_check)])
    code_orbit = main(["find-orbit", "--config", cfg, "--out", str(out_orbit)])
    elapsed = time.perf_counter() - start
    return {
        "code_check": code_check,
        "code_orbit": code_orbit,
        "elapsed": elapsed,
        "report": json.loads((out_check / "report.json").read_text()),
        "orbit": json.loads((out_orbit / "orbit.json").read_text()),
        "out_orbit": out_orbit,
    }


@pytest.fixture(scope="session")
def pendulum_ctx(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("pendulum_acceptance")
    cfg = _write(tmp, PENDULUM_CONFIG, "config.json")
    out_check, out_orbit = tmp / "check", tmp / "orbit"
    start = time.perf_counter()
    code_check = main(["check", "--config", cfg, "--out", str(out_check)])
    code_orbit = main(["find-orbit", "--config", cfg, "--out", str(out_orbit)])
    elapsed = time.perf_counter() - start
    return {
        "code_check": code_check,
        "code_orbit": code_orbit,
        "elapsed": elapsed,
        "report": json.loads((out_check / "report.json").read_text()),
        "orbit": json.loads((out_orbit / "orbit.json").read_text()),
    }


def test_criterion_index_oracle_equivalence():
    """Brute-force inclusion-exclusion equals the closed form for every
    block-kind assignment with n <= 6, and the index follows the sign
    alternation identity; runtime < 5 s."""
    kinds = [("interval", 1), ("disk-like-2d", 1), ("closed", 2), ("closed", 0)]
    start = time.perf_counter()
    checked = 0
    ok = True
    for n in range(1, 7):
        for combo in product(kinds, repeat=n):
            spec = PeriodicSegmentSpec(kinds=[k for k, _ in combo],
                                       chis=[c for _, c in combo])
            oracle = exit_set_char_oracle(spec)
            closed = exit_set_char_closed_form(spec)
            index = fixed_point_index(spec)
            identity = euler_char_product(spec) * (-1) ** spec.two_point_count
            ok = ok and oracle == closed and index == identity
            checked += 1
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 5.0 and checked >= 3 ** 6
    _verdict_line(f"index-oracle-equivalence ({checked} specs, "
                  f"{elapsed:.2f}s)", ok)


def test_criterion_worked_index_values():
    one = PeriodicSegmentSpec(kinds=["interval"], chis=[1])
    two = PeriodicSegmentSpec(kinds=["interval", "interval"], chis=[1, 1])
    disk = PeriodicSegmentSpec(kinds=["disk-like-2d"], chis=[1])
    ok = (fixed_point_index(one) == -1
          and fixed_point_index(two) == 1
          and fixed_point_index(disk) == 1)
    _verdict_line("worked-index-values", ok)


def test_criterion_linear_response_oracle():
    """Forced damped oscillator: orbit amplitude matches the closed-form
    frequency response to 1e-6 with residual < 1e-10, in under 5 s."""
    gamma, omega, f0, period = 0.5, 2.0, 1.0, 1.0
    start = time.perf_counter()
    sys_ = damped_oscillator(gamma=gamma, omega=omega, amplitude=f0,
                             period=period)
    res = find_periodic_orbit(sys_, np.zeros(2), tol=1e-10,
                              config=IntegratorConfig(rtol=1e-10, atol=1e-12),
                              compute_floquet=False)
    elapsed = time.perf_counter() - start
    big_omega = 2 * math.pi / period
    expected = f0 / math.sqrt((omega ** 2 - big_omega ** 2) ** 2
                              + gamma ** 2 * big_omega ** 2)
    x, p = res.fixed_point
    amplitude = math.hypot(x, p / big_omega)
    ok = (res.converged and res.residual < 1e-10
          and abs(amplitude - expected) < 1e-6 and elapsed < 5.0)
    _verdict_line(f"linear-response-oracle (|dA|={abs(amplitude - expected):.2e}, "
                  f"residual={res.residual:.2e}, {elapsed:.2f}s)", ok)


def test_criterion_morse_chain_reproduction(morse_ctx):
    """Example-3 parameters: check exits 0 with every condition report
    passing and the junction sign condition verified at all 6 junctions;
    find-orbit converges with residual < 1e-8 and positive interior
    margins; total runtime < 60 s."""
    report, orbit = morse_ctx["report"], morse_ctx["orbit"]
    checks = {c["name"]: c for c in report["checks"]}
    families = {"H1:block0", "H1:block1", "H1:block2", "H2:bounds",
                "energy-cap", "boundary-exit", "forcing-sign"}
    conditions_pass = all(checks[name]["pass"] for name in families)
    junctions = checks["forcing-sign"]["details"]
    junctions_ok = (len(junctions) == 6
                    and all(v["margin"] > 0 for v in junctions.values()))
    margins_ok = all(m["position"] > 0 and m["energy"] > 0
                     for m in orbit["interior_margins"])
    ok = (morse_ctx["code_check"] == 0
          and morse_ctx["code_orbit"] == 0
          and conditions_pass and junctions_ok
          and report["index"]["fixed_point_index"] == -1
          and orbit["converged"] and orbit["residual"] < 1e-8
          and margins_ok
          and morse_ctx["elapsed"] < 60.0)
    _verdict_line(f"morse-chain-reproduction (residual={orbit['residual']:.2e}, "
                  f"{morse_ctx['elapsed']:.1f}s)", ok)


def test_criterion_pendulum_chain_reproduction(pendulum_ctx):
    """Example-1 parameters: the boundary-exit check passes at all four
    faces with outward acceleration at least g/l minus the sampled
    interaction, and the orbit keeps every angle strictly inside
    (-pi/2, pi/2); total runtime < 60 s."""
    report, orbit = pendulum_ctx["report"], pendulum_ctx["orbit"]
    exit_rep = next(c for c in report["checks"] if c["name"] == "boundary-exit")
    faces = exit_rep["details"]
    g_over_l, kappa = 9.81, 0.1
    faces_ok = (len(faces) == 4
                and all(v["margin"] > 0 for v in faces.values())
                and all(v["inf_outward"] >= g_over_l - kappa - 1e-6
                        for v in faces.values()))
    angles_interior = all(m["position"] > 0 for m in orbit["interior_margins"])
    ok = (pendulum_ctx["code_check"] == 0
          and pendulum_ctx["code_orbit"] == 0
          and exit_rep["pass"] and faces_ok
          and orbit["converged"] and angles_interior
          and pendulum_ctx["elapsed"] < 60.0)
    _verdict_line(f"pendulum-chain-reproduction (worst outward "
                  f"{exit_rep['value']:.3f}, {pendulum_ctx['elapsed']:.1f}s)", ok)


def test_criterion_energy_cap_property(morse_ctx, pendulum_ctx):
    """On 1e3 sampled shell states of both built-ins the kinetic energy
    strictly decreases, and trajectories started inside the caps never
    exceed them: ten full 10-period runs on the oscillator chain, plus
    pendulum-chain runs followed until their forced exit from the
    enlarged box (no pendulum trajectory can stay near the unstable
    orbit for 10 periods)."""
    shell_sampler = SamplerConfig(density=1000, refine_iters=30)
    ok = True

    morse = build_morse()
    caps_m = morse_ctx["report"]["caps"]["caps"]
    rep = check_energy_cap(morse, caps_m, shell_sampler)
    ok = ok and rep.passed and rep.margin > 0

    pend = build_pendulum()
    caps_p = pendulum_ctx["report"]["caps"]["caps"]
    rep_p = check_energy_cap(pend, caps_p, shell_sampler)
    ok = ok and rep_p.passed and rep_p.margin > 0

    # ten 10-period runs near the trapped orbit of the oscillator chain
    rng = np.random.default_rng(42)
    x_star = np.array(morse_ctx["orbit"]["fixed_point"])
    cfg = IntegratorConfig(rtol=1e-8, atol=1e-10, samples=400)
    survived = 0
    for _ in range(10):
        x0 = x_star + rng.uniform(-0.01, 0.01, size=x_star.size)
        assert np.all(morse.energies(x0) <= caps_m)
        traj = integrate(morse, 0.0, x0, 10.0 * morse.period, cfg,
                         caps=caps_m, stop_at_block_exit=False,
                         stop_at_cap=False)
        ok = ok and traj.reached_end
        survived += int(traj.reached_end)
        ok = ok and np.all(traj.energies <= np.asarray(caps_m) * (1 + 1e-9))

    # pendulum runs: capped for as long as the trajectory exists
    for k in range(5):
        parts = []
        for i, b in enumerate(pend.blocks):
            q = b.bounds[:, 0] + (0.1 + 0.8 * rng.random(1)) * b.span
            energy = rng.uniform(0.0, caps_p[i])
            p = np.array([math.copysign(math.sqrt(energy), rng.normal())])
            parts.append((q, p))
        x0 = pend.pack(parts)
        try:
            traj = integrate(pend, 0.0, x0, 10.0 * pend.period, cfg,
                             caps=caps_p, stop_at_block_exit=False,
                             stop_at_cap=False)
        except Exception:
            continue
        ok = ok and np.all(traj.energies <= np.asarray(caps_p) * (1 + 1e-9))

    _verdict_line(f"energy-cap-property (shell margins {rep.margin:.2f}/"
                  f"{rep_p.margin:.1f}, {survived}/10 full runs)", ok)


def test_criterion_integrator_order():
    """Fixed-step RK4 error on the damped oscillator shrinks by 16 +- 20%
    per step halving across three halvings."""
    gamma, omega = 0.5, 2.0
    sys_ = damped_oscillator(gamma=gamma, omega=omega)
    omega_d = math.sqrt(omega ** 2 - gamma ** 2 / 4)

    def exact(t):
        decay = math.exp(-gamma * t / 2)
        c2 = gamma / (2 * omega_d)
        x = decay * (math.cos(omega_d * t) + c2 * math.sin(omega_d * t))
        xdot = decay * ((-gamma / 2 + c2 * omega_d) * math.cos(omega_d * t)
                        + (-gamma / 2 * c2 - omega_d) * math.sin(omega_d * t))
        return np.array([x, xdot])

    x0 = np.array([1.0, 0.0])
    truth = exact(1.0)
    errors = []
    for step in (0.02, 0.01, 0.005, 0.0025):
        cfg = IntegratorConfig(method="rk4-fixed", step=step)
        traj = integrate(sys_, 0.0, x0, 1.0, cfg)
        errors.append(np.max(np.abs(traj.final_state - truth)))
    ratios = [errors[k] / errors[k + 1] for k in range(3)]
    ok = all(12.8 <= r <= 19.2 for r in ratios)
    _verdict_line(f"integrator-order (ratios {[f'{r:.1f}' for r in ratios]})",
                  ok)


def test_criterion_negative_controls(tmp_path):
    """Zero friction fails H1; zero forcing amplitude fails the junction
    sign condition; a chi = 0 factor gives index 0 and applies = false.
    Each exits with code 1."""
    fast = {"density": 1500, "refine_iters": 30}

    no_friction = json.loads(json.dumps(PENDULUM_CONFIG))
    no_friction["system"]["params"]["gammas"] = 0.0
    no_friction["checks"] = fast
    cfg1 = _write(tmp_path, no_friction, "no_friction.json")
    out1 = tmp_path / "r1"
    code1 = main(["check", "--config", cfg1, "--out", str(out1)])
    rep1 = json.loads((out1 / "report.json").read_text())
    ok1 = code1 == 1 and "H1" in rep1["verdict"]["reasons"]

    no_forcing = json.loads(json.dumps(MORSE_CONFIG))
    no_forcing["system"]["params"]["epsilon"] = 0.0
    no_forcing["checks"] = fast
    cfg2 = _write(tmp_path, no_forcing, "no_forcing.json")
    out2 = tmp_path / "r2"
    code2 = main(["check", "--config", cfg2, "--out", str(out2)])
    rep2 = json.loads((out2 / "report.json").read_text())
    ok2 = code2 == 1 and "forcing-sign" in rep2["verdict"]["reasons"]

    chi_zero = {
        "system": {
            "name": "generic",
            "period": 1.0,
            "blocks": [{"bounds": [[0.0, 6.283185307179586]],
                        "kind": "closed", "chi": 0}],
            "fields": [{"force": None,
                        "friction": {"expr": "-1.0*p", "threshold": 1.0,
                                     "gamma_sup": -1.0}}],
        },
        "checks": fast,
    }
    cfg3 = _write(tmp_path, chi_zero, "chi_zero.json")
    out3 = tmp_path / "r3"
    code3 = main(["check", "--config", cfg3, "--out", str(out3)])
    rep3 = json.loads((out3 / "report.json").read_text())
    ok3 = (code3 == 1
           and rep3["index"]["fixed_point_index"] == 0
           and rep3["verdict"]["applies"] is False
           and "chi" in rep3["verdict"]["reasons"])

    _verdict_line("negative-controls (H1/forcing-sign/chi)", ok1 and ok2 and ok3)
