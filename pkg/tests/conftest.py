import pytest

from helpers import FAST_SAMPLER, build_morse, build_pendulum
from periorbit import run_hypothesis_checks


@pytest.fixture(scope="session")
def morse_system():
    return build_morse()


@pytest.fixture(scope="session")
def morse_run(morse_system):
    return run_hypothesis_checks(morse_system, FAST_SAMPLER)


@pytest.fixture(scope="session")
def pendulum_system():
    return build_pendulum()


@pytest.fixture(scope="session")
def pendulum_run(pendulum_system):
    return run_hypothesis_checks(pendulum_system, FAST_SAMPLER)
