import functools
from importlib import resources

import numpy as np
import pytest

from codesign.serialization import load_motor_library, load_robot, load_task
from codesign.transcription import build_nlp

DATA = resources.files("codesign") / "data"

# (robot file, task file, needs the motor library)
PROBLEMS = {
    "quadcopter": ("quadcopter.json", "quadcopter_circle.json", False),
    "hopper": ("hopper.json", "hopper_forward.json", False),
    "reach": ("planar_biped.json", "reach.json", False),
    "hexapod": ("hexapod.json", "hexapod_button.json", True),
    "biped": ("biped.json", "biped_walk.json", False),
    "biped_step": ("biped.json", "biped_step.json", False),
    "quadruped": ("quadruped.json", "quadruped_walk.json", False),
}


def data_path(name):
    return str(DATA / name)


@functools.lru_cache(maxsize=None)
def library():
    return load_motor_library(data_path("dynamixel.json"))


@functools.lru_cache(maxsize=None)
def robot(name):
    return load_robot(data_path(name))


@functools.lru_cache(maxsize=None)
def task(name):
    return load_task(data_path(name))


@functools.lru_cache(maxsize=None)
def problem(key):
    """Built NLP for a bundled robot/task pair (cached across tests)."""
    r, t, lib = PROBLEMS[key]
    return build_nlp(robot(r), task(t), library=library() if lib else None)


_GUESS = {}


def random_point(prob, rng, spread=0.3):
    """Decision vector near the initial guess, inside every finite bound."""
    if id(prob) not in _GUESS:
        _GUESS[id(prob)] = (prob, prob.guess(0))
    x = _GUESS[id(prob)][1]
    x = x + rng.uniform(-spread, spread, size=x.shape) * np.maximum(np.abs(x), 0.1)
    lo = np.where(np.isfinite(prob.x_lower), prob.x_lower, -np.inf)
    hi = np.where(np.isfinite(prob.x_upper), prob.x_upper, np.inf)
    return np.clip(x, lo, hi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
