import math

import numpy as np
import pytest

from fuzzymon.core import AmplitudeState, MeasurementSpec, SystemSpec


def driven_two_level(v: float = 1.0, e1: float = 0.0, e2: float = 1.0) -> SystemSpec:
    return SystemSpec([e1, e2], [[0.0, v], [v, 0.0]])


def free_levels(levels) -> SystemSpec:
    return SystemSpec(levels)


def meas_for(kappa: float, duration: float, n_steps: int) -> MeasurementSpec:
    return MeasurementSpec(kappa=kappa, duration=duration, dt=duration / n_steps)


def state(*coeffs) -> AmplitudeState:
    return AmplitudeState(np.asarray(coeffs, dtype=complex))


def normalized_state(*coeffs) -> AmplitudeState:
    return state(*coeffs).normalized()


T_R = math.pi  # flopping period for v = 1


@pytest.fixture
def two_level():
    return driven_two_level()
