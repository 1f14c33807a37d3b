"""Readout-conditioned (selective) evolution of the amplitude vector.

Given a recorded energy curve E(t), the coefficients obey

    dC_n/dt = -kappa*(E_n - E(t))^2 * C_n - i * sum_m V_nm * C_m

which is non-Hermitian: the norm decays, and the squared norm of the final
state is the probability density of that readout.  Integration uses Strang
splitting per step - half coupling rotation, exact damping for the step's
record value, half rotation - so the global error is O(dt^2) and vanishes
exactly when either the coupling or kappa is zero.

States are propagated unnormalised on purpose; normalise explicitly via
``AmplitudeState.normalized`` if needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fuzzymon._backend import get_backend
from fuzzymon.core import (
    AmplitudeState,
    MeasurementSpec,
    Readout,
    SystemSpec,
    coupling_rotation,
)

__all__ = ["Trajectory", "evolve_selective", "probability_density", "prob_decay_rate"]

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class Trajectory:
    """States sampled every ``record_stride`` steps plus the norm history.

    ``prob_density`` covers every step edge (length n_steps + 1) regardless
    of the stride and is monotone non-increasing for kappa > 0.
    """

    times: np.ndarray
    states: tuple[AmplitudeState, ...]
    prob_density: np.ndarray
    record_stride: int
    dt: float

    @property
    def final(self) -> AmplitudeState:
        return self.states[-1]

    def coeff_matrix(self) -> np.ndarray:
        """Recorded coefficients as a (n_records, n_levels) array."""
        return np.array([s.coeffs for s in self.states])


def evolve_selective(
    initial: AmplitudeState,
    readout: Readout,
    system: SystemSpec,
    meas: MeasurementSpec,
    record_stride: int = 1,
) -> Trajectory:
    """Evolve ``initial`` under a fixed readout record.

    The initial state must be normalised; the readout grid must match the
    measurement grid.  The final state's squared norm equals the readout's
    probability density (up to the O(dt^2) splitting error).
    """
    if initial.dim != system.n_levels:
        raise ValueError("state dimension does not match system")
    if abs(initial.norm_squared - 1.0) > NORMALIZATION_TOL:
        raise ValueError("initial state must be normalised to 1e-12")
    if not readout.matches(meas):
        raise ValueError("readout grid does not match measurement grid")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")

    u_half = coupling_rotation(system, meas.dt / 2.0)
    backend = get_backend()
    steps, records, prob = backend.evolve_steps(
        initial.coeffs,
        system.levels,
        u_half,
        readout.values,
        meas.kappa,
        meas.dt,
        record_stride,
    )
    t0 = initial.time
    times = t0 + steps * meas.dt
    states = tuple(
        AmplitudeState(records[i], times[i]) for i in range(len(steps))
    )
    return Trajectory(
        times=times,
        states=states,
        prob_density=prob,
        record_stride=record_stride,
        dt=meas.dt,
    )


def probability_density(final: AmplitudeState) -> float:
    """Probability density of the readout that produced ``final``: sum |C_n|^2."""
    return final.norm_squared


def prob_decay_rate(
    state: AmplitudeState,
    e_value: float,
    system: SystemSpec,
    meas: MeasurementSpec,
) -> float:
    """Instantaneous decay rate of the readout probability density.

    dP/dt = -2*kappa * sum_n (E_n - E)^2 |C_n|^2, always <= 0, and zero only
    when the record value sits on every occupied level.
    """
    if state.dim != system.n_levels:
        raise ValueError("state dimension does not match system")
    w = np.abs(state.coeffs) ** 2
    return float(-2.0 * meas.kappa * np.sum((system.levels - e_value) ** 2 * w))
