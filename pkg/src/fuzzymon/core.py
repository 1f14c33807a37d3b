"""Domain types and time-scale arithmetic for continuous fuzzy energy monitoring.

Everything is expressed in units with hbar = 1: energies and inverse times
share one unit, chosen by the caller.  The three scales that organise all
regimes are

* the resolution ``delta_e_t = 1/sqrt(kappa*T)`` reached after monitoring
  for a duration ``T`` with fuzziness parameter ``kappa``,
* the level resolution time ``t_lr = 1/(kappa*dE**2)`` after which the
  resolution matches a level gap ``dE``,
* the flopping period ``t_r = pi/v`` of a resonantly driven two-level
  system with coupling strength ``v``.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SystemSpec",
    "MeasurementSpec",
    "TimeScales",
    "Readout",
    "AmplitudeState",
    "time_scales",
    "coupling_rotation",
    "classify_regime",
]

HERMITICITY_TOL = 1e-12


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemSpec:
    """Energy levels plus the constant coupling matrix driving transitions.

    ``levels`` are the eigenenergies E_n, strictly increasing.  ``coupling``
    holds the matrix elements <n|V|n'> taken between the co-rotating level
    states, so it is constant in time for resonant driving; it must be
    Hermitian.  A zero matrix means a free (undriven) system.
    """

    levels: np.ndarray
    coupling: np.ndarray

    def __init__(self, levels, coupling=None):
        levels = _frozen_array(levels, float)
        if levels.ndim != 1 or levels.size < 1:
            raise ValueError("levels must be a non-empty 1-d sequence")
        if levels.size > 1 and not np.all(np.diff(levels) > 0):
            raise ValueError("levels must be strictly increasing")
        n = levels.size
        if coupling is None:
            coupling = np.zeros((n, n))
        coupling = _frozen_array(coupling, complex)
        if coupling.shape != (n, n):
            raise ValueError(
                f"coupling shape {coupling.shape} does not match {n} levels"
            )
        if np.max(np.abs(coupling - coupling.conj().T)) > HERMITICITY_TOL:
            raise ValueError("coupling must be Hermitian to 1e-12")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "coupling", coupling)

    @property
    def n_levels(self) -> int:
        return self.levels.size

    def gap(self, index: int = 0) -> float:
        """Level spacing E_{index+1} - E_{index}."""
        if self.n_levels < 2:
            raise ValueError("no level gap")
        if not 0 <= index < self.n_levels - 1:
            raise ValueError(f"gap index {index} out of range")
        return float(self.levels[index + 1] - self.levels[index])

    def two_level_v(self) -> float | None:
        """Coupling strength v = |<1|V|2>| for two-level systems, else None."""
        if self.n_levels != 2:
            return None
        v = abs(self.coupling[0, 1])
        return float(v) if v > 0 else None

    def is_free(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.coupling)) <= tol)


@dataclass(frozen=True)
class MeasurementSpec:
    """Monitoring run description: fuzziness kappa, duration and grid step.

    ``kappa`` has units 1/(energy^2 * time) and is a single scalar: the
    fuzziness of the detector does not change during the run and never
    depends on the chosen duration.  ``kappa = 0`` switches the monitoring
    off entirely (unitary evolution; no readout can be sampled then).
    ``dt`` must divide ``duration``.
    """

    kappa: float
    duration: float
    dt: float
    n_steps: int = field(init=False)

    def __post_init__(self):
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError("kappa must be non-negative and finite")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError("duration must be positive and finite")
        if not (0 < self.dt <= self.duration):
            raise ValueError("dt must satisfy 0 < dt <= duration")
        n = round(self.duration / self.dt)
        if n < 1 or abs(n * self.dt - self.duration) > 16 * n * math.ulp(self.duration):
            raise ValueError("dt must divide duration")
        object.__setattr__(self, "n_steps", int(n))

    @property
    def delta_e_t(self) -> float:
        """Resolution 1/sqrt(kappa*duration) reached at the end of the run."""
        if self.kappa == 0:
            return math.inf
        return 1.0 / math.sqrt(self.kappa * self.duration)

    def grid(self) -> np.ndarray:
        """Left step edges t_k = k*dt, k = 0..n_steps-1."""
        return np.arange(self.n_steps) * self.dt


@dataclass(frozen=True)
class TimeScales:
    """Derived scales of a monitoring configuration.

    ``t_r`` and ``nu = pi*t_lr/t_r`` are present only when the system is a
    driven two-level one.
    """

    delta_e_t: float
    t_lr: float
    t_r: float | None = None
    nu: float | None = None


@dataclass(frozen=True)
class Readout:
    """Piecewise-constant energy record: E(t) = values[k] on [k*dt, (k+1)*dt)."""

    values: np.ndarray
    dt: float

    def __init__(self, values, dt: float):
        values = _frozen_array(values, float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("readout values must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError("readout values must be finite")
        if not dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dt", float(dt))

    @classmethod
    def constant(cls, level: float, meas: MeasurementSpec) -> "Readout":
        return cls(np.full(meas.n_steps, float(level)), meas.dt)

    @property
    def n_steps(self) -> int:
        return self.values.size

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def at(self, t: float) -> float:
        k = min(int(t / self.dt), self.n_steps - 1)
        return float(self.values[max(k, 0)])

    def mean_square_deflection(self, center) -> float:
        """Time-averaged squared distance <(E - center)^2> over the record.

        ``center`` may be a scalar or a per-step curve of the same length.
        """
        center = np.asarray(center, dtype=float)
        if center.ndim == 1 and center.size != self.n_steps:
            raise ValueError("center curve length does not match readout")
        return float(np.mean((self.values - center) ** 2))

    def matches(self, meas: MeasurementSpec) -> bool:
        return self.n_steps == meas.n_steps and math.isclose(
            self.dt, meas.dt, rel_tol=1e-12
        )


@dataclass(frozen=True)
class AmplitudeState:
    """Expansion coefficients C_n over the co-rotating level states.

    Deliberately unnormalised: after selective evolution from a unit-norm
    state, ``norm_squared`` is the probability density of the readout that
    produced it.
    """

    coeffs: np.ndarray
    time: float = 0.0

    def __init__(self, coeffs, time: float = 0.0):
        coeffs = _frozen_array(coeffs, complex)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coeffs must be a non-empty 1-d sequence")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "time", float(time))

    @property
    def dim(self) -> int:
        return self.coeffs.size

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def normalized(self) -> "AmplitudeState":
        n = math.sqrt(self.norm_squared)
        if n == 0:
            raise ValueError("cannot normalise a zero state")
        return AmplitudeState(self.coeffs / n, self.time)

    def populations(self) -> np.ndarray:
        """|C_n|^2 / sum |C_m|^2."""
        w = np.abs(self.coeffs) ** 2
        return w / w.sum()


def time_scales(
    system: SystemSpec, meas: MeasurementSpec, gap_index: int = 0
) -> TimeScales:
    """Compute all characteristic scales of a monitoring configuration.

    The reference gap defaults to E_2 - E_1; pass ``gap_index`` to use a
    different neighbouring pair when the spectrum is not equally spaced.
    Pure function: identical inputs give bit-identical outputs.
    """
    d_e = system.gap(gap_index)
    t_lr = math.inf if meas.kappa == 0 else 1.0 / (meas.kappa * d_e * d_e)
    v = system.two_level_v()
    if v is None:
        return TimeScales(delta_e_t=meas.delta_e_t, t_lr=t_lr)
    t_r = math.pi / v
    return TimeScales(
        delta_e_t=meas.delta_e_t, t_lr=t_lr, t_r=t_r, nu=math.pi * t_lr / t_r
    )


def coupling_rotation(system: SystemSpec, tau: float) -> np.ndarray:
    """Unitary exp(-i*V*tau) generated by the coupling matrix (hbar = 1)."""
    if system.is_free():
        return np.eye(system.n_levels, dtype=complex)
    w, q = np.linalg.eigh(system.coupling)
    return (q * np.exp(-1j * w * tau)) @ q.conj().T


def classify_regime(
    duration: float,
    scales: TimeScales,
    much_ratio: float = 10.0,
    same_order: float = 3.0,
) -> str:
    """Label the monitoring regime from the three characteristic times.

    "Much smaller" means a ratio of at least ``much_ratio``; "of the same
    order" means the largest/smallest ratio of the compared times is at
    most ``same_order``.  Systems without a drive behave as if the flopping
    period were infinite.  Returns one of FREE_UNRESOLVED, DECOHERENCE,
    ZENO, STRONG_RABI, CORRELATED_RABI, MIXING or UNCLASSIFIED.
    """
    t = duration
    t_lr = scales.t_lr
    t_r = scales.t_r if scales.t_r is not None else math.inf
    if math.isfinite(t_r):
        trio = (t_r, 2.0 * math.pi * t_lr, t)
        if t_r < 2.0 * math.pi * t_lr and max(trio) <= same_order * min(trio):
            return "CORRELATED_RABI"
        if t_lr * much_ratio <= t_r and t >= t_r:
            return "ZENO"
        if t_r * much_ratio <= t and t * much_ratio <= t_lr:
            return "STRONG_RABI"
        if t_r * much_ratio <= t_lr and t_lr * much_ratio <= t:
            return "MIXING"
    if t_lr * much_ratio <= t and t * much_ratio <= t_r:
        return "DECOHERENCE"
    if t * much_ratio <= t_lr and t * much_ratio <= t_r:
        return "FREE_UNRESOLVED"
    return "UNCLASSIFIED"
