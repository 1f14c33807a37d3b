"""Closed-form solutions used as fast paths and as test oracles.

Three exactly solvable situations cover the limiting regimes:

* kappa = 0: undamped flopping between the two levels at frequency v,
* V = 0: per-level exponential damping by the accumulated squared
  deflection of the record from each level,
* two-level system with the record pinned to the lower level: a linear
  two-mode decay with exponents
  lambda_{1,2} = -1/(2*t_lr) +/- sqrt(1/(4*t_lr^2) - pi^2/t_r^2),
  real (pure decay) exactly when t_lr < t_r/(2*pi).

Also here: the most probable readout curve - the population-weighted mean
of the level energies, which pointwise minimises the probability-density
decay rate - and a finite-difference consistency check of the damped
oscillator form obeyed by the exponent-compensated coefficients.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from fuzzymon.core import (
    AmplitudeState,
    MeasurementSpec,
    Readout,
    SystemSpec,
    coupling_rotation,
    time_scales,
)
from fuzzymon.selective import NORMALIZATION_TOL, Trajectory

__all__ = [
    "rabi_solution",
    "free_solution",
    "ZenoSolution",
    "zeno_solution",
    "MostProbableReadout",
    "most_probable_readout",
    "s_transform_check",
]


def rabi_solution(c0: AmplitudeState, v: float, t: float) -> AmplitudeState:
    """Undamped two-level flopping: the kappa = 0 solution.

    C_1(t) = C_1(0) cos(v t) - i C_2(0) sin(v t) and symmetrically for C_2;
    the norm is preserved.  ``v`` is the coupling strength |V_12| (half the
    population oscillation frequency); the full inversion time is pi/v.
    """
    if c0.dim != 2:
        raise ValueError("rabi_solution requires a two-level state")
    c, s = math.cos(v * t), math.sin(v * t)
    c1, c2 = c0.coeffs
    return AmplitudeState(
        [c1 * c - 1j * c2 * s, c2 * c - 1j * c1 * s], c0.time + t
    )


def free_solution(
    c0: AmplitudeState,
    readout: Readout,
    system: SystemSpec,
    meas: MeasurementSpec,
) -> AmplitudeState:
    """Exact V = 0 evolution: per-level damping, phases untouched.

    C_n(T) = C_n(0) * exp(-kappa * sum_k (E_n - E_k)^2 * dt).
    """
    if not system.is_free():
        raise ValueError("free solution requires V=0")
    if c0.dim != system.n_levels:
        raise ValueError("state dimension does not match system")
    if not readout.matches(meas):
        raise ValueError("readout grid does not match measurement grid")
    exponents = meas.kappa * meas.dt * np.sum(
        (system.levels[:, None] - readout.values[None, :]) ** 2, axis=1
    )
    return AmplitudeState(c0.coeffs * np.exp(-exponents), c0.time + meas.duration)


@dataclass(frozen=True)
class ZenoSolution:
    """Two-mode decay of a driven two-level system with the record on E_1.

    C_1(t) = a e^{lambda_1 t} + b e^{lambda_2 t} and
    C_2(t) = i (t_r/pi) (lambda_1 a e^{lambda_1 t} + lambda_2 b e^{lambda_2 t}),
    with lambda_1 the slow and lambda_2 the fast exponent.  Both are real
    and negative on the branch t_lr < t_r/(2*pi); nu = pi*t_lr/t_r is the
    small parameter of that regime.
    """

    lambda1: float
    lambda2: float
    a: complex
    b: complex
    nu: float
    t_r: float

    @classmethod
    def from_initial(
        cls, c0: AmplitudeState, t_lr: float, t_r: float
    ) -> "ZenoSolution":
        if c0.dim != 2:
            raise ValueError("zeno solution requires a two-level state")
        if not (t_lr > 0 and t_r > 0):
            raise ValueError("t_lr and t_r must be positive")
        radicand = 1.0 / (4.0 * t_lr * t_lr) - math.pi**2 / (t_r * t_r)
        if radicand <= 0:
            raise ValueError("outside Zeno branch")
        root = math.sqrt(radicand)
        lam1 = -1.0 / (2.0 * t_lr) + root
        lam2 = -1.0 / (2.0 * t_lr) - root
        c1, c2 = complex(c0.coeffs[0]), complex(c0.coeffs[1])
        a = (-1j * (math.pi / t_r) * c2 - lam2 * c1) / (lam1 - lam2)
        return cls(
            lambda1=lam1,
            lambda2=lam2,
            a=a,
            b=c1 - a,
            nu=math.pi * t_lr / t_r,
            t_r=t_r,
        )

    def state(self, t: float) -> AmplitudeState:
        e1 = cmath.exp(self.lambda1 * t)
        e2 = cmath.exp(self.lambda2 * t)
        c1 = self.a * e1 + self.b * e2
        c2 = 1j * (self.t_r / math.pi) * (
            self.lambda1 * self.a * e1 + self.lambda2 * self.b * e2
        )
        return AmplitudeState([c1, c2], t)

    def probability_density(self, t: float) -> float:
        return self.state(t).norm_squared


def zeno_solution(
    c0: AmplitudeState, t_lr: float, t_r: float, t: float
) -> AmplitudeState:
    """State at time ``t`` for a record pinned to E_1 (Zeno branch only)."""
    return ZenoSolution.from_initial(c0, t_lr, t_r).state(t)


@dataclass(frozen=True)
class MostProbableReadout:
    """Most probable record curve, its oscillation amplitude and mid line.

    ``amplitude`` is the closed-form value
    (dE/2) * sqrt((|C_1(0)|^2 - |C_2(0)|^2)^2 + 4*Im(C_1 C_2*)^2),
    exact for the flopping-approximation curve; curve values stay inside
    [E_1, E_2].
    """

    curve: Readout
    amplitude: float
    mean_line: float


def _weighted_level_mean(levels: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(levels * weights) / np.sum(weights))


def _feedback_curve(
    c0: AmplitudeState, system: SystemSpec, meas: MeasurementSpec
) -> Readout:
    """Record curve obtained by feeding the running population mean back in.

    Each step applies the usual split step, with the step's record value set
    to the population-weighted level mean of the half-rotated state.
    """
    u_half = coupling_rotation(system, meas.dt / 2.0)
    levels = system.levels
    kdt = meas.kappa * meas.dt
    psi = c0.coeffs.copy()
    values = np.empty(meas.n_steps)
    for k in range(meas.n_steps):
        psi = u_half @ psi
        e = _weighted_level_mean(levels, psi.real**2 + psi.imag**2)
        values[k] = e
        psi = psi * np.exp(-kdt * (levels - e) ** 2)
        psi = u_half @ psi
    return Readout(values, meas.dt)


def most_probable_readout(
    c0: AmplitudeState,
    system: SystemSpec,
    meas: MeasurementSpec,
    self_consistent: bool = False,
) -> MostProbableReadout:
    """Curve that decays the readout probability density as slowly as possible.

    By default the coefficients are approximated by the undamped flopping
    solution, giving E(t) = E_1 |R_1(t)|^2 + E_2 |R_2(t)|^2 on the grid;
    that approximation needs t_r < 2*pi*t_lr.  With ``self_consistent=True``
    the evolved state itself is fed back step by step instead.  Without a
    drive the populations are frozen, so the curve is the constant
    population-weighted level mean and the amplitude is zero.
    """
    if c0.dim != 2 or system.n_levels != 2:
        raise ValueError("most probable readout requires a two-level system")
    if abs(c0.norm_squared - 1.0) > NORMALIZATION_TOL:
        raise ValueError("initial state must be normalised to 1e-12")
    mean_line = float(0.5 * (system.levels[0] + system.levels[1]))
    scales = time_scales(system, meas)
    if scales.t_r is None:
        e_frozen = _weighted_level_mean(system.levels, np.abs(c0.coeffs) ** 2)
        return MostProbableReadout(
            curve=Readout(np.full(meas.n_steps, e_frozen), meas.dt),
            amplitude=0.0,
            mean_line=mean_line,
        )
    if scales.t_r >= 2.0 * math.pi * scales.t_lr:
        raise ValueError("zeroth approximation invalid")

    c1, c2 = complex(c0.coeffs[0]), complex(c0.coeffs[1])
    d_e = system.gap()
    amplitude = 0.5 * d_e * math.sqrt(
        (abs(c1) ** 2 - abs(c2) ** 2) ** 2 + 4.0 * ((c1 * c2.conjugate()).imag) ** 2
    )

    if self_consistent:
        curve = _feedback_curve(c0, system, meas)
    else:
        v = system.two_level_v()
        ts = meas.grid()
        cos, sin = np.cos(v * ts), np.sin(v * ts)
        r1 = c1 * cos - 1j * c2 * sin
        r2 = c2 * cos - 1j * c1 * sin
        w1, w2 = np.abs(r1) ** 2, np.abs(r2) ** 2
        values = (system.levels[0] * w1 + system.levels[1] * w2) / (w1 + w2)
        curve = Readout(values, meas.dt)
    return MostProbableReadout(curve=curve, amplitude=amplitude, mean_line=mean_line)


def s_transform_check(
    trajectory: Trajectory,
    readout: Readout,
    system: SystemSpec,
    meas: MeasurementSpec,
) -> float:
    """Residual of the compensated coefficients against their oscillator form.

    With eps_i(t) = kappa*(E_i - E(t))^2, sigma = eps_1 - eps_2 and
    S_n = exp(E(t)) C_n where E(t) accumulates (eps_1 + eps_2)/2, the exact
    dynamics implies

        d2S_1/dt2 + (v^2 + sigma'/2 - sigma^2/4) S_1 = 0

    and the same for S_2 with the sign of sigma' flipped.  The residual is
    evaluated by central finite differences on the dense trajectory, so a
    small value certifies the trajectory solves the dynamics to O(dt^2).
    The readout is treated as grid samples of a smooth curve.
    """
    if trajectory.record_stride != 1:
        raise ValueError("need dense trajectory")
    if system.n_levels != 2:
        raise ValueError("s transform check requires a two-level system")
    if not readout.matches(meas):
        raise ValueError("readout grid does not match measurement grid")
    v = system.two_level_v() or 0.0
    dt = meas.dt

    coeffs = trajectory.coeff_matrix()
    e_nodes = np.append(readout.values, readout.values[-1])
    eps1 = meas.kappa * (system.levels[0] - e_nodes) ** 2
    eps2 = meas.kappa * (system.levels[1] - e_nodes) ** 2
    sigma = eps1 - eps2
    mean_eps = 0.5 * (eps1 + eps2)
    accum = np.concatenate(
        ([0.0], np.cumsum(0.5 * (mean_eps[1:] + mean_eps[:-1]) * dt))
    )
    s = coeffs * np.exp(accum)[:, None]

    s_dd = (s[2:] - 2.0 * s[1:-1] + s[:-2]) / dt**2
    sigma_dot = (sigma[2:] - sigma[:-2]) / (2.0 * dt)
    mid_sigma = sigma[1:-1]
    coeff1 = v**2 + 0.5 * sigma_dot - 0.25 * mid_sigma**2
    coeff2 = v**2 - 0.5 * sigma_dot - 0.25 * mid_sigma**2
    res1 = s_dd[:, 0] + coeff1 * s[1:-1, 0]
    res2 = s_dd[:, 1] + coeff2 * s[1:-1, 1]
    return float(max(np.max(np.abs(res1)), np.max(np.abs(res2))))
