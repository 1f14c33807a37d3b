"""Non-selective evolution: averaging over all readout records.

Integrating the selective dynamics over records with the reference measure
turns the per-step damping into pure dephasing: in the level basis each
element picks up exp(-(kappa/2)*(E_n - E_m)^2 * dt) per step, while the
coupling still rotates unitarily.  The continuum limit is the master
equation

    drho/dt = -i [V, rho] - (kappa/2) [H0, [H0, rho]]

written in the co-rotating level basis (the H0 commutator is absorbed by
the basis).  The integrator splits the step exactly like the selective
one - half rotation, exact dephasing, half rotation - so an ensemble
average of sampled trajectories differs from it by Monte Carlo noise only.

For a resonantly driven two-level system the population difference obeys a
damped oscillation with decay rate 1/(4*t_lr); it oscillates whenever
2*v > 1/(4*t_lr), i.e. 8*pi*t_lr > t_r, at angular frequency
sqrt((2*v)^2 - (4*t_lr)^-2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from fuzzymon.core import (
    AmplitudeState,
    MeasurementSpec,
    SystemSpec,
    coupling_rotation,
)
from fuzzymon.sampling import SampledEnsemble

__all__ = [
    "DensityMatrix",
    "master_evolve",
    "master_evolve_history",
    "FitResult",
    "fit_damped_oscillation",
    "ensemble_average",
    "ensemble_moments",
]

HERMITICITY_TOL = 1e-12
POSITIVITY_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace state in the level basis."""

    elements: np.ndarray
    time: float = 0.0

    def __init__(self, elements, time: float = 0.0):
        elements = np.array(elements, dtype=complex)
        if elements.ndim != 2 or elements.shape[0] != elements.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(elements - elements.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix must be Hermitian to 1e-12")
        if abs(np.trace(elements).real - 1.0) > 1e-8:
            raise ValueError("density matrix trace must be 1")
        if np.min(np.linalg.eigvalsh(elements)) < -POSITIVITY_TOL:
            raise ValueError("density matrix must be positive semidefinite")
        elements.setflags(write=False)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "time", float(time))

    @classmethod
    def from_amplitude(cls, state: AmplitudeState) -> "DensityMatrix":
        psi = state.coeffs / math.sqrt(state.norm_squared)
        return cls(np.outer(psi, psi.conj()), state.time)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    def purity(self) -> float:
        return float(np.trace(self.elements @ self.elements).real)

    def population_difference(self) -> float:
        """rho_11 - rho_22 for two-level states."""
        if self.dim != 2:
            raise ValueError("population difference needs a two-level state")
        return float((self.elements[0, 0] - self.elements[1, 1]).real)


def _dephasing_factors(system: SystemSpec, meas: MeasurementSpec) -> np.ndarray:
    gaps = system.levels[:, None] - system.levels[None, :]
    return np.exp(-0.5 * meas.kappa * gaps**2 * meas.dt)


def master_evolve_history(
    rho0: DensityMatrix,
    system: SystemSpec,
    meas: MeasurementSpec,
    record_stride: int = 1,
):
    """Evolve under the readout-averaged dynamics, keeping snapshots.

    Returns ``(times, rhos)`` with ``rhos[k]`` the matrix at
    ``times[k]``; snapshots are taken every ``record_stride`` steps plus
    the final one.
    """
    if rho0.dim != system.n_levels:
        raise ValueError("density matrix dimension does not match system")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    u_half = coupling_rotation(system, meas.dt / 2.0)
    u_half_h = u_half.conj().T
    factors = _dephasing_factors(system, meas)
    free = system.is_free()

    record_steps = list(range(0, meas.n_steps + 1, record_stride))
    if record_steps[-1] != meas.n_steps:
        record_steps.append(meas.n_steps)
    rhos = np.empty((len(record_steps), rho0.dim, rho0.dim), dtype=complex)
    rho = rho0.elements.copy()
    rhos[0] = rho
    rec_i = 1
    for k in range(meas.n_steps):
        if not free:
            rho = u_half @ rho @ u_half_h
        rho = rho * factors
        if not free:
            rho = u_half @ rho @ u_half_h
        if rec_i < len(record_steps) and record_steps[rec_i] == k + 1:
            rhos[rec_i] = rho
            rec_i += 1
    times = rho0.time + np.asarray(record_steps) * meas.dt
    return times, rhos


def master_evolve(
    rho0: DensityMatrix, system: SystemSpec, meas: MeasurementSpec
) -> DensityMatrix:
    """Final state of the readout-averaged evolution (trace preserving)."""
    times, rhos = master_evolve_history(rho0, system, meas, meas.n_steps)
    return DensityMatrix(rhos[-1], times[-1])


@dataclass(frozen=True)
class FitResult:
    """Parameters of y(t) = exp(-rate*t) * (a*cos(omega*t) + b*sin(omega*t))."""

    rate: float
    omega: float
    a: float
    b: float
    residual_rms: float


def fit_damped_oscillation(series, dt: float) -> FitResult:
    """Least-squares fit of a decaying oscillation to a uniform time series.

    The series should span at least eight oscillation periods.  Initial
    guesses come from the spectrum (frequency) and the log envelope of the
    analytic signal (decay rate); the fit is rejected with a RuntimeError
    when the residual RMS exceeds 1e-3 of the series peak.
    """
    y = np.asarray(series, dtype=float)
    if y.size < 16:
        raise ValueError("series too short to fit")
    if not dt > 0:
        raise ValueError("dt must be positive")
    t = np.arange(y.size) * dt
    scale = float(np.max(np.abs(y)))
    if scale == 0.0:
        raise ValueError("series is identically zero")

    spectrum = np.abs(np.fft.rfft(y - np.mean(y)))
    freqs = np.fft.rfftfreq(y.size, dt)
    omega0 = 2.0 * math.pi * freqs[1 + int(np.argmax(spectrum[1:]))]
    from scipy.signal import hilbert

    envelope = np.abs(hilbert(y))
    sel = slice(y.size // 8, -y.size // 8 or None)
    good = envelope[sel] > 1e-12 * scale
    rate0 = 0.0
    if np.count_nonzero(good) > 8:
        coef = np.polyfit(t[sel][good], np.log(envelope[sel][good]), 1)
        rate0 = max(0.0, -float(coef[0]))
    a0 = float(y[0])
    b0 = float((y[1] - y[0]) / dt + rate0 * a0) / omega0 if omega0 > 0 else 0.0

    def model(p, tt):
        rate, omega, a, b = p
        return np.exp(-rate * tt) * (a * np.cos(omega * tt) + b * np.sin(omega * tt))

    def resid(p):
        return model(p, t) - y

    sol = least_squares(resid, x0=[rate0, omega0, a0, b0], method="lm")
    residual_rms = float(np.sqrt(np.mean(sol.fun**2)))
    if not sol.success or residual_rms > 1e-3 * scale:
        raise RuntimeError(
            f"damped-oscillation fit did not converge: residual rms {residual_rms:.3e}"
            f" vs peak {scale:.3e}"
        )
    rate, omega, a, b = (float(v) for v in sol.x)
    if omega < 0:
        omega, b = -omega, -b
    return FitResult(rate=rate, omega=omega, a=a, b=b, residual_rms=residual_rms)


def ensemble_average(ensemble: SampledEnsemble) -> DensityMatrix:
    """Density matrix reconstructed from sampled selective trajectories.

    With the exact mixture sampler the draws already follow the law
    measure * P[E], so the average of the normalised final projectors with
    the ensemble's equal weights is an unbiased estimate of the
    readout-averaged state.
    """
    if ensemble.n_members < 1:
        raise ValueError("ensemble is empty")
    rho, _, _ = ensemble_moments(ensemble)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, ensemble.final_time)


def ensemble_moments(ensemble: SampledEnsemble):
    """Mean projector and elementwise standard errors (real and imaginary).

    Returns ``(rho, se_real, se_imag)`` where the errors are the standard
    deviations of the member projector elements divided by sqrt(N), useful
    for consistency tests against the master-equation evolution.
    """
    coeffs = ensemble.final_coeffs
    norms = np.sqrt(np.sum(np.abs(coeffs) ** 2, axis=1))
    unit = coeffs / norms[:, None]
    proj = unit[:, :, None] * unit.conj()[:, None, :]
    w = ensemble.weights[:, None, None]
    rho = np.sum(w * proj, axis=0)
    n = ensemble.n_members
    if n < 2:
        zero = np.zeros(rho.shape)
        return rho, zero, zero
    se_real = np.std(proj.real, axis=0, ddof=1) / math.sqrt(n)
    se_imag = np.std(proj.imag, axis=0, ddof=1) / math.sqrt(n)
    return rho, se_real, se_imag
