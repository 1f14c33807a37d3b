"""The probability measure over readout records, and sampling from it.

A record on an N-step grid carries the reference measure
prod_k sqrt(2*kappa*dt/pi) dE_k, under which the per-level Gaussian factors
integrate to one step by step (generalized unitarity).  The physical law is
that measure times the probability density P[E] = sum_n |C_n(T)|^2.

``sample_readout``/``sample_ensemble`` draw from the law sequentially: at
each step the record value follows the exact one-step marginal - a Gaussian
mixture with weights |C_n|^2, means E_n and variance 1/(4*kappa*dt) - and
the state is advanced by the same split step as the selective integrator.
Every draw is then an exact sample of the split chain's law and all
importance weights are equal, so ensembles never degenerate for long runs.

Samples are generated in fixed-size chunks with independent spawned RNG
streams, so results depend only on (seed, member index) and are bit-stable
regardless of worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from fuzzymon._backend import backend_name, get_backend
from fuzzymon.core import (
    AmplitudeState,
    MeasurementSpec,
    Readout,
    SystemSpec,
    coupling_rotation,
)
from fuzzymon.selective import NORMALIZATION_TOL

__all__ = [
    "ReadoutBand",
    "SampledEnsemble",
    "step_measure_weight",
    "sample_readout",
    "sample_ensemble",
    "band_probability",
    "band_probability_profile",
    "unitarity_check",
    "driven_unitarity_estimate",
    "correlation_score",
    "smooth_values",
]

CHUNK = 2048


@dataclass(frozen=True)
class ReadoutBand:
    """Records within mean-square distance ``half_width * delta_e_t`` of a curve.

    Closeness is the time-mean squared deflection, not a pointwise bound:
    a record belongs to the band iff <(E - center)^2>_T <= (W*delta_e_t)^2
    with W = ``half_width``.
    """

    center: Readout
    half_width: float

    def contains(self, readout: Readout, delta_e_t: float) -> bool:
        if readout.n_steps != self.center.n_steps:
            raise ValueError("readout grid does not match band center")
        msd = readout.mean_square_deflection(self.center.values)
        return msd <= (self.half_width * delta_e_t) ** 2


@dataclass(frozen=True)
class SampledEnsemble:
    """Readout draws with their final states and (equal) weights.

    The exact mixture sampler gives every member weight 1/N; the final
    states are unnormalised, their squared norms being the per-readout
    probability densities.  ``readouts`` is populated only on request and
    ``mean_square_deflection`` only when a center curve was supplied.
    """

    final_coeffs: np.ndarray
    weights: np.ndarray
    final_time: float
    dt: float
    readouts: tuple[Readout, ...] = field(default=())
    mean_square_deflection: np.ndarray | None = None

    @property
    def n_members(self) -> int:
        return self.final_coeffs.shape[0]

    def final_state(self, i: int) -> AmplitudeState:
        return AmplitudeState(self.final_coeffs[i], self.final_time)

    def probability_densities(self) -> np.ndarray:
        return np.sum(np.abs(self.final_coeffs) ** 2, axis=1)


def step_measure_weight(e, level: float, kappa: float, dt: float):
    """One-step measure density sqrt(2*kappa*dt/pi) * exp(-2*kappa*dt*(e-level)^2).

    Integrates to exactly one over e, which is the per-step content of the
    generalized unitarity condition.  Vectorised over ``e``.
    """
    if not (kappa > 0 and dt > 0):
        raise ValueError("kappa and dt must be positive")
    e = np.asarray(e, dtype=float)
    w = math.sqrt(2.0 * kappa * dt / math.pi) * np.exp(
        -2.0 * kappa * dt * (e - level) ** 2
    )
    return float(w) if w.ndim == 0 else w


def _chunk_sizes(n: int) -> list[int]:
    sizes = [CHUNK] * (n // CHUNK)
    if n % CHUNK:
        sizes.append(n % CHUNK)
    return sizes


def _default_workers() -> int:
    if backend_name() != "compiled":
        return 1
    import os

    return min(4, os.cpu_count() or 1)


def _run_chunks(
    initial: AmplitudeState,
    system: SystemSpec,
    meas: MeasurementSpec,
    n_samples: int,
    rng_seed: int,
    mixture_from_pre: bool,
    center,
    store_readouts: bool,
    workers: int | None,
    per_chunk=None,
):
    """Run the sampler kernel chunk by chunk with spawned RNG streams.

    Returns concatenated (finals, log_weights, msd, readouts); when
    ``per_chunk`` is given it is applied to each chunk's readout matrix and
    the per-chunk results are concatenated instead of the raw readouts.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if meas.kappa == 0:
        raise ValueError("sampling requires kappa > 0")
    if abs(initial.norm_squared - 1.0) > NORMALIZATION_TOL:
        raise ValueError("initial state must be normalised to 1e-12")
    if initial.dim != system.n_levels:
        raise ValueError("state dimension does not match system")

    backend = get_backend()
    u_half = coupling_rotation(system, meas.dt / 2.0)
    sizes = _chunk_sizes(n_samples)
    streams = np.random.SeedSequence(rng_seed).spawn(len(sizes))

    def run(idx: int):
        rng = np.random.default_rng(streams[idx])
        finals, logw, msd, reads = backend.sample_paths(
            initial.coeffs,
            system.levels,
            u_half,
            meas.kappa,
            meas.dt,
            meas.n_steps,
            sizes[idx],
            rng,
            mixture_from_pre=mixture_from_pre,
            center=center,
            store_readouts=store_readouts or per_chunk is not None,
        )
        if per_chunk is not None:
            extra = per_chunk(reads)
            if not store_readouts:
                reads = None
            return finals, logw, msd, reads, extra
        return finals, logw, msd, reads, None

    n_workers = workers if workers and workers > 0 else _default_workers()
    if n_workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, range(len(sizes))))
    else:
        results = [run(i) for i in range(len(sizes))]

    finals = np.concatenate([r[0] for r in results])
    logw = np.concatenate([r[1] for r in results])
    msd = (
        np.concatenate([r[2] for r in results]) if center is not None else None
    )
    reads = (
        np.concatenate([r[3] for r in results]) if store_readouts else None
    )
    extras = (
        np.concatenate([r[4] for r in results])
        if per_chunk is not None
        else None
    )
    return finals, logw, msd, reads, extras


def sample_readout(
    initial: AmplitudeState,
    system: SystemSpec,
    meas: MeasurementSpec,
    rng_seed: int,
) -> tuple[Readout, AmplitudeState]:
    """Draw one readout record and the matching unnormalised final state."""
    finals, _, _, reads, _ = _run_chunks(
        initial, system, meas, 1, rng_seed, False, None, True, 1
    )
    return (
        Readout(reads[0], meas.dt),
        AmplitudeState(finals[0], initial.time + meas.duration),
    )


def sample_ensemble(
    initial: AmplitudeState,
    system: SystemSpec,
    meas: MeasurementSpec,
    n_samples: int,
    rng_seed: int,
    center: Readout | None = None,
    store_readouts: bool = False,
    workers: int | None = None,
) -> SampledEnsemble:
    """Draw ``n_samples`` independent readouts with their final states.

    When ``center`` is given, the time-mean squared deflection of each
    sampled record from that curve is accumulated on the fly, which avoids
    keeping full records in memory for large ensembles.
    """
    center_values = None
    if center is not None:
        if not center.matches(meas):
            raise ValueError("center grid does not match measurement grid")
        center_values = center.values
    finals, _, msd, reads, _ = _run_chunks(
        initial,
        system,
        meas,
        n_samples,
        rng_seed,
        False,
        center_values,
        store_readouts,
        workers,
    )
    readouts = (
        tuple(Readout(reads[i], meas.dt) for i in range(n_samples))
        if store_readouts
        else ()
    )
    return SampledEnsemble(
        final_coeffs=finals,
        weights=np.full(n_samples, 1.0 / n_samples),
        final_time=initial.time + meas.duration,
        dt=meas.dt,
        readouts=readouts,
        mean_square_deflection=msd,
    )


def band_probability(
    initial: AmplitudeState,
    band: ReadoutBand,
    system: SystemSpec,
    meas: MeasurementSpec,
    n_samples: int,
    rng_seed: int,
    workers: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of Prob(record in band) with its standard error."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    ens = sample_ensemble(
        initial, system, meas, n_samples, rng_seed, center=band.center, workers=workers
    )
    threshold = (band.half_width * meas.delta_e_t) ** 2
    inside = ens.mean_square_deflection <= threshold
    p = float(np.mean(inside))
    se = math.sqrt(p * (1.0 - p) / n_samples)
    return p, se


def band_probability_profile(
    initial: AmplitudeState,
    center: Readout,
    widths,
    system: SystemSpec,
    meas: MeasurementSpec,
    n_samples: int,
    rng_seed: int,
    smooth_window: float | None = None,
    workers: int | None = None,
):
    """Band probabilities for several widths W from one shared sample set.

    Nesting makes the estimates monotone in W by construction.  When
    ``smooth_window`` (a time) is given, sampled records and the center are
    boxcar-averaged over that window before taking the mean-square
    deflection; this restricts the band metric to the slowly varying part
    of the record, which otherwise is dominated by the white per-step
    sampling noise of variance 1/(4*kappa*dt).

    Returns a list of (W, probability, standard_error).
    """
    if not center.matches(meas):
        raise ValueError("center grid does not match measurement grid")
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    window_steps = 1
    if smooth_window is not None:
        window_steps = max(1, round(smooth_window / meas.dt))
    center_smoothed = smooth_values(center.values, window_steps)

    def chunk_msd(reads: np.ndarray) -> np.ndarray:
        smoothed = smooth_values(reads, window_steps)
        return np.mean((smoothed - center_smoothed) ** 2, axis=-1)

    _, _, _, _, msd = _run_chunks(
        initial,
        system,
        meas,
        n_samples,
        rng_seed,
        False,
        None,
        False,
        workers,
        per_chunk=chunk_msd,
    )
    out = []
    for w in widths:
        inside = msd <= (w * meas.delta_e_t) ** 2
        p = float(np.mean(inside))
        se = math.sqrt(p * (1.0 - p) / n_samples)
        out.append((float(w), p, se))
    return out


def driven_unitarity_estimate(
    system: SystemSpec,
    meas: MeasurementSpec,
    n_samples: int,
    rng_seed: int,
    initial: AmplitudeState | None = None,
    workers: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of the total readout probability, with its SE.

    Records are proposed from the mixture built on the pre-step state; each
    path then carries an exact importance weight against the split chain's
    law, and the weight average estimates integral(measure * P[E]) = 1.
    """
    if initial is None:
        coeffs = np.zeros(system.n_levels, dtype=complex)
        coeffs[0] = 1.0
        initial = AmplitudeState(coeffs)
    _, logw, _, _, _ = _run_chunks(
        initial, system, meas, n_samples, rng_seed, True, None, False, workers
    )
    w = np.exp(logw)
    return float(np.mean(w)), float(np.std(w, ddof=1) / math.sqrt(n_samples))


def unitarity_check(
    system: SystemSpec,
    meas: MeasurementSpec,
    n_samples: int,
    rng_seed: int,
    workers: int | None = None,
) -> float:
    """Deviation of the total readout probability from one.

    For a free system the per-step measure factorises and the product of
    the analytic step normalisations is formed directly; the return value
    is then pure floating-point error.  With coupling present the deviation
    |estimate - 1| of the Monte Carlo weight average is returned, maximised
    over the basis initial states.
    """
    if system.is_free():
        worst = 0.0
        for _ in system.levels:
            prod = 1.0
            step = math.sqrt(2.0 * meas.kappa * meas.dt / math.pi) * math.sqrt(
                math.pi / (2.0 * meas.kappa * meas.dt)
            )
            for _k in range(meas.n_steps):
                prod *= step
            worst = max(worst, abs(prod - 1.0))
        return worst
    worst = 0.0
    for n in range(system.n_levels):
        coeffs = np.zeros(system.n_levels, dtype=complex)
        coeffs[n] = 1.0
        est, _ = driven_unitarity_estimate(
            system, meas, n_samples, rng_seed + n, AmplitudeState(coeffs), workers
        )
        worst = max(worst, abs(est - 1.0))
    return worst


def smooth_values(values: np.ndarray, window_steps: int) -> np.ndarray:
    """Centered boxcar average along the last axis, window shrinking at edges."""
    values = np.asarray(values, dtype=float)
    if window_steps <= 1:
        return values
    n = values.shape[-1]
    half_l = (window_steps - 1) // 2
    half_r = window_steps // 2
    padded = np.concatenate(
        [np.zeros(values.shape[:-1] + (1,)), np.cumsum(values, axis=-1)], axis=-1
    )
    lo = np.clip(np.arange(n) - half_l, 0, n)
    hi = np.clip(np.arange(n) + half_r + 1, 0, n)
    sums = padded[..., hi] - padded[..., lo]
    return sums / (hi - lo)


def correlation_score(
    readout: Readout,
    state_curve,
    system: SystemSpec,
    smooth_window: float | None = None,
) -> float:
    """Pearson correlation between a record and the level-1 population swing.

    The record's deviation from the mid line is boxcar-smoothed (window
    t_r/8 by default, so well below the flopping period) and correlated
    against (|C_1(t)|^2 - 1/2)*(E_1 - E_2); the sign convention makes the
    score +1 when the record hugs whichever level is more populated.
    """
    if system.n_levels != 2:
        raise ValueError("correlation score requires a two-level system")
    state_curve = np.asarray(state_curve, dtype=float)
    if state_curve.size != readout.n_steps:
        raise ValueError("state curve grid does not match readout")
    if smooth_window is None:
        v = system.two_level_v()
        if v is None:
            raise ValueError("smooth_window required for an undriven system")
        smooth_window = (math.pi / v) / 8.0
    window_steps = max(1, round(smooth_window / readout.dt))
    e_bar = 0.5 * float(system.levels[0] + system.levels[1])
    deviation = smooth_values(readout.values - e_bar, window_steps)
    target = (state_curve - 0.5) * float(system.levels[0] - system.levels[1])
    sd, st = np.std(deviation), np.std(target)
    if sd == 0.0 or st == 0.0:
        return 0.0
    score = np.corrcoef(deviation, target)[0, 1]
    return float(score)
