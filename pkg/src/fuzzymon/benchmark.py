"""Benchmark of the compiled kernels against the numpy fallback.

Run as ``python -m fuzzymon.benchmark``.  Times the single-trajectory
integrator and the ensemble sampler on a driven two-level problem and
prints one table row per case with the speedup factor.
"""

from __future__ import annotations

import math
import time

import numpy as np

from fuzzymon._kernels import python_backend
from fuzzymon.core import (
    AmplitudeState,
    MeasurementSpec,
    Readout,
    SystemSpec,
    coupling_rotation,
)


def _load_compiled():
    try:
        from fuzzymon._kernels import _speedups
    except ImportError:
        return None
    return _speedups


def _time(fn, repeats: int = 3) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(report=print, quick: bool = False) -> list[tuple[str, float, float]]:
    compiled = _load_compiled()
    if compiled is None:
        report("compiled backend not available; nothing to compare")
        return []

    v = 1.0
    t_r = math.pi / v
    system = SystemSpec([0.0, 1.0], [[0.0, v], [v, 0.0]])
    kappa = 1.6
    c0 = AmplitudeState([1.0, 0.0])
    evolve_steps_n = 2000 if quick else 100000
    sample_paths_n = 256 if quick else 4096

    cases = []

    meas = MeasurementSpec(kappa=kappa, duration=t_r, dt=t_r / evolve_steps_n)
    u_half = coupling_rotation(system, meas.dt / 2)
    readout = Readout.constant(0.0, meas)

    def evolve_with(backend):
        return lambda: backend.evolve_steps(
            c0.coeffs, system.levels, u_half, readout.values,
            meas.kappa, meas.dt, meas.n_steps,
        )

    cases.append(
        (f"evolve 1x{evolve_steps_n}", evolve_with(python_backend), evolve_with(compiled))
    )

    meas_s = MeasurementSpec(kappa=kappa, duration=2 * t_r, dt=t_r / 250)

    def sample_with(backend):
        def go():
            rng = np.random.default_rng(12345)
            backend.sample_paths(
                c0.coeffs, system.levels, coupling_rotation(system, meas_s.dt / 2),
                meas_s.kappa, meas_s.dt, meas_s.n_steps, sample_paths_n, rng,
            )
        return go

    cases.append(
        (f"sample {sample_paths_n}x500", sample_with(python_backend), sample_with(compiled))
    )

    results = []
    report(f"{'case':<24}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>9}")
    for label, py_fn, c_fn in cases:
        t_py = _time(py_fn)
        t_c = _time(c_fn)
        results.append((label, t_py, t_c))
        report(f"{label:<24}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}")
    return results


if __name__ == "__main__":
    run()
