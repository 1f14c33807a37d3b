"""Continuous fuzzy monitoring of energy for driven few-level systems.

Selective (readout-conditioned) non-Hermitian evolution, exact sequential
sampling of readout records, band probabilities, and the readout-averaged
master equation, with closed-form oracles for every solvable limit.
"""

from fuzzymon._backend import backend_name
from fuzzymon.core import (
    AmplitudeState,
    MeasurementSpec,
    Readout,
    SystemSpec,
    TimeScales,
    time_scales,
)
from fuzzymon.nonselective import (
    DensityMatrix,
    FitResult,
    ensemble_average,
    fit_damped_oscillation,
    master_evolve,
    master_evolve_history,
)
from fuzzymon.oracles import (
    MostProbableReadout,
    ZenoSolution,
    free_solution,
    most_probable_readout,
    rabi_solution,
    s_transform_check,
    zeno_solution,
)
from fuzzymon.sampling import (
    ReadoutBand,
    SampledEnsemble,
    band_probability,
    band_probability_profile,
    correlation_score,
    sample_ensemble,
    sample_readout,
    step_measure_weight,
    unitarity_check,
)
from fuzzymon.selective import (
    Trajectory,
    evolve_selective,
    prob_decay_rate,
    probability_density,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeState",
    "DensityMatrix",
    "FitResult",
    "MeasurementSpec",
    "MostProbableReadout",
    "Readout",
    "ReadoutBand",
    "SampledEnsemble",
    "SystemSpec",
    "TimeScales",
    "Trajectory",
    "ZenoSolution",
    "backend_name",
    "band_probability",
    "band_probability_profile",
    "correlation_score",
    "ensemble_average",
    "evolve_selective",
    "fit_damped_oscillation",
    "free_solution",
    "master_evolve",
    "master_evolve_history",
    "most_probable_readout",
    "prob_decay_rate",
    "probability_density",
    "rabi_solution",
    "s_transform_check",
    "sample_ensemble",
    "sample_readout",
    "step_measure_weight",
    "time_scales",
    "unitarity_check",
    "zeno_solution",
]
