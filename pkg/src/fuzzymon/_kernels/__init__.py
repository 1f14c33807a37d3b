"""Step kernels for trajectory evolution and readout sampling.

Two interchangeable implementations live here: a Cython extension
(``_speedups``) compiled at install time, and a numpy fallback
(``python_backend``).  ``fuzzymon._backend.get_backend()`` picks one at
import time; both expose ``evolve_steps`` and ``sample_paths`` with
identical semantics and identical random-stream consumption.
"""
