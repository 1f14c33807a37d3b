# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled step kernels.

Same contracts as ``python_backend``: one half rotation, exact per-step
damping, second half rotation; the sampler consumes one uniform block and
one normal block per step so that a given seed yields the same stream in
both backends.
"""

from libc.math cimport exp, log, sqrt

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid

import numpy as np

cimport numpy as cnp
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport (
    random_standard_normal_fill,
    random_standard_uniform_fill,
)

cnp.import_array()

name = "compiled"


cdef inline double _abs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


def evolve_steps(c0, levels, u_half, readout_values, kappa, dt, record_stride):
    """See ``python_backend.evolve_steps``."""
    cdef double complex[::1] psi = np.array(c0, dtype=np.complex128)
    cdef double[::1] lev = np.array(levels, dtype=np.float64)
    cdef double complex[:, ::1] uh = np.array(u_half, dtype=np.complex128)
    cdef double[::1] ev = np.array(readout_values, dtype=np.float64)
    cdef Py_ssize_t n = psi.shape[0]
    cdef Py_ssize_t n_steps = ev.shape[0]
    cdef bint free = n == 1 or np.array_equal(u_half, np.eye(n, dtype=complex))

    record_steps = list(range(0, n_steps + 1, record_stride))
    if record_steps[len(record_steps) - 1] != n_steps:
        record_steps.append(n_steps)
    cdef cnp.int64_t[::1] rec_at = np.asarray(record_steps, dtype=np.int64)
    records_arr = np.empty((len(record_steps), n), dtype=np.complex128)
    prob_arr = np.empty(n_steps + 1, dtype=np.float64)
    cdef double complex[:, ::1] records = records_arr
    cdef double[::1] prob = prob_arr
    cdef double complex[::1] tmp = np.empty(n, dtype=np.complex128)

    cdef Py_ssize_t i, j, k, rec_i
    cdef double kdt = kappa * dt
    cdef double e, d, s
    cdef double complex acc

    s = 0.0
    for i in range(n):
        s += _abs2(psi[i])
        records[0, i] = psi[i]
    prob[0] = s
    rec_i = 1

    with nogil:
        for k in range(n_steps):
            if not free:
                for i in range(n):
                    acc = uh[i, 0] * psi[0]
                    for j in range(1, n):
                        acc = acc + uh[i, j] * psi[j]
                    tmp[i] = acc
                for i in range(n):
                    psi[i] = tmp[i]
            e = ev[k]
            for i in range(n):
                d = lev[i] - e
                psi[i] = psi[i] * exp(-kdt * d * d)
            if not free:
                for i in range(n):
                    acc = uh[i, 0] * psi[0]
                    for j in range(1, n):
                        acc = acc + uh[i, j] * psi[j]
                    tmp[i] = acc
                for i in range(n):
                    psi[i] = tmp[i]
            s = 0.0
            for i in range(n):
                s += _abs2(psi[i])
            prob[k + 1] = s
            if rec_i < rec_at.shape[0] and rec_at[rec_i] == k + 1:
                for i in range(n):
                    records[rec_i, i] = psi[i]
                rec_i += 1

    return np.asarray(record_steps), records_arr, prob_arr


def sample_paths(
    c0,
    levels,
    u_half,
    kappa,
    dt,
    n_steps,
    n_paths,
    rng,
    mixture_from_pre=False,
    center=None,
    store_readouts=False,
):
    """See ``python_backend.sample_paths``."""
    cdef double complex[::1] c0v = np.array(c0, dtype=np.complex128)
    cdef double[::1] lev = np.array(levels, dtype=np.float64)
    cdef double complex[:, ::1] uh = np.array(u_half, dtype=np.complex128)
    cdef Py_ssize_t n = c0v.shape[0]
    cdef Py_ssize_t m_paths = n_paths
    cdef Py_ssize_t nk = n_steps
    cdef bint free = n == 1 or np.array_equal(u_half, np.eye(n, dtype=complex))
    cdef bint pre_mode = bool(mixture_from_pre)
    cdef bint want_msd = center is not None
    cdef bint want_read = bool(store_readouts)

    psi_arr = np.tile(np.asarray(c0, dtype=np.complex128), (n_paths, 1))
    logw_arr = np.zeros(n_paths, dtype=np.float64)
    msd_arr = np.zeros(n_paths, dtype=np.float64) if want_msd else None
    read_arr = np.empty((n_paths, n_steps), dtype=np.float64) if want_read else None

    cdef double complex[:, ::1] psi = psi_arr
    cdef double[::1] logw = logw_arr
    cdef double[::1] msd = msd_arr if want_msd else np.empty(0)
    cdef double[::1] cen = (
        np.array(center, dtype=np.float64) if want_msd else np.empty(0)
    )
    cdef double[:, ::1] reads = read_arr if want_read else np.empty((0, 0))

    cdef double[::1] u = np.empty(n_paths, dtype=np.float64)
    cdef double[::1] g = np.empty(n_paths, dtype=np.float64)
    cdef double complex[::1] tmp = np.empty(n, dtype=np.complex128)
    cdef double[::1] wpre = np.empty(n, dtype=np.float64)
    cdef double[::1] wpost = np.empty(n, dtype=np.float64)

    bit_generator = rng.bit_generator
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("rng does not expose a BitGenerator capsule")
    cdef bitgen_t *rs = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef Py_ssize_t i, j, k, m, comp
    cdef double kdt = kappa * dt
    cdef double sigma = sqrt(0.25 / (kappa * dt))
    cdef double thr, accw, e, d, dj, spre, spost, num, den
    cdef double complex accz

    with bit_generator.lock, nogil:
        for k in range(nk):
            random_standard_uniform_fill(rs, m_paths, &u[0])
            random_standard_normal_fill(rs, m_paths, &g[0])
            for m in range(m_paths):
                spre = 0.0
                for i in range(n):
                    wpre[i] = _abs2(psi[m, i])
                    spre += wpre[i]
                if not free:
                    for i in range(n):
                        accz = uh[i, 0] * psi[m, 0]
                        for j in range(1, n):
                            accz = accz + uh[i, j] * psi[m, j]
                        tmp[i] = accz
                    for i in range(n):
                        psi[m, i] = tmp[i]
                    spost = 0.0
                    for i in range(n):
                        wpost[i] = _abs2(psi[m, i])
                        spost += wpost[i]
                else:
                    for i in range(n):
                        wpost[i] = wpre[i]
                    spost = spre

                if pre_mode:
                    thr = u[m] * spre
                    accw = 0.0
                    comp = 0
                    for j in range(n):
                        accw += wpre[j]
                        if accw < thr:
                            comp += 1
                else:
                    thr = u[m] * spost
                    accw = 0.0
                    comp = 0
                    for j in range(n):
                        accw += wpost[j]
                        if accw < thr:
                            comp += 1
                if comp > n - 1:
                    comp = n - 1
                e = lev[comp] + sigma * g[m]

                num = 0.0
                den = 0.0
                for i in range(n):
                    d = lev[i] - e
                    dj = exp(-kdt * d * d)
                    if pre_mode:
                        num += wpost[i] * (dj * dj)
                        den += wpre[i] * (dj * dj)
                    psi[m, i] = psi[m, i] * dj
                if pre_mode:
                    logw[m] += log(num / spost) - log(den / spre)

                if not free:
                    for i in range(n):
                        accz = uh[i, 0] * psi[m, 0]
                        for j in range(1, n):
                            accz = accz + uh[i, j] * psi[m, j]
                        tmp[i] = accz
                    for i in range(n):
                        psi[m, i] = tmp[i]

                if want_msd:
                    d = e - cen[k]
                    msd[m] += d * d
                if want_read:
                    reads[m, k] = e

    if want_msd:
        msd_arr /= n_steps
    return psi_arr, logw_arr, msd_arr, read_arr
