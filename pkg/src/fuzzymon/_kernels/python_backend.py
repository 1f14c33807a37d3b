"""Numpy reference implementation of the step kernels.

One monitoring step with record value E acts on the coefficient vector as

    C  <-  R(dt/2) . D(E) . R(dt/2) . C

where R is the coupling rotation exp(-i*V*dt/2) and D(E) the exact scalar
damping diag(exp(-kappa*(E_n - E)^2 * dt)).  Both factors are exact, so the
only stepping error is their non-commutation (second order in dt), and it
vanishes identically for a free system or for kappa = 0.

The sampler draws each record value from the exact one-step marginal of the
split chain: a Gaussian mixture with component weights |C_n|^2 (taken after
the first half rotation), means E_n and variance 1/(4*kappa*dt).  Random
numbers are consumed step-major - per step one uniform block then one
normal block, one value per path - which the compiled backend reproduces.

Rotations are accumulated column-by-column in index order so that both
backends perform the same floating-point operations in the same order.
"""

from __future__ import annotations

import math

import numpy as np

name = "python"


def _rotate_rows(psi: np.ndarray, u_half: np.ndarray) -> np.ndarray:
    """Apply u_half to each row of psi with sequential accumulation."""
    n = u_half.shape[0]
    cols = []
    for i in range(n):
        acc = u_half[i, 0] * psi[:, 0]
        for j in range(1, n):
            acc = acc + u_half[i, j] * psi[:, j]
        cols.append(acc)
    out = np.empty_like(psi)
    for i in range(n):
        out[:, i] = cols[i]
    return out


def _rotate_vec(psi: np.ndarray, u_half: np.ndarray) -> np.ndarray:
    n = u_half.shape[0]
    out = np.empty_like(psi)
    for i in range(n):
        acc = u_half[i, 0] * psi[0]
        for j in range(1, n):
            acc = acc + u_half[i, j] * psi[j]
        out[i] = acc
    return out


def evolve_steps(c0, levels, u_half, readout_values, kappa, dt, record_stride):
    """Propagate one trajectory under a fixed readout.

    Returns ``(record_steps, records, prob_density)`` where ``records`` holds
    the coefficient vector at steps ``0, stride, 2*stride, ...`` plus the
    final step, and ``prob_density`` the squared norm at every step edge
    (length n_steps + 1).
    """
    c0 = np.asarray(c0, dtype=complex)
    levels = np.asarray(levels, dtype=float)
    u_half = np.asarray(u_half, dtype=complex)
    readout_values = np.asarray(readout_values, dtype=float)
    n_steps = readout_values.size
    n = c0.size
    free = n == 1 or np.array_equal(u_half, np.eye(n, dtype=complex))

    record_steps = list(range(0, n_steps + 1, record_stride))
    if record_steps[-1] != n_steps:
        record_steps.append(n_steps)
    records = np.empty((len(record_steps), c0.size), dtype=complex)
    prob = np.empty(n_steps + 1, dtype=float)

    psi = c0.copy()
    prob[0] = float(np.sum(psi.real**2 + psi.imag**2))
    records[0] = psi
    rec_i = 1
    for k in range(n_steps):
        if not free:
            psi = _rotate_vec(psi, u_half)
        psi = psi * np.exp(-kappa * dt * (levels - readout_values[k]) ** 2)
        if not free:
            psi = _rotate_vec(psi, u_half)
        prob[k + 1] = float(np.sum(psi.real**2 + psi.imag**2))
        if rec_i < len(record_steps) and record_steps[rec_i] == k + 1:
            records[rec_i] = psi
            rec_i += 1
    return np.asarray(record_steps), records, prob


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
    """Draw ``n_paths`` readouts and evolve each path alongside.

    With ``mixture_from_pre=False`` the component weights come from the
    half-rotated state, which is the exact conditional of the split chain:
    every path then carries unit importance weight (log_weights stay 0).
    With ``mixture_from_pre=True`` the weights come from the state before
    the rotation; the resulting log importance weights against the exact
    law are accumulated and returned, and average to 1 in probability.

    Returns ``(finals, log_weights, msd, readouts)``; ``msd`` is the
    time-mean squared deflection from ``center`` (or None), ``readouts``
    the full (n_paths, n_steps) record matrix when requested.
    """
    c0 = np.asarray(c0, dtype=complex)
    levels = np.asarray(levels, dtype=float)
    u_half = np.asarray(u_half, dtype=complex)
    n = c0.size
    free = n == 1 or np.array_equal(u_half, np.eye(n, dtype=complex))
    sigma = math.sqrt(0.25 / (kappa * dt))

    psi = np.tile(c0, (n_paths, 1))
    logw = np.zeros(n_paths)
    msd_acc = np.zeros(n_paths) if center is not None else None
    readouts = np.empty((n_paths, n_steps)) if store_readouts else None

    for k in range(n_steps):
        u = rng.random(n_paths)
        g = rng.standard_normal(n_paths)

        w_pre = psi.real**2 + psi.imag**2
        if not free:
            psi = _rotate_rows(psi, u_half)
            w_post = psi.real**2 + psi.imag**2
        else:
            w_post = w_pre
        w_sel = w_pre if mixture_from_pre else w_post

        thr = u * np.sum(w_sel, axis=1)
        comp = np.sum(np.cumsum(w_sel, axis=1) < thr[:, None], axis=1)
        comp = np.minimum(comp, n - 1)
        e = levels[comp] + sigma * g

        damp = np.exp(-kappa * dt * (levels[None, :] - e[:, None]) ** 2)
        if mixture_from_pre:
            damp2 = damp * damp
            num = np.sum(w_post * damp2, axis=1) / np.sum(w_post, axis=1)
            den = np.sum(w_pre * damp2, axis=1) / np.sum(w_pre, axis=1)
            logw += np.log(num) - np.log(den)
        psi = psi * damp
        if not free:
            psi = _rotate_rows(psi, u_half)

        if msd_acc is not None:
            msd_acc += (e - center[k]) ** 2
        if store_readouts:
            readouts[:, k] = e

    msd = msd_acc / n_steps if msd_acc is not None else None
    return psi, logw, msd, readouts
