"""Numeric kernels for the hot inner loops.

Two implementations of each kernel: a numba @njit version and a pure-numpy
fallback. Selection happens once at import time; set CALMKIT_DISABLE_NUMBA=1
to force the numpy path (useful for debugging and for the benchmark in
benchmarks/bench_kernels.py). Both paths consume the same pre-drawn random
arrays; results agree across backends up to floating-point accumulation
order and are fully deterministic within a backend.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("CALMKIT_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")

if not _DISABLE:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):  # type: ignore[misc]
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


def _energy_rms_np(ax: np.ndarray, ay: np.ndarray, az: np.ndarray) -> float:
    return float(np.sqrt(np.mean(ax * ax + ay * ay + az * az) / 3.0))


@njit(cache=True)
def _energy_rms_nb(ax, ay, az):  # pragma: no cover - exercised via dispatch
    n = ax.shape[0]
    acc = 0.0
    for i in range(n):
        acc += ax[i] * ax[i] + ay[i] * ay[i] + az[i] * az[i]
    return np.sqrt(acc / (3.0 * n))


def _energy_integrated_np(ax, ay, az):
    return float(np.mean(ax * ax + ay * ay + az * az) / 3.0)


@njit(cache=True)
def _energy_integrated_nb(ax, ay, az):  # pragma: no cover
    n = ax.shape[0]
    acc = 0.0
    for i in range(n):
        acc += ax[i] * ax[i] + ay[i] * ay[i] + az[i] * az[i]
    return acc / (3.0 * n)


def _markov_scan_np(start_state, p_ca, p_ac, u_state, z_energy, mu, sigma):
    n = u_state.shape[0]
    states = np.empty(n, dtype=np.int8)
    s = start_state
    for i in range(n):
        states[i] = s
        if s == 0:
            if u_state[i] < p_ca:
                s = 1
        else:
            if u_state[i] < p_ac:
                s = 0
    energies = np.exp(mu[states] + sigma[states] * z_energy)
    return states, energies


@njit(cache=True)
def _markov_scan_nb(start_state, p_ca, p_ac, u_state, z_energy, mu, sigma):  # pragma: no cover
    n = u_state.shape[0]
    states = np.empty(n, dtype=np.int8)
    energies = np.empty(n, dtype=np.float64)
    s = start_state
    for i in range(n):
        states[i] = s
        energies[i] = np.exp(mu[s] + sigma[s] * z_energy[i])
        if s == 0:
            if u_state[i] < p_ca:
                s = 1
        else:
            if u_state[i] < p_ac:
                s = 0
    return states, energies


if NUMBA_ENABLED:
    energy_rms = _energy_rms_nb
    energy_integrated = _energy_integrated_nb
    markov_scan = _markov_scan_nb
else:
    energy_rms = _energy_rms_np
    energy_integrated = _energy_integrated_np
    markov_scan = _markov_scan_np

# numpy references kept importable for the benchmark
energy_rms_numpy = _energy_rms_np
energy_integrated_numpy = _energy_integrated_np
markov_scan_numpy = _markov_scan_np
