"""Ground-truth activity trace generation.

A two-state Markov chain over 5-minute steps; each step's window energy is
drawn from the active state's lognormal law. The chain scan runs in the
sensing kernels (numba or numpy backend); all randomness is pre-drawn from a
seeded generator, so traces are deterministic under (profile, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sensing import EnergyWindow
from ..sensing.kernels import markov_scan
from ..timeutil import day_minute_to_utc_ms

# Watch worn 07:00-20:00 local; 156 windows per day.
TRACE_START_MIN = 7 * 60
TRACE_END_MIN = 20 * 60
STEP_MIN = 5


@dataclass(frozen=True)
class GroundTruthState:
    participant_id: str
    window_start_ms: int
    state: str  # "calm" | "active"


def gen_trace(profile, start_day: int, n_days: int, seed: int):
    """Generate (windows, ground_truth) for local days [start_day, start_day+n_days).

    The chain state persists across days (overnight transitions are not
    modeled). Returns both lists ordered by window_start.
    """
    steps_per_day = (TRACE_END_MIN - TRACE_START_MIN) // STEP_MIN
    n = steps_per_day * n_days
    rng = np.random.default_rng([seed, 0x7A])
    u_state = rng.random(n)
    z_energy = rng.standard_normal(n)
    start_state = 0 if rng.random() < profile.stationary_calm else 1
    mu = np.array([np.log(profile.mu_calm), np.log(profile.mu_active)])
    sigma = np.array([profile.sigma_calm, profile.sigma_active])
    states, energies = markov_scan(
        start_state,
        profile.p_calm_to_active,
        profile.p_active_to_calm,
        u_state,
        z_energy,
        mu,
        sigma,
    )

    windows: list[EnergyWindow] = []
    truth: list[GroundTruthState] = []
    i = 0
    for d in range(n_days):
        day = start_day + d
        for m in range(TRACE_START_MIN, TRACE_END_MIN, STEP_MIN):
            start_ms = day_minute_to_utc_ms(day, m, profile.utc_offset_minutes)
            windows.append(
                EnergyWindow(profile.participant_id, start_ms, float(energies[i]), 300)
            )
            truth.append(
                GroundTruthState(
                    profile.participant_id,
                    start_ms,
                    "calm" if states[i] == 0 else "active",
                )
            )
            i += 1
    return windows, truth
