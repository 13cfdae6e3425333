"""Synthetic family (child + parent) parameterization.

Each dyad is a two-state Markov chain over 5-minute steps (calm/active),
a lognormal energy law per state, a linear perception law mapping lookback
energy to the parent's 1-5 rating, and response behavior. Defaults are
assumptions chosen for plausible wrist-accelerometry character, not
reproductions of any field data.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class FamilyProfile:
    participant_id: str
    utc_offset_minutes: int = 0
    # per-5-minute-step transition probabilities
    p_calm_to_active: float = 0.10
    p_active_to_calm: float = 0.15
    # lognormal energy law per state: median (g) and log-space sigma
    mu_calm: float = 0.05
    sigma_calm: float = 0.35
    mu_active: float = 0.35
    sigma_active: float = 0.35
    # rating = clamp(round(alpha + beta * lookback_energy + noise), 1, 5)
    alpha: float = 1.1
    beta: float = 8.5
    noise_sd: float = 0.3
    # probability of answering an intraday prompt before expiry
    responsiveness: float = 0.8
    # probability of answering end-of-day / end-of-week surveys
    daily_responsiveness: float = 0.9

    def __post_init__(self):
        for p in (self.p_calm_to_active, self.p_active_to_calm,
                  self.responsiveness, self.daily_responsiveness):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0,1]")
        if self.mu_active <= self.mu_calm:
            raise ValueError("mu_active must exceed mu_calm")
        if self.sigma_calm <= 0 or self.sigma_active <= 0:
            raise ValueError("sigmas must be positive")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.utc_offset_minutes % 5 != 0:
            raise ValueError("utc_offset_minutes must be a multiple of 5")

    def rating_for(self, lookback_energy: float, noise: float = 0.0) -> int:
        raw = self.alpha + self.beta * lookback_energy + noise
        return int(min(5, max(1, round(raw))))

    @property
    def stationary_calm(self) -> float:
        denom = self.p_calm_to_active + self.p_active_to_calm
        return self.p_active_to_calm / denom if denom > 0 else 1.0


def default_population(n: int = 12, seed: int = 0, noise_sd: float = 0.3) -> list[FamilyProfile]:
    """Heterogeneous population: perception slopes spread over more than 2x."""
    rng = np.random.default_rng([seed, 0xFA])
    out = []
    for i in range(n):
        beta = float(rng.uniform(5.0, 13.0))
        out.append(
            FamilyProfile(
                participant_id=f"fam{i + 1:02d}",
                p_calm_to_active=float(rng.uniform(0.03, 0.07)),
                p_active_to_calm=float(rng.uniform(0.05, 0.10)),
                mu_calm=float(rng.uniform(0.04, 0.07)),
                mu_active=float(rng.uniform(0.28, 0.42)),
                alpha=float(rng.uniform(0.7, 1.4)),
                beta=beta,
                noise_sd=noise_sd,
                responsiveness=float(rng.uniform(0.65, 0.9)),
                daily_responsiveness=float(rng.uniform(0.8, 0.95)),
            )
        )
    return out


def profiles_to_json(profiles: list[FamilyProfile]) -> str:
    return json.dumps([asdict(p) for p in profiles], indent=2, sort_keys=True)


def profiles_from_json(text: str) -> list[FamilyProfile]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("profiles file must be a JSON list")
    out = []
    for i, rec in enumerate(data):
        if not isinstance(rec, dict):
            raise ValueError(f"profile #{i}: expected an object")
        try:
            out.append(FamilyProfile(**rec))
        except (TypeError, ValueError) as e:
            raise ValueError(f"profile #{i}: {e}") from e
    return out
