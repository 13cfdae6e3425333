"""Motion-energy feature extraction.

The only place raw accelerometer data exists. Raw tri-axial samples are
reduced to 5-minute energy windows (RMS magnitude, units of g); windows are
aggregated into a one-hour lookback mean that feeds the calibration model.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..timeutil import LOOKBACK_MS, WINDOW_MS
from . import kernels

# Lookback features built from fewer windows than this are treated as
# "no prediction available" downstream.
MIN_COVERAGE_WINDOWS = 6


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class AccelSample:
    t_ms: int
    ax: float
    ay: float
    az: float


@dataclass(frozen=True)
class EnergyWindow:
    participant_id: str
    window_start_ms: int
    energy: float | None
    sample_count: int

    @property
    def absent(self) -> bool:
        return self.sample_count == 0

    def __post_init__(self):
        if self.window_start_ms % WINDOW_MS != 0:
            raise ValidationError(
                f"window_start_ms {self.window_start_ms} not on the 5-minute grid"
            )
        if self.sample_count == 0:
            if self.energy is not None:
                raise ValidationError("empty window must carry energy=None, not 0")
        else:
            if self.energy is None or self.energy < 0:
                raise ValidationError("non-empty window requires energy >= 0")


@dataclass(frozen=True)
class LookbackFeature:
    as_of_ms: int
    mean_energy: float
    windows_present: int

    def usable(self, min_windows: int = MIN_COVERAGE_WINDOWS) -> bool:
        return self.windows_present >= min_windows


def compute_energy(
    samples: Sequence[AccelSample],
    window_start_ms: int,
    participant_id: str = "",
    variant: str = "rms",
) -> EnergyWindow:
    """Reduce one window's samples to a single energy value.

    variant "rms" (canonical): sqrt(mean((ax^2+ay^2+az^2)/3)).
    variant "integrated": mean((ax^2+ay^2+az^2)/3), kept for comparison runs.
    """
    if variant not in ("rms", "integrated"):
        raise ValidationError(f"unknown energy variant {variant!r}")
    if not samples:
        return EnergyWindow(participant_id, window_start_ms, None, 0)

    prev = None
    for s in samples:
        if not (math.isfinite(s.ax) and math.isfinite(s.ay) and math.isfinite(s.az)):
            raise ValidationError(f"non-finite sample at t_ms={s.t_ms}")
        if not (window_start_ms <= s.t_ms < window_start_ms + WINDOW_MS):
            raise ValidationError(f"sample at t_ms={s.t_ms} outside window")
        if prev is not None and s.t_ms < prev:
            raise ValidationError(f"samples out of order at t_ms={s.t_ms}")
        prev = s.t_ms

    ax = np.array([s.ax for s in samples], dtype=np.float64)
    ay = np.array([s.ay for s in samples], dtype=np.float64)
    az = np.array([s.az for s in samples], dtype=np.float64)
    if variant == "rms":
        energy = float(kernels.energy_rms(ax, ay, az))
    else:
        energy = float(kernels.energy_integrated(ax, ay, az))
    return EnergyWindow(participant_id, window_start_ms, energy, len(samples))


def lookback_mean(windows: Iterable[EnergyWindow], as_of_ms: int) -> LookbackFeature:
    """Mean energy over windows starting in [as_of - 1h, as_of).

    Absent windows contribute to neither numerator nor denominator. Zero
    windows in range yields windows_present=0 (unusable), not an error.
    """
    lo = as_of_ms - LOOKBACK_MS
    vals = [
        w.energy
        for w in windows
        if not w.absent and lo <= w.window_start_ms < as_of_ms
    ]
    if not vals:
        return LookbackFeature(as_of_ms, 0.0, 0)
    return LookbackFeature(as_of_ms, float(np.mean(vals)), len(vals))


def windows_from_samples(
    samples: Sequence[AccelSample], participant_id: str = "", variant: str = "rms"
) -> list[EnergyWindow]:
    """Slice an ordered sample stream onto the 5-minute grid and reduce each slice."""
    if not samples:
        return []
    out: list[EnergyWindow] = []
    bucket: list[AccelSample] = []
    cur = (samples[0].t_ms // WINDOW_MS) * WINDOW_MS
    for s in samples:
        start = (s.t_ms // WINDOW_MS) * WINDOW_MS
        if start != cur:
            out.append(compute_energy(bucket, cur, participant_id, variant))
            bucket = []
            cur = start
        bucket.append(s)
    out.append(compute_energy(bucket, cur, participant_id, variant))
    return out


# --- CSV wire formats ---

SAMPLE_HEADER = ["t_ms", "ax", "ay", "az"]
WINDOW_HEADER = ["participant_id", "window_start_ms", "energy", "sample_count"]


def read_samples_csv(text: str) -> list[AccelSample]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != SAMPLE_HEADER:
        raise ValidationError(f"expected header {','.join(SAMPLE_HEADER)}")
    return [
        AccelSample(int(r["t_ms"]), float(r["ax"]), float(r["ay"]), float(r["az"]))
        for r in reader
    ]


def write_windows_csv(windows: Iterable[EnergyWindow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(WINDOW_HEADER)
    for win in windows:
        energy = "" if win.energy is None else repr(win.energy)
        w.writerow([win.participant_id, win.window_start_ms, energy, win.sample_count])
    return buf.getvalue()


def read_windows_csv(text: str) -> list[EnergyWindow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != WINDOW_HEADER:
        raise ValidationError(f"expected header {','.join(WINDOW_HEADER)}")
    out = []
    for r in reader:
        energy = None if r["energy"] == "" else float(r["energy"])
        out.append(
            EnergyWindow(r["participant_id"], int(r["window_start_ms"]), energy, int(r["sample_count"]))
        )
    return out
