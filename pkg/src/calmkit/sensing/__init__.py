from .features import (
    MIN_COVERAGE_WINDOWS,
    AccelSample,
    EnergyWindow,
    LookbackFeature,
    ValidationError,
    compute_energy,
    lookback_mean,
    read_samples_csv,
    read_windows_csv,
    windows_from_samples,
    write_windows_csv,
)
from .kernels import NUMBA_ENABLED

__all__ = [
    "MIN_COVERAGE_WINDOWS",
    "AccelSample",
    "EnergyWindow",
    "LookbackFeature",
    "ValidationError",
    "compute_energy",
    "lookback_mean",
    "read_samples_csv",
    "read_windows_csv",
    "windows_from_samples",
    "write_windows_csv",
    "NUMBA_ENABLED",
]
