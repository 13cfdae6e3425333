"""Linear calibration from lookback energy to the parent's 1-5 activity rating.

Fits plain ordinary least squares per participant and globally, evaluates
with a seeded shuffled train/test split, and serves clamped predictions with
global-model fallback for cold-start participants.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .sensing import MIN_COVERAGE_WINDOWS, LookbackFeature

GLOBAL_SCOPE = "global"
DEFAULT_MIN_LABELS = 10

RATING_MIN = 1.0
RATING_MAX = 5.0


class ColdStartError(Exception):
    """Not enough labels to fit this scope; caller should fall back to global."""


class RegistryError(Exception):
    pass


@dataclass(frozen=True)
class PerceptionLabel:
    participant_id: str
    as_of_ms: int
    rating: int
    feature: LookbackFeature

    def __post_init__(self):
        if self.rating not in (1, 2, 3, 4, 5):
            raise ValueError(f"rating {self.rating} outside 1..5")
        if self.feature.as_of_ms != self.as_of_ms:
            raise ValueError("feature timestamp mismatch")


@dataclass(frozen=True)
class CalibrationModel:
    scope: str  # GLOBAL_SCOPE or a participant id
    slope: float
    intercept: float
    n_train: int
    fitted_at_ms: int = 0


@dataclass(frozen=True)
class EvalReport:
    scope: str
    r_squared: float | None  # None when test variance is zero
    n_train: int
    n_test: int
    split_seed: int

    @property
    def undefined(self) -> bool:
        return self.r_squared is None


def fit_ols(
    labels: Sequence[PerceptionLabel], scope: str, fitted_at_ms: int = 0
) -> CalibrationModel:
    if len(labels) < 2:
        raise ColdStartError(f"scope {scope}: need >= 2 labels, got {len(labels)}")
    x = np.array([l.feature.mean_energy for l in labels], dtype=np.float64)
    y = np.array([float(l.rating) for l in labels], dtype=np.float64)
    # ptp, not sxx: the mean of identical floats rounds, leaving sxx a tiny
    # nonzero value whose slope ratio would be pure rounding noise
    if float(np.ptp(x)) == 0.0:
        return CalibrationModel(scope, 0.0, float(y.mean()), len(labels), fitted_at_ms)
    xm = x.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xm)
    return CalibrationModel(scope, slope, intercept, len(labels), fitted_at_ms)


def predict(
    model: CalibrationModel,
    feature: LookbackFeature,
    min_coverage: int = MIN_COVERAGE_WINDOWS,
) -> float | None:
    """Clamped prediction, or None when the feature has too little coverage."""
    if not feature.usable(min_coverage):
        return None
    raw = model.slope * feature.mean_energy + model.intercept
    return min(RATING_MAX, max(RATING_MIN, raw))


def _r_squared(y_true: np.ndarray, y_pred: np.ndarray) -> float | None:
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    return 1.0 - ss_res / ss_tot


def split_indices(n: int, ratio: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled split; train gets round(n*ratio), test never empty."""
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(round(n * ratio))
    n_train = min(max(n_train, 1), n - 1)
    return perm[:n_train], perm[n_train:]


def evaluate_split(
    labels: Sequence[PerceptionLabel],
    ratio: float = 0.8,
    seed: int = 0,
    scope: str = GLOBAL_SCOPE,
) -> EvalReport:
    if len(labels) < 5:
        raise ColdStartError(f"scope {scope}: need >= 5 labels, got {len(labels)}")
    train_idx, test_idx = split_indices(len(labels), ratio, seed)
    train = [labels[i] for i in train_idx]
    test = [labels[i] for i in test_idx]
    model = fit_ols(train, scope)
    x_test = np.array([l.feature.mean_energy for l in test])
    y_test = np.array([float(l.rating) for l in test])
    y_pred = model.slope * x_test + model.intercept
    return EvalReport(scope, _r_squared(y_test, y_pred), len(train), len(test), seed)


@dataclass
class PopulationEval:
    """Global fit vs per-participant fits under one shared pooled split."""

    global_report: EvalReport
    participant_reports: list[EvalReport]

    @property
    def mean_participant_r_squared(self) -> float | None:
        vals = [r.r_squared for r in self.participant_reports if r.r_squared is not None]
        return float(np.mean(vals)) if vals else None


def evaluate_population(
    labels: Sequence[PerceptionLabel], ratio: float = 0.8, seed: int = 0
) -> PopulationEval:
    """One pooled shuffled split; the global model and every per-participant
    model train and test on the same row assignment."""
    if len(labels) < 5:
        raise ColdStartError(f"need >= 5 labels, got {len(labels)}")
    train_idx, test_idx = split_indices(len(labels), ratio, seed)
    train_set = set(int(i) for i in train_idx)

    def fit_eval(scope: str, rows: list[int]) -> EvalReport | None:
        tr = [labels[i] for i in rows if i in train_set]
        te = [labels[i] for i in rows if i not in train_set]
        if len(tr) < 2 or not te:
            return None
        model = fit_ols(tr, scope)
        x = np.array([l.feature.mean_energy for l in te])
        y = np.array([float(l.rating) for l in te])
        return EvalReport(scope, _r_squared(y, model.slope * x + model.intercept), len(tr), len(te), seed)

    all_rows = list(range(len(labels)))
    global_report = fit_eval(GLOBAL_SCOPE, all_rows)
    assert global_report is not None
    by_pid: dict[str, list[int]] = {}
    for i, l in enumerate(labels):
        by_pid.setdefault(l.participant_id, []).append(i)
    reports = []
    for pid in sorted(by_pid):
        rep = fit_eval(pid, by_pid[pid])
        if rep is not None:
            reports.append(rep)
    return PopulationEval(global_report, reports)


class ModelRegistry:
    """Scope -> model map with single-writer/multi-reader semantics.

    Writers replace whole CalibrationModel records under a lock; readers see
    either the previous or the new complete model, never a partial one.
    """

    def __init__(self):
        self._models: dict[str, CalibrationModel] = {}
        self._lock = threading.Lock()

    def put(self, model: CalibrationModel) -> None:
        with self._lock:
            self._models = {**self._models, model.scope: model}

    def get(self, scope: str) -> CalibrationModel | None:
        return self._models.get(scope)

    def scopes(self) -> list[str]:
        return sorted(self._models)

    def select(self, participant_id: str, min_labels: int = DEFAULT_MIN_LABELS) -> CalibrationModel:
        """Participant model when trained on enough labels, else global."""
        models = self._models
        if not models:
            raise RegistryError("registry is empty: no global model fitted")
        personal = models.get(participant_id)
        if personal is not None and personal.n_train >= min_labels:
            return personal
        glob = models.get(GLOBAL_SCOPE)
        if glob is None:
            raise RegistryError("registry has no global model to fall back to")
        return glob

    def to_json(self) -> str:
        recs = [
            {
                "scope": m.scope,
                "slope": m.slope,
                "intercept": m.intercept,
                "n_train": m.n_train,
                "fitted_at": m.fitted_at_ms,
            }
            for m in (self._models[s] for s in sorted(self._models))
        ]
        return json.dumps({"models": recs}, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelRegistry":
        reg = cls()
        for rec in json.loads(text)["models"]:
            reg.put(
                CalibrationModel(
                    rec["scope"], rec["slope"], rec["intercept"], rec["n_train"], rec["fitted_at"]
                )
            )
        return reg


def fit_all_scopes(
    labels: Iterable[PerceptionLabel],
    fitted_at_ms: int = 0,
    min_labels_per_scope: int = 2,
) -> ModelRegistry:
    """Fit the global model plus every participant with enough labels."""
    labels = list(labels)
    reg = ModelRegistry()
    reg.put(fit_ols(labels, GLOBAL_SCOPE, fitted_at_ms))
    by_pid: dict[str, list[PerceptionLabel]] = {}
    for l in labels:
        by_pid.setdefault(l.participant_id, []).append(l)
    for pid, rows in by_pid.items():
        if len(rows) >= min_labels_per_scope:
            reg.put(fit_ols(rows, pid, fitted_at_ms))
    return reg
