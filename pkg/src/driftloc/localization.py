"""Sensor-ranking strategies around a known anomaly onset.

Every localizer maps a measurement window (w samples before the onset, w
from it on) to per-sensor scores, a descending ranking, and a selected
sensor. Ties rank by ascending sensor id everywhere, which keeps results
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .dynamics import MeasurementWindow
from .learners import (
    ImportanceVector,
    LabeledWindowDataset,
    accuracy,
    fit_linear_svm,
    fit_logreg_cv,
    fit_tree_ensemble,
    impurity_importance,
    linear_importance,
    permutation_importance,
    train_holdout_split,
)

DEFAULT_HALF_WINDOW = 288  # two simulated days at 10-minute steps


@dataclass(frozen=True, eq=False)
class LocalizationResult:
    method: str
    scores: ImportanceVector
    ranking: tuple[str, ...]
    selected: str
    model_accuracy: float | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "sensors": list(self.scores.feature_ids),
            "scores": [float(v) for v in self.scores.scores],
            "normalized": self.scores.normalized,
            "ranking": list(self.ranking),
            "selected": self.selected,
            "model_accuracy": self.model_accuracy,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "LocalizationResult":
        scores = ImportanceVector(
            np.array(data["scores"], dtype=np.float64),
            tuple(data["sensors"]),
            normalized=bool(data["normalized"]),
        )
        return cls(
            method=data["method"],
            scores=scores,
            ranking=tuple(data["ranking"]),
            selected=data["selected"],
            model_accuracy=data.get("model_accuracy"),
        )


def _result(
    method: str, scores: ImportanceVector, model_accuracy: float | None = None
) -> LocalizationResult:
    order = sorted(
        range(len(scores.feature_ids)),
        key=lambda i: (-scores.scores[i], scores.feature_ids[i]),
    )
    ranking = tuple(scores.feature_ids[i] for i in order)
    return LocalizationResult(
        method=method,
        scores=scores,
        ranking=ranking,
        selected=ranking[0],
        model_accuracy=model_accuracy,
    )


def localize_mean(mw: MeasurementWindow) -> LocalizationResult:
    """Score each sensor by |sum of the w pre-onset values - sum of the w
    post-onset values|; the onset sample counts on the post side."""
    scores = np.abs(mw.before.sum(axis=0) - mw.after.sum(axis=0))
    return _result("mean", ImportanceVector(scores, mw.sensor_ids, normalized=False))


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic, exact via a sorted merge."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def localize_ks(mw: MeasurementWindow) -> LocalizationResult:
    """Per-sensor KS statistic between the pre- and post-onset samples."""
    scores = np.array(
        [ks_statistic(mw.before[:, j], mw.after[:, j]) for j in range(len(mw.sensor_ids))]
    )
    return _result("ks", ImportanceVector(scores, mw.sensor_ids, normalized=False))


def localize_random(
    sensors: tuple[str, ...] | list[str], seed: int | np.random.SeedSequence
) -> LocalizationResult:
    """Uniform random choice; one-hot scores."""
    if len(sensors) == 0:
        raise ValueError("sensor list must be nonempty")
    rng = np.random.default_rng(seed)
    pick = int(rng.integers(len(sensors)))
    scores = np.zeros(len(sensors))
    scores[pick] = 1.0
    return _result("random", ImportanceVector(scores, tuple(sensors), normalized=True))


@dataclass(frozen=True)
class LearnerSpec:
    """Which classifier to train and which importance to read off it."""

    family: str  # "rf" | "et" | "logreg" | "svm" (extendable via FAMILY_FITTERS)
    importance: str  # "fi" | "pfi" | "weights" (extendable via IMPORTANCE_EXTRACTORS)
    params: Mapping = field(default_factory=dict)

    @property
    def method_id(self) -> str:
        return f"{self.family}_{self.importance}"


def build_drift_dataset(mw: MeasurementWindow) -> LabeledWindowDataset:
    """Label pre-onset rows 0 and post-onset rows 1."""
    y = np.zeros(2 * mw.half_window, dtype=np.int64)
    y[mw.half_window :] = 1
    return LabeledWindowDataset(mw.values, y, mw.sensor_ids)


def _fit_rf(train, params, seed):
    return fit_tree_ensemble(
        train,
        "rf",
        n_trees=params.get("n_trees", 100),
        max_depth=params.get("max_depth", 8),
        seed=seed,
    )


def _fit_et(train, params, seed):
    return fit_tree_ensemble(
        train,
        "et",
        n_trees=params.get("n_trees", 100),
        max_depth=params.get("max_depth", 8),
        seed=seed,
    )


def _fit_logreg(train, params, seed):
    return fit_logreg_cv(
        train,
        c_grid=tuple(params.get("c_grid", (0.01, 0.1, 1.0, 10.0, 100.0))),
        folds=params.get("folds", 5),
        epochs=params.get("epochs", 200),
        seed=seed,
    )


def _fit_svm(train, params, seed):
    return fit_linear_svm(
        train,
        c=params.get("c", 1.0),
        epochs=params.get("epochs", 50),
        seed=seed,
    )


FAMILY_FITTERS: dict[str, Callable] = {
    "rf": _fit_rf,
    "et": _fit_et,
    "logreg": _fit_logreg,
    "svm": _fit_svm,
}


def _extract_fi(model, holdout, params, seed) -> ImportanceVector:
    return impurity_importance(model)


def _extract_pfi(model, holdout, params, seed) -> ImportanceVector:
    return permutation_importance(
        model, holdout, repeats=params.get("pfi_repeats", 10), seed=seed
    )


def _extract_weights(model, holdout, params, seed) -> ImportanceVector:
    return linear_importance(model)


IMPORTANCE_EXTRACTORS: dict[str, Callable] = {
    "fi": _extract_fi,
    "pfi": _extract_pfi,
    "weights": _extract_weights,
}


def localize_model_based(
    mw: MeasurementWindow, spec: LearnerSpec, seed: int | np.random.SeedSequence
) -> LocalizationResult:
    """Train before-vs-after and rank sensors by feature importance.

    A 30% stratified holdout provides the reported model accuracy and the
    permutation-importance data; the classifier trains on the rest.
    """
    if spec.family not in FAMILY_FITTERS:
        raise ValueError(f"unknown learner family {spec.family!r}")
    if spec.importance not in IMPORTANCE_EXTRACTORS:
        raise ValueError(f"unknown importance kind {spec.importance!r}")
    seed_split, seed_fit, seed_imp = np.random.SeedSequence(seed).spawn(3)
    dataset = build_drift_dataset(mw)
    train, holdout = train_holdout_split(
        dataset, spec.params.get("holdout_frac", 0.3), seed_split
    )
    model = FAMILY_FITTERS[spec.family](train, spec.params, seed_fit)
    importance = IMPORTANCE_EXTRACTORS[spec.importance](model, holdout, spec.params, seed_imp)
    return _result(spec.method_id, importance, model_accuracy=accuracy(model, holdout))
