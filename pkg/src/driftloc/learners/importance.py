"""Feature importance extraction: impurity-based, permutation, and weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledWindowDataset
from .linear import LinearModel
from .trees import TreeEnsembleModel


@dataclass(frozen=True, eq=False)
class ImportanceVector:
    """Nonnegative per-feature scores; normalized vectors sum to 1."""

    scores: np.ndarray
    feature_ids: tuple[str, ...]
    normalized: bool

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", scores)
        if scores.shape != (len(self.feature_ids),):
            raise ValueError("one score per feature required")
        if np.any(scores < 0):
            raise ValueError("importance scores must be >= 0")

    def normalize(self) -> "ImportanceVector":
        total = float(self.scores.sum())
        scores = self.scores / total if total > 0 else self.scores
        return ImportanceVector(scores, self.feature_ids, normalized=True)


def impurity_importance(m: TreeEnsembleModel) -> ImportanceVector:
    """Mean per-tree weighted Gini decrease per feature, normalized to sum 1."""
    if not isinstance(m, TreeEnsembleModel):
        raise TypeError("impurity importance is defined for tree ensembles")
    acc = np.zeros(len(m.feature_ids))
    for tree in m.trees:
        acc += tree.importance
    acc /= len(m.trees)
    return ImportanceVector(acc, m.feature_ids, normalized=False).normalize()


def permutation_importance(
    model,
    d: LabeledWindowDataset,
    repeats: int = 10,
    seed: int | np.random.SeedSequence = 0,
) -> ImportanceVector:
    """Mean accuracy drop when one feature column is shuffled on holdout data.

    Scores are the raw accuracy drops (clipped at 0), not normalized. One
    row permutation is drawn per repeat and applied to each feature in
    turn, which keeps the scores equivariant under feature reordering at
    fixed seed.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if d.n_samples == 0:
        raise ValueError("holdout must be nonempty")
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(d.X)
    baseline = float(np.mean(model.predict(X) == d.y))
    drops = np.zeros(d.n_features)
    for _ in range(repeats):
        perm = rng.permutation(d.n_samples)
        for f in range(d.n_features):
            Xp = X.copy()
            Xp[:, f] = X[perm, f]
            acc = float(np.mean(model.predict(Xp) == d.y))
            drops[f] += baseline - acc
    drops /= repeats
    return ImportanceVector(np.maximum(drops, 0.0), d.feature_ids, normalized=False)


def linear_importance(m: LinearModel) -> ImportanceVector:
    """Absolute standardized weights, normalized to sum 1."""
    if not isinstance(m, LinearModel):
        raise TypeError("weight importance is defined for linear models")
    return ImportanceVector(np.abs(m.weights), m.feature_ids, normalized=False).normalize()


def accuracy(model, d: LabeledWindowDataset) -> float:
    """Fraction of correct predictions on ``d``."""
    if d.n_samples == 0:
        raise ValueError("dataset must be nonempty")
    return float(np.mean(model.predict(d.X) == d.y))
