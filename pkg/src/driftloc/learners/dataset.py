"""Labeled window datasets and deterministic stratified splitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class LabeledWindowDataset:
    """Per-step samples around a drift onset.

    Rows are time steps, columns are sensors; y is 0 before the onset and
    1 from it on. Both classes must be present.
    """

    X: np.ndarray  # (samples, features) float64
    y: np.ndarray  # (samples,) int64 in {0, 1}
    feature_ids: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (samples, features) with one label per row")
        if X.shape[1] != len(self.feature_ids):
            raise ValueError("one feature id per column required")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0/1")
        if y.min() == y.max():
            raise ValueError("both classes must be present")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, idx: np.ndarray) -> "LabeledWindowDataset":
        return LabeledWindowDataset(self.X[idx], self.y[idx], self.feature_ids)


def train_holdout_split(
    d: LabeledWindowDataset, holdout_frac: float, seed: int | np.random.SeedSequence
) -> tuple[LabeledWindowDataset, LabeledWindowDataset]:
    """Stratified split; the holdout receives ``holdout_frac`` of each class."""
    if not 0 < holdout_frac < 1:
        raise ValueError("holdout_frac must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx: list[np.ndarray] = []
    hold_idx: list[np.ndarray] = []
    for cls in (0, 1):
        members = np.nonzero(d.y == cls)[0]
        perm = members[rng.permutation(members.size)]
        n_hold = max(1, int(round(holdout_frac * members.size)))
        if n_hold >= members.size:
            raise ValueError("class too small to split")
        hold_idx.append(perm[:n_hold])
        train_idx.append(perm[n_hold:])
    train = np.sort(np.concatenate(train_idx))
    hold = np.sort(np.concatenate(hold_idx))
    return d.subset(train), d.subset(hold)


def stratified_fold_indices(
    y: np.ndarray, folds: int, seed: int | np.random.SeedSequence
) -> list[np.ndarray]:
    """Deterministic stratified k-fold partition (validation index sets)."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    rng = np.random.default_rng(seed)
    assignments = np.empty(y.shape[0], dtype=np.intp)
    for cls in (0, 1):
        members = np.nonzero(y == cls)[0]
        if members.size < folds:
            raise ValueError(f"class {cls} has fewer samples than folds")
        perm = members[rng.permutation(members.size)]
        assignments[perm] = np.arange(perm.size) % folds
    return [np.nonzero(assignments == f)[0] for f in range(folds)]
