"""Axis-aligned Gini decision trees and the two ensemble flavors.

"rf" draws a bootstrap sample per tree and searches the best threshold of
each candidate feature; "et" keeps the full sample and scores one uniformly
drawn threshold per candidate feature. Both pick the candidate with the
largest impurity decrease (ties: lower feature index, then lower
threshold) and predict by majority vote.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels as kern
from .dataset import LabeledWindowDataset


@dataclass
class _Tree:
    """Array-encoded binary tree; feature < 0 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    importance: np.ndarray  # per-feature weighted impurity decrease

    def predict(self, X: np.ndarray) -> np.ndarray:
        return kern.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )


class _TreeBuilder:
    def __init__(self, kind: str, max_depth: int, max_features: int, rng: np.random.Generator):
        self.kind = kind
        self.max_depth = max_depth
        self.max_features = max_features
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[int] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0)
        return len(self.feature) - 1

    def build(self, X: np.ndarray, y: np.ndarray) -> _Tree:
        self.X = X
        self.y = y
        self.n_total = float(X.shape[0])
        self.imp = np.zeros(X.shape[1])
        self._grow(np.arange(X.shape[0], dtype=np.intp), depth=0)
        return _Tree(
            feature=np.array(self.feature, dtype=np.int32),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int32),
            right=np.array(self.right, dtype=np.int32),
            value=np.array(self.value, dtype=np.int32),
            importance=self.imp,
        )

    def _grow(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node()
        y = self.y[idx]
        n = idx.size
        n1 = int(y.sum())
        if n1 == 0 or n1 == n or depth >= self.max_depth or n < 2:
            self.value[node] = 1 if 2 * n1 > n else 0
            return node

        n_feat = self.X.shape[1]
        m = min(self.max_features, n_feat)
        candidates = np.sort(self.rng.choice(n_feat, size=m, replace=False))
        best: tuple[float, int, float] | None = None  # (decrease, feature, threshold)
        for f in candidates:
            x = self.X[idx, f]
            if self.kind == "rf":
                found = kern.best_split(x, y)
                if found is None:
                    continue
                dec, thr = found
            else:
                lo = float(x.min())
                hi = float(x.max())
                u = float(self.rng.random())  # drawn even for constant columns
                if lo == hi:
                    continue
                thr = lo + u * (hi - lo)
                dec = float(kern.eval_threshold(x, y, thr))
                if not math.isfinite(dec):
                    continue
            if (
                best is None
                or dec > best[0]
                or (dec == best[0] and (f < best[1] or (f == best[1] and thr < best[2])))
            ):
                best = (dec, int(f), thr)

        if best is None or best[0] <= 0.0:
            self.value[node] = 1 if 2 * n1 > n else 0
            return node

        dec, f, thr = best
        go_left = self.X[idx, f] <= thr
        self.imp[f] += (n / self.n_total) * dec
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self._grow(idx[go_left], depth + 1)
        self.right[node] = self._grow(idx[~go_left], depth + 1)
        return node


@dataclass
class TreeEnsembleModel:
    family: str  # "rf" | "et"
    trees: list[_Tree]
    feature_ids: tuple[str, ...]
    params: dict = field(default_factory=dict)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote over trees; exact ties go to class 0."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees:
            votes += tree.predict(X)
        return (2 * votes > len(self.trees)).astype(np.int64)


def fit_tree_ensemble(
    d: LabeledWindowDataset,
    kind: str,
    n_trees: int = 100,
    max_depth: int = 8,
    seed: int | np.random.SeedSequence = 0,
    *,
    max_features: int | None = None,
    bootstrap: bool | None = None,
) -> TreeEnsembleModel:
    """Fit an ensemble; deterministic in ``seed``.

    ``max_features`` defaults to floor(sqrt(features)); ``bootstrap``
    defaults to True for "rf" and False for "et".
    """
    if kind not in ("rf", "et"):
        raise ValueError(f"unknown ensemble kind {kind!r}")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if max_features is None:
        max_features = max(1, int(math.sqrt(d.n_features)))
    if bootstrap is None:
        bootstrap = kind == "rf"
    X = np.ascontiguousarray(d.X)
    trees = []
    for child_seed in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child_seed)
        if bootstrap:
            idx = rng.integers(0, d.n_samples, size=d.n_samples)
            Xb, yb = X[idx], d.y[idx]
        else:
            Xb, yb = X, d.y
        builder = _TreeBuilder(kind, max_depth, max_features, rng)
        trees.append(builder.build(Xb, yb))
    return TreeEnsembleModel(
        family=kind,
        trees=trees,
        feature_ids=d.feature_ids,
        params={
            "n_trees": n_trees,
            "max_depth": max_depth,
            "max_features": max_features,
            "bootstrap": bootstrap,
        },
    )


def _tree_to_dict(tree: _Tree, node: int = 0) -> dict:
    if tree.feature[node] < 0:
        return {"leaf": int(tree.value[node])}
    return {
        "feature": int(tree.feature[node]),
        "threshold": float(tree.threshold[node]),
        "left": _tree_to_dict(tree, int(tree.left[node])),
        "right": _tree_to_dict(tree, int(tree.right[node])),
    }


def _tree_from_dict(data: dict, n_features: int) -> _Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[int] = []

    def add(rec: dict) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0)
        if "leaf" in rec:
            value[node] = int(rec["leaf"])
        else:
            feature[node] = int(rec["feature"])
            threshold[node] = float(rec["threshold"])
            left[node] = add(rec["left"])
            right[node] = add(rec["right"])
        return node

    add(data)
    return _Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.int32),
        importance=np.zeros(n_features),
    )


def ensemble_to_json(m: TreeEnsembleModel) -> str:
    """Nested split records per tree; importances are refit-only and omitted."""
    return json.dumps(
        {
            "family": m.family,
            "feature_ids": list(m.feature_ids),
            "params": m.params,
            "trees": [_tree_to_dict(t) for t in m.trees],
        }
    )


def ensemble_from_json(doc: str) -> TreeEnsembleModel:
    data = json.loads(doc)
    ids = tuple(data["feature_ids"])
    return TreeEnsembleModel(
        family=data["family"],
        trees=[_tree_from_dict(rec, len(ids)) for rec in data["trees"]],
        feature_ids=ids,
        params=dict(data.get("params", {})),
    )
