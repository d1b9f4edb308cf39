"""Linear classifiers: l2 logistic regression (full-batch gradient descent
with backtracking, cross-validated regularization) and a linear SVM
(Pegasos-style averaged subgradient descent on the hinge loss).

Features are standardized inside the learners; constant columns are dropped
from the optimization and reported with weight 0. Weights therefore live in
standardized feature space, which is what makes their magnitudes comparable
across features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import LabeledWindowDataset, stratified_fold_indices

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass
class LinearModel:
    family: str  # "logreg" | "svm"
    weights: np.ndarray  # standardized space; 0 for dropped constant columns
    intercept: float
    mean: np.ndarray
    scale: np.ndarray  # 1 for dropped columns
    feature_ids: tuple[str, ...]
    params: dict = field(default_factory=dict)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.mean) / self.scale
        return Z @ self.weights + self.intercept

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) >= 0.0).astype(np.int64)


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    kept = std > 0.0
    scale = np.where(kept, std, 1.0)
    return (X - mean) / scale, mean, scale


def _logreg_loss_grad(
    w: np.ndarray, b: float, Z: np.ndarray, y: np.ndarray, lam: float
) -> tuple[float, np.ndarray, float]:
    """Mean log-loss plus (lam/2)||w||^2; returns (loss, grad_w, grad_b)."""
    z = Z @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * lam * float(w @ w)
    p = 1.0 / (1.0 + np.exp(-z))
    err = p - y
    grad_w = Z.T @ err / Z.shape[0] + lam * w
    grad_b = float(err.mean())
    return loss, grad_w, grad_b


def _fit_logreg_gd(
    Z: np.ndarray, y: np.ndarray, lam: float, epochs: int
) -> tuple[np.ndarray, float, list[float]]:
    """Full-batch descent with Armijo backtracking; loss is non-increasing."""
    w = np.zeros(Z.shape[1])
    b = 0.0
    t = 1.0
    history: list[float] = []
    loss, gw, gb = _logreg_loss_grad(w, b, Z, y, lam)
    for _ in range(epochs):
        history.append(loss)
        g2 = float(gw @ gw) + gb * gb
        if g2 <= 1e-24:
            break
        t = min(t * 2.0, 1e6)  # warm start from the last accepted step
        accepted = False
        while t >= 1e-16:
            w_new = w - t * gw
            b_new = b - t * gb
            loss_new, gw_new, gb_new = _logreg_loss_grad(w_new, b_new, Z, y, lam)
            if loss_new <= loss - 0.5 * t * g2:
                accepted = True
                break
            t *= 0.5
        if not accepted:  # numerically stuck; keep the current iterate
            break
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
    history.append(loss)
    return w, b, history


def fit_logreg_cv(
    d: LabeledWindowDataset,
    c_grid: tuple[float, ...] = DEFAULT_C_GRID,
    folds: int = 5,
    epochs: int = 200,
    seed: int | np.random.SeedSequence = 0,
) -> LinearModel:
    """Pick the regularization strength by stratified k-fold accuracy.

    ``c`` is the inverse penalty (lam = 1/c); accuracy ties resolve to the
    smallest c, i.e. the strongest regularization. The model is refit on
    the full data with the winning c.
    """
    if not c_grid:
        raise ValueError("c_grid must be nonempty")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    fold_idx = stratified_fold_indices(d.y, folds, seed)
    cv_acc: dict[float, float] = {}
    for c in c_grid:
        accs = []
        for val in fold_idx:
            mask = np.ones(d.n_samples, dtype=bool)
            mask[val] = False
            Ztr, mean, scale = _standardize(d.X[mask])
            w, b, _ = _fit_logreg_gd(Ztr, d.y[mask], 1.0 / c, epochs)
            Zval = (d.X[val] - mean) / scale
            pred = (Zval @ w + b >= 0.0).astype(np.int64)
            accs.append(float(np.mean(pred == d.y[val])))
        cv_acc[c] = float(np.mean(accs))
    best_c = min(c_grid, key=lambda c: (-cv_acc[c], c))
    Z, mean, scale = _standardize(d.X)
    w, b, history = _fit_logreg_gd(Z, d.y, 1.0 / best_c, epochs)
    return LinearModel(
        family="logreg",
        weights=w,
        intercept=b,
        mean=mean,
        scale=scale,
        feature_ids=d.feature_ids,
        params={"c": best_c, "cv_accuracy": cv_acc, "loss_history": history},
    )


def fit_linear_svm(
    d: LabeledWindowDataset,
    c: float = 1.0,
    epochs: int = 50,
    seed: int | np.random.SeedSequence = 0,
) -> LinearModel:
    """Averaged subgradient descent on (1/(2c))||w||^2 + mean hinge loss.

    One deterministic shuffle per epoch, Pegasos step sizes 1/(lam*t), and
    the average of all iterates as the returned solution; the intercept is
    unregularized.
    """
    if c <= 0:
        raise ValueError("c must be > 0")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    rng = np.random.default_rng(seed)
    Z, mean, scale = _standardize(d.X)
    ysign = 2.0 * d.y - 1.0
    lam = 1.0 / c
    n = d.n_samples
    w = np.zeros(d.n_features)
    b = 0.0
    w_sum = np.zeros_like(w)
    b_sum = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = ysign[i] * (Z[i] @ w + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * ysign[i] * Z[i]
                b += eta * ysign[i]
            w_sum += w
            b_sum += b
    return LinearModel(
        family="svm",
        weights=w_sum / t,
        intercept=b_sum / t,
        mean=mean,
        scale=scale,
        feature_ids=d.feature_ids,
        params={"c": c, "epochs": epochs},
    )


def svm_objective(m: LinearModel, d: LabeledWindowDataset) -> float:
    """(1/(2c))||w||^2 + mean hinge, in the model's standardized space."""
    Z = (d.X - m.mean) / m.scale
    ysign = 2.0 * d.y - 1.0
    margins = ysign * (Z @ m.weights + m.intercept)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    lam = 1.0 / m.params["c"]
    return float(0.5 * lam * (m.weights @ m.weights) + hinge)


def linear_to_json(m: LinearModel) -> str:
    import json

    return json.dumps(
        {
            "family": m.family,
            "weights": m.weights.tolist(),
            "intercept": m.intercept,
            "mean": m.mean.tolist(),
            "scale": m.scale.tolist(),
            "feature_ids": list(m.feature_ids),
            "params": {k: v for k, v in m.params.items() if k != "loss_history"},
        }
    )


def linear_from_json(doc: str) -> LinearModel:
    import json

    data = json.loads(doc)
    return LinearModel(
        family=data["family"],
        weights=np.array(data["weights"]),
        intercept=float(data["intercept"]),
        mean=np.array(data["mean"]),
        scale=np.array(data["scale"]),
        feature_ids=tuple(data["feature_ids"]),
        params=dict(data.get("params", {})),
    )
