"""Numpy fallback for the hot kernels.

Functionally interchangeable with the compiled extension. Split quality is
derived from integer class counts through the exact same float expression
as the compiled code, so both backends select identical splits and grow
identical trees; the simulation loop agrees to float round-off.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def best_split(x: np.ndarray, y: np.ndarray):
    """Best Gini split of one feature column.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Returns ``(decrease, threshold)`` where ``decrease`` is the
    node-local impurity decrease (not scaled by the node's sample share),
    or ``None`` when the column is constant. Equal decreases resolve to
    the smallest threshold.
    """
    order = np.argsort(x, kind="stable")
    xs = np.asarray(x, dtype=np.float64)[order]
    ys = np.asarray(y, dtype=np.int64)[order]
    n = xs.shape[0]
    cut = np.nonzero(xs[:-1] < xs[1:])[0]
    if cut.size == 0:
        return None
    n1 = int(ys.sum())
    nf = float(n)
    n1f = float(n1)
    nl = (cut + 1).astype(np.float64)
    n1l = np.cumsum(ys)[cut].astype(np.float64)
    nr = nf - nl
    n1r = n1f - n1l
    gp = 2.0 * (n1f / nf) * ((nf - n1f) / nf)
    gl = 2.0 * (n1l / nl) * ((nl - n1l) / nl)
    gr = 2.0 * (n1r / nr) * ((nr - n1r) / nr)
    dec = gp - (nl / nf) * gl - (nr / nf) * gr
    i = int(np.argmax(dec))
    thr = (xs[cut[i]] + xs[cut[i] + 1]) * 0.5
    return float(dec[i]), float(thr)


def eval_threshold(x: np.ndarray, y: np.ndarray, thr: float) -> float:
    """Gini decrease of splitting at a fixed threshold; -inf if one side is empty."""
    left = np.asarray(x, dtype=np.float64) <= thr
    n = left.shape[0]
    nl_i = int(left.sum())
    if nl_i == 0 or nl_i == n:
        return -np.inf
    ys = np.asarray(y, dtype=np.int64)
    n1 = int(ys.sum())
    n1l_i = int(ys[left].sum())
    nf = float(n)
    n1f = float(n1)
    nl = float(nl_i)
    n1l = float(n1l_i)
    nr = nf - nl
    n1r = n1f - n1l
    gp = 2.0 * (n1f / nf) * ((nf - n1f) / nf)
    gl = 2.0 * (n1l / nl) * ((nl - n1l) / nl)
    gr = 2.0 * (n1r / nr) * ((nr - n1r) / nr)
    return gp - (nl / nf) * gl - (nr / nf) * gr


def predict_tree(
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    value: np.ndarray,
    X: np.ndarray,
) -> np.ndarray:
    """Route samples through an array-encoded tree (feature[i] < 0 marks leaves)."""
    node = np.zeros(X.shape[0], dtype=np.int32)
    while True:
        feats = feature[node]
        active = np.nonzero(feats >= 0)[0]
        if active.size == 0:
            break
        cur = node[active]
        xv = X[active, feats[active]]
        go_left = xv <= threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
    return value[node].astype(np.int32, copy=False)


def simulate_path(
    indptr: np.ndarray,
    indices: np.ndarray,
    data: np.ndarray,
    c: float,
    b: np.ndarray,
    k: float,
    alpha: float,
    demands: np.ndarray,
    p0: np.ndarray,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """Unroll p <- c*(W p) + b - k*d^alpha over the demand rows."""
    n = b.shape[0]
    W = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    steps = demands.shape[0]
    dpow = demands if alpha == 1.0 else np.power(demands, alpha)
    out = np.empty((steps, n), dtype=np.float64)
    p = np.array(p0, dtype=np.float64)
    for t in range(steps):
        p = c * (W @ p) + b - k * dpow[t]
        if noise is not None:
            p = p + noise[t]
        out[t] = p
    return out
