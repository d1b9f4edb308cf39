"""Backend parity: the compiled kernels must agree with the numpy fallback."""

import numpy as np
import pytest

from driftloc import _kernels
from driftloc._kernels import pure

compiled = _kernels.compiled
needs_compiled = pytest.mark.skipif(compiled is None, reason="extension not built")


@needs_compiled
@pytest.mark.parametrize("seed", range(20))
def test_best_split_bitwise_equal(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 200))
    x = rng.normal(size=n)
    if seed % 3 == 0:  # inject ties
        x = np.round(x, 1)
    y = rng.integers(0, 2, size=n)
    a = pure.best_split(x, y)
    b = compiled.best_split(x, y)
    if a is None:
        assert b is None
    else:
        assert a[0] == b[0]  # decrease, exact
        assert a[1] == b[1]  # threshold, exact


@needs_compiled
def test_best_split_constant_column():
    x = np.ones(10)
    y = np.arange(10) % 2
    assert pure.best_split(x, y) is None
    assert compiled.best_split(x, y) is None


@needs_compiled
@pytest.mark.parametrize("seed", range(10))
def test_eval_threshold_bitwise_equal(seed):
    rng = np.random.default_rng(100 + seed)
    x = rng.normal(size=50)
    y = rng.integers(0, 2, size=50)
    for thr in [-2.0, 0.0, 0.3, float(x.min()), float(x.max())]:
        assert pure.eval_threshold(x, y, thr) == compiled.eval_threshold(x, y, thr)


@needs_compiled
def test_predict_tree_equal():
    # x0 <= 0 -> leaf 0; else x1 <= 0.5 -> leaf 1 / leaf 0
    feature = np.array([0, -1, 1, -1, -1], dtype=np.int32)
    threshold = np.array([0.0, 0.0, 0.5, 0.0, 0.0])
    left = np.array([1, -1, 3, -1, -1], dtype=np.int32)
    right = np.array([2, -1, 4, -1, -1], dtype=np.int32)
    value = np.array([0, 0, 0, 1, 0], dtype=np.int32)
    X = np.random.default_rng(0).normal(size=(100, 2))
    a = pure.predict_tree(feature, threshold, left, right, value, X)
    b = compiled.predict_tree(feature, threshold, left, right, value, X)
    assert np.array_equal(a, b)


@needs_compiled
@pytest.mark.parametrize("alpha", [1.0, 0.7])
def test_simulate_path_close(alpha):
    from driftloc.dynamics import build_transition_model
    from driftloc.network import random_geometric_graph

    g = random_geometric_graph(25, 0.3, 4, seed=11)
    m = build_transition_model(g, "realistic", demand_exponent=alpha)
    rng = np.random.default_rng(7)
    D = rng.uniform(0, 2, size=(50, g.n_nodes))
    W = m.weights
    args = (
        W.indptr.astype(np.int32), W.indices.astype(np.int32), W.data,
        m.contraction, m.base_level, m.demand_gain, alpha, D, m.base_level,
    )
    a = pure.simulate_path(*args)
    b = compiled.simulate_path(*args)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_compiled
def test_simulate_path_with_noise_matches():
    from driftloc.dynamics import build_transition_model
    from driftloc.network import random_geometric_graph

    g = random_geometric_graph(10, 0.4, 2, seed=2)
    m = build_transition_model(g, "realistic")
    rng = np.random.default_rng(3)
    D = rng.uniform(0, 1, size=(20, g.n_nodes))
    noise = 0.1 * rng.normal(size=(20, g.n_nodes))
    W = m.weights
    args = (
        W.indptr.astype(np.int32), W.indices.astype(np.int32), W.data,
        m.contraction, m.base_level, m.demand_gain, 1.0, D, m.base_level, noise,
    )
    np.testing.assert_allclose(pure.simulate_path(*args), compiled.simulate_path(*args),
                               rtol=1e-12, atol=1e-12)


@needs_compiled
def test_identical_forests_across_backends():
    """Same seed, same data: both backends must grow the same trees."""
    from driftloc.learners import LabeledWindowDataset, fit_tree_ensemble

    rng = np.random.default_rng(5)
    X = rng.normal(size=(120, 6))
    y = (X[:, 2] + 0.3 * rng.normal(size=120) > 0).astype(int)
    d = LabeledWindowDataset(X, y, tuple(f"s{i}" for i in range(6)))

    models = {}
    for backend in ("pure", "compiled"):
        _kernels.use(backend)
        try:
            models[backend] = fit_tree_ensemble(d, "rf", n_trees=10, max_depth=5, seed=77)
        finally:
            _kernels.use("compiled" if compiled is not None else "pure")
    for ta, tb in zip(models["pure"].trees, models["compiled"].trees):
        assert np.array_equal(ta.feature, tb.feature)
        assert np.array_equal(ta.threshold, tb.threshold)
        assert np.array_equal(ta.value, tb.value)
        assert np.array_equal(ta.importance, tb.importance)


def test_use_rejects_unknown_backend():
    with pytest.raises(ValueError, match="unknown backend"):
        _kernels.use("fancy")
