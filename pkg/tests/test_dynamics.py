import numpy as np
import pytest

from driftloc.dynamics import (
    DemandModel,
    NotContractiveError,
    build_transition_model,
    diurnal_profile,
    export_series_csv,
    extract_window,
    lipschitz_constants,
    measure,
    read_series_csv,
    sample_demands,
    simulate,
    steady_state,
    step,
)
from driftloc.network import build_graph, random_geometric_graph


def isolated_node(c=0.5, b=10.0, k=1.0, alpha=1.0):
    g = build_graph([], {"x": (0.0, 0.0)}, sensors=["x"])
    return build_transition_model(
        g, "realistic", contraction=c, demand_gain=k, demand_exponent=alpha, base_level=b
    )


def _metropolis_dense(g):
    n = g.n_nodes
    deg = [len(a) for a in g.neighbors]
    W = np.zeros((n, n))
    for v, adj in enumerate(g.neighbors):
        for u in adj:
            W[v, u] = 1.0 / (1 + max(deg[v], deg[u]))
        W[v, v] = 1.0 - W[v].sum()
    return W


class TestStep:
    def test_isolated_node_closed_form(self):
        m = isolated_node(c=0.5, b=10.0, k=1.0)
        out = step(m, np.array([0.0]), np.array([0.0]))
        assert out[0] == 10.0

    def test_fixpoint_is_invariant(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        d = np.zeros(m.n_nodes)
        p_star = steady_state(m, d, tol=1e-12)
        nxt = step(m, p_star, d)
        assert np.abs(nxt - p_star).sum() <= 1e-11

    def test_matches_dense_matrix_oracle(self):
        g = random_geometric_graph(10, 0.4, 2, seed=3)
        m = build_transition_model(g, "realistic", demand_exponent=0.8)
        W = _metropolis_dense(g)
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = rng.normal(50, 5, g.n_nodes)
            d = rng.uniform(0, 3, g.n_nodes)
            expected = m.contraction * W @ p + m.base_level - m.demand_gain * d**0.8
            np.testing.assert_allclose(step(m, p, d), expected, rtol=1e-12)

    def test_rejects_dimension_mismatch(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        with pytest.raises(ValueError, match="expected vectors"):
            step(m, np.zeros(3), np.zeros(m.n_nodes))

    def test_rejects_negative_demand(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        with pytest.raises(ValueError, match="nonnegative"):
            step(m, np.zeros(m.n_nodes), np.full(m.n_nodes, -1.0))


class TestLipschitzConstants:
    def test_isolated_node(self):
        c_s, c_d = lipschitz_constants(isolated_node(c=0.5))
        assert c_s == 0.5
        assert c_d == 1.0

    def test_demand_gain_passthrough(self):
        c_s, c_d = lipschitz_constants(isolated_node(k=2.0, alpha=1.0))
        assert c_d == 2.0

    def test_sublinear_exponent_scales_with_nodes(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic", demand_exponent=0.5)
        _, c_d = lipschitz_constants(m)
        assert c_d == pytest.approx(m.n_nodes**0.5)

    def test_metropolis_constant_equals_c(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic", contraction=0.73)
        assert m.lipschitz_state == pytest.approx(0.73)

    @pytest.mark.parametrize("weighting", ["metropolis", "uniform"])
    def test_empirical_ratio_never_exceeds_cs(self, weighting):
        g = random_geometric_graph(25, 0.3, 3, seed=9)
        m = build_transition_model(g, "realistic", contraction=0.5, weighting=weighting)
        c_s, _ = lipschitz_constants(m)
        rng = np.random.default_rng(1)
        d = rng.uniform(0, 2, g.n_nodes)
        worst = 0.0
        for _ in range(1000):
            p1 = rng.normal(0, 10, g.n_nodes)
            p2 = rng.normal(0, 10, g.n_nodes)
            num = np.abs(step(m, p1, d) - step(m, p2, d)).sum()
            den = np.abs(p1 - p2).sum()
            worst = max(worst, num / den)
        assert worst <= c_s * (1 + 1e-12)

    def test_hoelder_demand_bound_holds_for_sublinear_exponent(self):
        g = random_geometric_graph(12, 0.4, 2, seed=4)
        m = build_transition_model(g, "realistic", demand_exponent=0.6)
        _, c_d = lipschitz_constants(m)
        rng = np.random.default_rng(2)
        p = rng.normal(50, 3, g.n_nodes)
        for _ in range(300):
            d1 = rng.uniform(0, 2, g.n_nodes)
            d2 = rng.uniform(0, 2, g.n_nodes)
            lhs = np.abs(step(m, p, d1) - step(m, p, d2)).sum()
            rhs = c_d * np.abs(d1 - d2).sum() ** 0.6
            assert lhs <= rhs * (1 + 1e-12)


class TestSteadyState:
    def test_isolated_node_formula(self):
        m = isolated_node(c=0.5, b=10.0, k=1.0)
        p = steady_state(m, np.array([2.0]), tol=1e-12)
        assert p[0] == pytest.approx(16.0, abs=1e-10)

    def test_unique_up_to_tolerance(self, small_geometric):
        # same demand from different effective starts: run at two tolerances
        m = build_transition_model(small_geometric, "realistic")
        d = np.full(m.n_nodes, 1.3)
        p1 = steady_state(m, d, tol=1e-9)
        p2 = steady_state(m, d, tol=1e-13)
        assert np.abs(p1 - p2).sum() <= 2e-9 / (1 - m.lipschitz_state)

    def test_matches_linear_solve(self):
        g = random_geometric_graph(30, 0.3, 4, seed=12)
        m = build_transition_model(g, "realistic", demand_exponent=0.9)
        rng = np.random.default_rng(5)
        d = rng.uniform(0, 2, g.n_nodes)
        W = m.weights.toarray()
        rhs = m.base_level - m.demand_gain * d**0.9
        expected = np.linalg.solve(np.eye(g.n_nodes) - m.contraction * W, rhs)
        got = steady_state(m, d, tol=1e-12)
        assert np.abs(got - expected).sum() <= 1e-8

    def test_rejects_non_contractive(self):
        # a star with uniform weights has column sums well above 1
        leaves = [f"l{i}" for i in range(8)]
        positions = {"hub": (0.0, 0.0), **{l: (1.0, i) for i, l in enumerate(leaves)}}
        star = build_graph([("hub", l) for l in leaves], positions, sensors=[])
        m = build_transition_model(star, "realistic", contraction=0.8, weighting="uniform")
        assert m.lipschitz_state > 1
        with pytest.raises(NotContractiveError):
            steady_state(m, np.zeros(m.n_nodes))

    def test_monotone_in_demand(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        rng = np.random.default_rng(8)
        d = rng.uniform(0.5, 1.5, m.n_nodes)
        base = steady_state(m, d, tol=1e-12)
        for v in rng.choice(m.n_nodes, 5, replace=False):
            bumped = d.copy()
            bumped[v] += 0.7
            p = steady_state(m, bumped, tol=1e-12)
            assert np.all(p <= base + 1e-9)

    def test_geometric_convergence_certificate(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic", contraction=0.6)
        c_s = m.lipschitz_state
        d = np.full(m.n_nodes, 0.9)
        p0 = m.base_level + 7.0
        r0 = np.abs(step(m, p0, d) - p0).sum()
        p_star = steady_state(m, d, tol=1e-13)
        p = p0.copy()
        for n in range(1, 30):
            p = step(m, p, d)
            bound = c_s**n * r0 / (1 - c_s)
            assert np.abs(p - p_star).sum() <= bound + 1e-9


class TestDemands:
    def test_zero_volatility_is_periodic(self):
        dm = DemandModel(base=2.0, diurnal=diurnal_profile(12, 0.4),
                         hidden_volatility=0.0, noise_scale=0.0)
        d = sample_demands(dm, nodes=3, steps=48, seed=0)
        assert np.array_equal(d[:12], d[12:24])
        assert np.array_equal(d[:12], d[36:48])

    def test_zero_base_gives_zero(self):
        dm = DemandModel(base=0.0, noise_scale=0.0)
        d = sample_demands(dm, nodes=4, steps=100, seed=1)
        assert np.all(d == 0)

    def test_long_run_mean(self):
        dm = DemandModel(base=1.5, diurnal=diurnal_profile(144, 0.3),
                         hidden_rho=0.9, hidden_volatility=0.05, noise_scale=0.0)
        d = sample_demands(dm, nodes=2, steps=100_000, seed=7)
        expected = 1.5 * diurnal_profile(144, 0.3).mean()
        assert d[:, 0].mean() == pytest.approx(expected, rel=0.02)

    def test_deterministic(self):
        dm = DemandModel()
        a = sample_demands(dm, 5, 200, seed=11)
        b = sample_demands(dm, 5, 200, seed=11)
        assert np.array_equal(a, b)

    def test_nonnegative_clamp(self):
        dm = DemandModel(base=0.01, noise_scale=5.0)
        d = sample_demands(dm, 3, 500, seed=2)
        assert d.min() == 0.0


class TestSimulate:
    def test_settles_to_steady_state(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        dm = DemandModel(base=1.0, diurnal=np.ones(1), hidden_volatility=0.0, noise_scale=0.0)
        series = simulate(m, dm, None, steps=10, burn_in=300, seed=0)
        p_star = steady_state(m, np.ones(m.n_nodes), tol=1e-12)
        for row in series.values:
            assert np.abs(row - p_star).sum() <= 1e-8

    def test_deterministic(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        dm = DemandModel()
        a = simulate(m, dm, None, steps=50, burn_in=20, seed=42)
        b = simulate(m, dm, None, steps=50, burn_in=20, seed=42)
        assert np.array_equal(a.values, b.values)

    def test_replays_step_by_step(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        dm = DemandModel()
        steps, burn_in, seed = 30, 10, 9
        series = simulate(m, dm, None, steps=steps, burn_in=burn_in, seed=seed)
        demand_seed, _ = np.random.SeedSequence(seed).spawn(2)
        demands = sample_demands(dm, m.n_nodes, burn_in + steps, demand_seed)
        p = m.base_level.copy()
        replay = []
        for t in range(burn_in + steps):
            p = step(m, p, demands[t])
            replay.append(p)
        expected = np.array(replay[burn_in:])
        np.testing.assert_allclose(series.values, expected, rtol=1e-12, atol=1e-12)

    def test_anomaly_shape_checked(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        with pytest.raises(ValueError, match="anomaly demand"):
            simulate(m, DemandModel(), np.zeros((3, 2)), steps=5, burn_in=0, seed=0)


class TestMeasure:
    def test_noiseless_channel_is_projection(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        series = simulate(m, DemandModel(), None, steps=20, burn_in=10, seed=1)
        meas = measure(series, small_geometric, None, sigma1=0.0, sigma0=1.0, seed=5)
        assert np.array_equal(meas, series.values[:, small_geometric.sensor_indices])

    def test_all_broken_zero_sigma0(self, small_geometric):
        g = small_geometric
        m = build_transition_model(g, "realistic")
        series = simulate(m, DemandModel(), None, steps=20, burn_in=10, seed=1)
        state = np.zeros((20, len(g.sensors)), dtype=int)
        meas = measure(series, g, state, sigma1=0.5, sigma0=0.0, seed=5)
        assert np.all(meas == 0.0)

    def test_online_noise_std(self, small_geometric):
        g = small_geometric
        m = build_transition_model(g, "realistic")
        dm = DemandModel(hidden_volatility=0.0, noise_scale=0.0, diurnal=np.ones(1))
        series = simulate(m, dm, None, steps=10_000, burn_in=200, seed=3)
        meas = measure(series, g, None, sigma1=0.1, sigma0=1.0, seed=8)
        resid = meas - series.values[:, g.sensor_indices]
        for j in range(len(g.sensors)):
            assert resid[:, j].std() == pytest.approx(0.1, rel=0.05)

    def test_rejects_negative_sigma(self, small_geometric):
        m = build_transition_model(small_geometric, "realistic")
        series = simulate(m, DemandModel(), None, steps=5, burn_in=0, seed=0)
        with pytest.raises(ValueError, match=">= 0"):
            measure(series, small_geometric, None, sigma1=-0.1, sigma0=0.0, seed=0)


class TestWindow:
    def test_extract_window_layout(self):
        matrix = np.arange(40.0).reshape(20, 2)
        mw = extract_window(matrix, ["s1", "s2"], onset=10, half_window=4)
        assert mw.values.shape == (8, 2)
        assert np.array_equal(mw.before, matrix[6:10])
        assert np.array_equal(mw.after, matrix[10:14])

    @pytest.mark.parametrize("onset", [2, 18])
    def test_extract_window_bounds(self, onset):
        matrix = np.zeros((20, 2))
        with pytest.raises(ValueError, match="exceeds"):
            extract_window(matrix, ["a", "b"], onset=onset, half_window=4)


def test_series_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    matrix = rng.normal(size=(17, 3)) * 1e3
    path = tmp_path / "series.csv"
    export_series_csv(str(path), matrix, ["alpha", "beta", "gamma"])
    ids, back = read_series_csv(str(path))
    assert ids == ["alpha", "beta", "gamma"]
    assert np.array_equal(back, matrix)  # repr round-trips floats exactly


def test_read_series_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,a,b\n0,1,2\n")
    with pytest.raises(ValueError, match="expected header"):
        read_series_csv(str(path))
