"""Numerical certificates for the contraction/decay theory.

Each check measures a quantity on the actual implementation (fixpoint
iteration, not a closed form) and compares it against the analytic bound,
reporting the margin. Strict inequalities are granted an absolute slack of
1e-12 plus the propagated fixpoint tolerance, nothing more.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import (
    DemandModel,
    TransitionModel,
    build_transition_model,
    sample_demands,
    step,
)
from .network import NetworkGraph, max_degree, random_geometric_graph

STRICT_SLACK = 1e-12


class TheoremHypothesisError(ValueError):
    """The decay theorem's hypothesis C_s < 1/(deg G + 1) does not hold."""


@dataclass(frozen=True)
class BoundCheckReport:
    quantity: str
    bound: float
    measured: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.bound - self.measured

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "bound": self.bound,
            "measured": self.measured,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "passed": self.passed,
            **({"details": self.details} if self.details else {}),
        }


def _require_contractive(model: TransitionModel) -> float:
    c_s = model.lipschitz_state
    if c_s >= 1.0:
        raise ValueError(f"model is not contractive (C_s={c_s:.4f})")
    return c_s


def _fixpoint_iterations(model: TransitionModel, demand: np.ndarray, tol: float) -> int:
    p = model.base_level.copy()
    count = 0
    while True:
        nxt = step(model, p, demand)
        count += 1
        if float(np.abs(nxt - p).sum()) <= tol:
            return count
        p = nxt


def _steady_fixed(model: TransitionModel, demand: np.ndarray, iters: int) -> np.ndarray:
    p = model.base_level.copy()
    for _ in range(iters):
        p = step(model, p, demand)
    return p


def verify_fixpoint(
    model: TransitionModel,
    demand: np.ndarray,
    p0: np.ndarray,
    p0_alt: np.ndarray,
    steps: int = 40,
) -> BoundCheckReport:
    """Geometric merging of two trajectories under the same demand.

    Checks ||O_t(p0) - O_t(p0')||_1 <= C_s^t * ||p0 - p0'||_1 for
    t = 1..steps and reports the worst step.
    """
    c_s = _require_contractive(model)
    p = np.asarray(p0, dtype=np.float64)
    q = np.asarray(p0_alt, dtype=np.float64)
    delta0 = float(np.abs(p - q).sum())
    tol = STRICT_SLACK * max(1.0, delta0)
    worst = None
    gaps = []
    for t in range(1, steps + 1):
        p = step(model, p, demand)
        q = step(model, q, demand)
        measured = float(np.abs(p - q).sum())
        bound = c_s**t * delta0
        gaps.append(measured)
        if worst is None or bound - measured < worst[0] - worst[1]:
            worst = (bound, measured, t)
    assert worst is not None
    return BoundCheckReport(
        quantity="fixpoint_contraction",
        bound=worst[0],
        measured=worst[1],
        tolerance=tol,
        details={"worst_step": worst[2], "initial_gap": delta0, "gaps": gaps},
    )


def verify_hoelder(
    model: TransitionModel,
    demand_a: np.ndarray,
    demand_b: np.ndarray,
    fix_tol: float = 1e-12,
) -> BoundCheckReport:
    """Steady-state Hoelder continuity in the demands.

    ||steady(d_a) - steady(d_b)||_1 <= C_d/(1 - C_s) * ||d_a - d_b||_1^alpha
    """
    c_s = _require_contractive(model)
    c_d = model.hoelder_demand
    da = np.asarray(demand_a, dtype=np.float64)
    db = np.asarray(demand_b, dtype=np.float64)
    iters = max(
        _fixpoint_iterations(model, da, fix_tol), _fixpoint_iterations(model, db, fix_tol)
    )
    pa = _steady_fixed(model, da, iters)
    pb = _steady_fixed(model, db, iters)
    measured = float(np.abs(pa - pb).sum())
    gap = float(np.abs(da - db).sum())
    bound = c_d / (1.0 - c_s) * gap**model.demand_exponent
    tol = STRICT_SLACK * max(1.0, bound) + 2.0 * fix_tol / (1.0 - c_s)
    return BoundCheckReport(
        quantity="hoelder_steady_state",
        bound=bound,
        measured=measured,
        tolerance=tol,
        details={"demand_gap_l1": gap},
    )


def verify_stochastic_mean(
    model: TransitionModel,
    demand_source: DemandModel | np.ndarray,
    samples: int = 100,
    seed: int | np.random.SeedSequence = 0,
    fix_tol: float = 1e-12,
) -> BoundCheckReport:
    """Mean-demand approximation bound for stochastic demands.

    E||steady(D) - steady(mean D)||_1 <= C_d/(1-C_s) * (sum_v Std(D_v))^alpha,
    estimated over demand rows drawn from ``demand_source`` (or taken from
    it directly when it already is a (samples, nodes) matrix).
    """
    c_s = _require_contractive(model)
    c_d = model.hoelder_demand
    if isinstance(demand_source, DemandModel):
        rows = sample_demands(demand_source, model.n_nodes, samples, seed)
    else:
        rows = np.asarray(demand_source, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != model.n_nodes:
            raise ValueError("demand sample matrix must be (samples, nodes)")
    mu = rows.mean(axis=0)
    iters = _fixpoint_iterations(model, mu, fix_tol)
    for row in rows:
        iters = max(iters, _fixpoint_iterations(model, row, fix_tol))
    p_mu = _steady_fixed(model, mu, iters)
    gaps = [
        float(np.abs(_steady_fixed(model, row, iters) - p_mu).sum()) for row in rows
    ]
    measured = float(np.mean(gaps))
    std_sum = float(rows.std(axis=0).sum())
    bound = c_d / (1.0 - c_s) * std_sum**model.demand_exponent
    mc_se = float(np.std(gaps) / math.sqrt(len(gaps))) if len(gaps) > 1 else 0.0
    tol = STRICT_SLACK * max(1.0, bound) + 2.0 * fix_tol / (1.0 - c_s) + 3.0 * mc_se
    return BoundCheckReport(
        quantity="stochastic_mean_gap",
        bound=bound,
        measured=measured,
        tolerance=tol,
        details={"samples": int(rows.shape[0]), "std_sum": std_sum, "mc_stderr": mc_se},
    )


def verify_decay(
    model: TransitionModel,
    node: str,
    magnitude: float,
    demand: np.ndarray | None = None,
    fix_tol: float = 1e-13,
) -> list[BoundCheckReport]:
    """Strict exponential-decay bound for a one-node demand anomaly.

    Requires the theorem hypothesis C_s < 1/(deg G + 1); refuses otherwise.
    Compares per-node steady-state shifts against
    C_d a^alpha (C_s (deg G + 1))^dist / (1 - C_s (deg G + 1)); nodes
    disconnected from the anomaly must show exactly zero shift. Both runs
    use the same iteration count so untouched components stay bit-equal.
    """
    if magnitude < 0:
        raise ValueError("magnitude must be >= 0")
    g = model.graph
    c_s = model.lipschitz_state
    deg1 = max_degree(g) + 1
    if not model.theorem_hypothesis_ok():
        raise TheoremHypothesisError(
            f"C_s={c_s:.4f} >= 1/(deg G + 1)={1.0 / deg1:.4f}; decay bound not applicable"
        )
    if demand is None:
        demand = np.ones(g.n_nodes)
    demand = np.asarray(demand, dtype=np.float64)
    bumped = demand.copy()
    v = g.index_of(node)
    bumped[v] += magnitude
    iters = max(
        _fixpoint_iterations(model, demand, fix_tol),
        _fixpoint_iterations(model, bumped, fix_tol),
    )
    p_plain = _steady_fixed(model, demand, iters)
    p_bumped = _steady_fixed(model, bumped, iters)
    delta = np.abs(p_plain - p_bumped)
    hops = g.hops_from(node)
    rate = c_s * deg1
    amp = model.hoelder_demand * magnitude**model.demand_exponent
    tol = STRICT_SLACK + 2.0 * fix_tol / (1.0 - c_s)
    reports = []
    for w, node_id in enumerate(g.nodes):
        if math.isinf(hops[w]):
            bound, node_tol = 0.0, 0.0  # theorem's infinite-distance case, exact
        else:
            bound = amp * rate ** hops[w] / (1.0 - rate)
            node_tol = tol
        reports.append(
            BoundCheckReport(
                quantity=f"decay_at_{node_id}",
                bound=bound,
                measured=float(delta[w]),
                tolerance=node_tol,
                details={"distance": float(hops[w])},
            )
        )
    return reports


def decay_monotonicity(reports: Sequence[BoundCheckReport]) -> BoundCheckReport:
    """Median shift per distance ring must not increase with distance."""
    by_dist: dict[float, list[float]] = {}
    for r in reports:
        d = r.details["distance"]
        if math.isfinite(d):
            by_dist.setdefault(d, []).append(r.measured)
    dists = sorted(by_dist)
    medians = [float(np.median(by_dist[d])) for d in dists]
    worst = 0.0
    for a, b in zip(medians, medians[1:]):
        worst = max(worst, b - a)
    return BoundCheckReport(
        quantity="decay_median_monotonicity",
        bound=0.0,
        measured=worst,
        tolerance=STRICT_SLACK,
        details={"distances": dists, "medians": medians},
    )


def necessity_example(
    n: int, c_s: float, base_demand: float = 1.0, magnitude: float = 1.0
) -> BoundCheckReport:
    """Measured anomaly-effect ratio on the two-layer star construction.

    The graph joins hub v and collector w through n middle nodes; the
    transition map copies the demand at v, scales by c_s through the
    middle, and sums into w. The steady-state effect ratio between w and a
    middle node must equal n * c_s, demonstrating that effects need not
    decrease monotonically without the degree condition.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if c_s <= 0:
        raise ValueError("c_s must be > 0")
    if magnitude <= 0:
        raise ValueError("magnitude must be > 0")

    def transition(p: np.ndarray, d_v: float) -> np.ndarray:
        out = np.empty(n + 2)
        out[0] = d_v  # v
        out[1 : n + 1] = c_s * p[0]  # middle layer
        out[n + 1] = c_s * p[1 : n + 1].sum()  # w
        return out

    def settle(d_v: float) -> np.ndarray:
        p = np.zeros(n + 2)
        for _ in range(16):  # the map is feed-forward; 3 steps already settle it
            nxt = transition(p, d_v)
            if np.array_equal(nxt, p):
                break
            p = nxt
        return p

    p_plain = settle(base_demand)
    p_bumped = settle(base_demand + magnitude)
    delta_mid = abs(p_bumped[1] - p_plain[1])
    delta_w = abs(p_bumped[n + 1] - p_plain[n + 1])
    measured = delta_w / delta_mid
    expected = n * c_s
    return BoundCheckReport(
        quantity=f"necessity_ratio_n{n}",
        bound=expected,
        measured=measured,
        tolerance=1e-12 * max(1.0, expected),
        details={"deviation": abs(measured - expected), "exact_expected": expected},
    )


# ---------------------------------------------------------------------------
# seeded sweeps


def _sweep_graph(rng: np.random.Generator, max_nodes: int = 50) -> NetworkGraph:
    while True:
        n = int(rng.integers(8, max_nodes + 1))
        g = random_geometric_graph(n, radius=0.35, sensor_count=3, seed=int(rng.integers(2**32)))
        if g.n_nodes >= 2 and g.n_edges >= 1:
            return g


def _suite_result(name: str, reports: list[BoundCheckReport], t0: float) -> dict:
    failures = [r.to_dict() for r in reports if not r.passed]
    worst = min((r.margin + r.tolerance for r in reports), default=math.inf)
    return {
        "suite": name,
        "passed": not failures,
        "checks": len(reports),
        "failures": failures[:20],
        "worst_slacked_margin": worst,
        "runtime_s": round(time.perf_counter() - t0, 3),
    }


def run_fixpoint_suite(n_graphs: int = 100, seed: int = 2024_0501) -> dict:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(n_graphs):
        g = _sweep_graph(rng)
        model = build_transition_model(
            g, "realistic", contraction=float(rng.uniform(0.3, 0.9))
        )
        demand = rng.uniform(0.0, 3.0, g.n_nodes)
        p0 = model.base_level + rng.uniform(-5.0, 5.0, g.n_nodes)
        p0_alt = model.base_level + rng.uniform(-5.0, 5.0, g.n_nodes)
        reports.append(verify_fixpoint(model, demand, p0, p0_alt))
    return _suite_result("fixpoint", reports, t0)


def run_hoelder_suite(
    n_graphs: int = 100, pairs_per_graph: int = 10, seed: int = 2024_0502
) -> dict:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(n_graphs):
        g = _sweep_graph(rng)
        model = build_transition_model(
            g, "realistic", contraction=float(rng.uniform(0.3, 0.85))
        )
        for _ in range(pairs_per_graph):
            da = rng.uniform(0.0, 3.0, g.n_nodes)
            db = rng.uniform(0.0, 3.0, g.n_nodes)
            reports.append(verify_hoelder(model, da, db, fix_tol=1e-12))
    return _suite_result("hoelder", reports, t0)


def run_mean_suite(
    n_graphs: int = 100, samples: int = 50, seed: int = 2024_0503
) -> dict:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(n_graphs):
        g = _sweep_graph(rng)
        model = build_transition_model(
            g, "realistic", contraction=float(rng.uniform(0.3, 0.85))
        )
        dm = DemandModel(
            base=float(rng.uniform(0.5, 2.0)),
            hidden_rho=float(rng.uniform(0.0, 0.95)),
            hidden_volatility=float(rng.uniform(0.0, 0.2)),
            noise_scale=float(rng.uniform(0.0, 0.2)),
        )
        reports.append(
            verify_stochastic_mean(model, dm, samples=samples, seed=int(rng.integers(2**32)))
        )
    return _suite_result("mean", reports, t0)


def run_decay_suite(n_instances: int = 100, seed: int = 2024_0504) -> dict:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    magnitudes = (0.1, 1.0, 10.0)
    reports = []
    for i in range(n_instances):
        g = _sweep_graph(rng)
        model = build_transition_model(g, "theorem")
        node = g.nodes[int(rng.integers(g.n_nodes))]
        a = magnitudes[i % len(magnitudes)]
        demand = rng.uniform(0.5, 2.0, g.n_nodes)
        node_reports = verify_decay(model, node, a, demand)
        reports.extend(node_reports)
        reports.append(decay_monotonicity(node_reports))
    return _suite_result("decay", reports, t0)


def run_necessity_suite(c_s: float = 0.3, n_range: Sequence[int] = range(1, 9)) -> dict:
    t0 = time.perf_counter()
    reports = [necessity_example(n, c_s) for n in n_range]
    # the ratio grows linearly in n at fixed c_s
    ratios = [r.measured for r in reports]
    slopes = [ratios[i] / (i + 1) for i in range(len(ratios))]
    linear = max(slopes) - min(slopes) <= 1e-12
    reports.append(
        BoundCheckReport(
            quantity="necessity_linear_in_n",
            bound=1e-12,
            measured=max(slopes) - min(slopes),
            tolerance=0.0,
            details={"ratios": ratios, "linear": linear},
        )
    )
    return _suite_result("necessity", reports, t0)


SUITES = {
    "fixpoint": run_fixpoint_suite,
    "hoelder": run_hoelder_suite,
    "mean": run_mean_suite,
    "decay": run_decay_suite,
    "necessity": lambda: run_necessity_suite(),
}


def run_suites(names: Sequence[str]) -> dict:
    """Run the named sweeps ('all' expands to every suite)."""
    if "all" in names:
        names = list(SUITES)
    results = {}
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
        results[name] = SUITES[name]()
    results["passed"] = all(r["passed"] for r in results.values())
    return results
