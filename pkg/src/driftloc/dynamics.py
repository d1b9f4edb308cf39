"""Contractive network dynamics, demand generation, and the sensor channel.

The system state is one scalar observable per node (a pressure analogue).
One synchronous update is

    p' = c * (W @ p) + b - k * d**alpha

with W row-stochastic over closed neighborhoods, c in (0, 1), base levels b,
demand gain k > 0, and demand exponent alpha in (0, 1]. Withdrawal at a node
lowers observables there and, through the coupling, everywhere reachable.

The update is Lipschitz in p with certified l1 constant C_s = c * ||W||_1
(maximum column sum) and Hoelder in the demands with constant
C_d = k * n**(1 - alpha), which reduces to k for alpha = 1. With the default
"metropolis" weighting W is symmetric, so ||W||_1 = 1 and C_s = c exactly;
"uniform" closed-neighborhood weights can push ||W||_1 above 1 on irregular
graphs, which the constants report faithfully.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels as kern
from .network import NetworkGraph, max_degree

DEFAULT_BASE_LEVEL = 50.0
DEFAULT_STEADY_TOL = 1e-10
_MAX_FIXPOINT_ITER = 1_000_000


class NotContractiveError(ValueError):
    """Raised when an operation requires C_s < 1 and the model violates it."""


def _coupling_matrix(g: NetworkGraph, weighting: str) -> sp.csr_matrix:
    n = g.n_nodes
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    if weighting == "uniform":
        for v, adj in enumerate(g.neighbors):
            w = 1.0 / (len(adj) + 1)
            rows.append(v)
            cols.append(v)
            vals.append(w)
            for u in adj:
                rows.append(v)
                cols.append(u)
                vals.append(w)
    elif weighting == "metropolis":
        deg = [len(adj) for adj in g.neighbors]
        for v, adj in enumerate(g.neighbors):
            total = 0.0
            for u in adj:
                w = 1.0 / (1 + max(deg[v], deg[u]))
                rows.append(v)
                cols.append(u)
                vals.append(w)
                total += w
            rows.append(v)
            cols.append(v)
            vals.append(1.0 - total)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    W = sp.csr_matrix(
        (np.array(vals), (np.array(rows, dtype=np.int32), np.array(cols, dtype=np.int32))),
        shape=(n, n),
    )
    W.sort_indices()
    return W


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """Immutable container for one parameterized update map."""

    graph: NetworkGraph
    weights: sp.csr_matrix
    contraction: float  # c
    base_level: np.ndarray  # b, shape (n,)
    demand_gain: float  # k
    demand_exponent: float  # alpha
    mode: str = "realistic"
    weighting: str = "metropolis"

    @cached_property
    def lipschitz_state(self) -> float:
        """Certified l1 Lipschitz constant in the observables: c * ||W||_1."""
        col_sums = np.asarray(np.abs(self.weights).sum(axis=0)).ravel()
        return float(self.contraction * col_sums.max())

    @cached_property
    def hoelder_demand(self) -> float:
        """Certified l1/alpha-Hoelder constant in the demands."""
        n = self.graph.n_nodes
        return float(self.demand_gain * n ** (1.0 - self.demand_exponent))

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    def theorem_hypothesis_ok(self) -> bool:
        """Strict decay-theorem hypothesis: C_s < 1/(deg G + 1)."""
        return self.lipschitz_state < 1.0 / (max_degree(self.graph) + 1)


def build_transition_model(
    g: NetworkGraph,
    mode: str = "realistic",
    *,
    contraction: float | None = None,
    demand_gain: float = 1.0,
    demand_exponent: float = 1.0,
    base_level: float | np.ndarray = DEFAULT_BASE_LEVEL,
    weighting: str = "metropolis",
) -> TransitionModel:
    """Assemble the update map for a graph.

    ``mode`` picks the default contraction factor: "theorem" uses
    0.9 / (deg G + 1), which certifies the strict decay hypothesis, while
    "realistic" uses 0.8 for stronger coupling. An explicit ``contraction``
    overrides the mode default.
    """
    if mode not in ("theorem", "realistic"):
        raise ValueError(f"unknown mode {mode!r}")
    if not demand_gain > 0:
        raise ValueError("demand_gain must be > 0")
    if not 0 < demand_exponent <= 1:
        raise ValueError("demand_exponent must be in (0, 1]")
    if contraction is None:
        contraction = 0.9 / (max_degree(g) + 1) if mode == "theorem" else 0.8
    if not 0 < contraction < 1:
        raise ValueError("contraction factor must be in (0, 1)")
    b = np.full(g.n_nodes, float(base_level)) if np.isscalar(base_level) else np.asarray(
        base_level, dtype=np.float64
    )
    if b.shape != (g.n_nodes,):
        raise ValueError("base_level must be scalar or one value per node")
    return TransitionModel(
        graph=g,
        weights=_coupling_matrix(g, weighting),
        contraction=float(contraction),
        base_level=b,
        demand_gain=float(demand_gain),
        demand_exponent=float(demand_exponent),
        mode=mode,
        weighting=weighting,
    )


def lipschitz_constants(model: TransitionModel) -> tuple[float, float]:
    """(C_s, C_d) upper bounds for the update map."""
    return model.lipschitz_state, model.hoelder_demand


def step(model: TransitionModel, observables: np.ndarray, effective_demand: np.ndarray) -> np.ndarray:
    """One synchronous update of all nodes."""
    p = np.asarray(observables, dtype=np.float64)
    d = np.asarray(effective_demand, dtype=np.float64)
    n = model.n_nodes
    if p.shape != (n,) or d.shape != (n,):
        raise ValueError(f"expected vectors of length {n}, got {p.shape} and {d.shape}")
    if np.any(d < 0):
        raise ValueError("demands must be nonnegative")
    dpow = d if model.demand_exponent == 1.0 else np.power(d, model.demand_exponent)
    return model.contraction * (model.weights @ p) + model.base_level - model.demand_gain * dpow


def steady_state(
    model: TransitionModel, demand: np.ndarray, tol: float = DEFAULT_STEADY_TOL
) -> np.ndarray:
    """Fixpoint of the update map for a constant demand vector.

    Iterates from the base levels until the l1 residual ||O(p, d) - p||_1
    drops to ``tol``; uniqueness up to tolerance follows from contraction.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    c_s = model.lipschitz_state
    if c_s >= 1.0:
        raise NotContractiveError(
            f"certified Lipschitz constant C_s={c_s:.4f} is >= 1; fixpoint not guaranteed"
        )
    p = model.base_level.copy()
    for _ in range(_MAX_FIXPOINT_ITER):
        nxt = step(model, p, demand)
        if float(np.abs(nxt - p).sum()) <= tol:
            return nxt
        p = nxt
    raise RuntimeError("fixpoint iteration did not converge")  # pragma: no cover


@dataclass(frozen=True)
class DemandModel:
    """Demand generator: base levels, a diurnal profile, a shared AR(1)
    hidden cause, and per-node noise.

    base:        scalar or per-node mean demand (>= 0)
    diurnal:     periodic multiplier sequence, cycled over time
    hidden_rho:  AR(1) persistence of the shared hidden cause, in [0, 1)
    hidden_volatility: innovation scale of the hidden cause (>= 0)
    noise_scale: iid Gaussian demand noise per node and step (>= 0)
    """

    base: float | np.ndarray = 1.0
    diurnal: np.ndarray = field(default_factory=lambda: np.ones(1))
    hidden_rho: float = 0.9
    hidden_volatility: float = 0.05
    noise_scale: float = 0.05

    def __post_init__(self):
        if not 0 <= self.hidden_rho < 1:
            raise ValueError("hidden_rho must be in [0, 1)")
        if self.hidden_volatility < 0 or self.noise_scale < 0:
            raise ValueError("volatility and noise scales must be >= 0")

    def base_vector(self, n_nodes: int) -> np.ndarray:
        mu = np.asarray(self.base, dtype=np.float64)
        if mu.ndim == 0:
            mu = np.full(n_nodes, float(mu))
        if mu.shape != (n_nodes,):
            raise ValueError("base must be scalar or one value per node")
        if np.any(mu < 0):
            raise ValueError("base demands must be >= 0")
        return mu


def diurnal_profile(period: int = 144, amplitude: float = 0.3) -> np.ndarray:
    """Sinusoidal daily multiplier with unit mean over one period."""
    if period < 1:
        raise ValueError("period must be >= 1")
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must be in [0, 1)")
    t = np.arange(period)
    return 1.0 + amplitude * np.sin(2.0 * np.pi * t / period)


def sample_demands(
    demand_model: DemandModel, nodes: int, steps: int, seed: int | np.random.SeedSequence
) -> np.ndarray:
    """Draw a (steps, nodes) demand matrix, clamped at zero.

    D[t, v] = max(0, mu_v * diurnal(t) * (1 + H_t) + noise), with H the
    stationary-initialized AR(1) hidden cause shared by all nodes.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    mu = demand_model.base_vector(nodes)
    rho = demand_model.hidden_rho
    s = demand_model.hidden_volatility
    xi = rng.standard_normal(steps)
    h = np.empty(steps)
    h[0] = s / math.sqrt(1.0 - rho * rho) * xi[0]
    for t in range(1, steps):
        h[t] = rho * h[t - 1] + s * xi[t]
    prof = np.asarray(demand_model.diurnal, dtype=np.float64)
    diurnal = prof[np.arange(steps) % prof.shape[0]]
    d = mu[None, :] * (diurnal * (1.0 + h))[:, None]
    if demand_model.noise_scale > 0:
        d = d + demand_model.noise_scale * rng.standard_normal((steps, nodes))
    return np.maximum(d, 0.0)


@dataclass(frozen=True, eq=False)
class ObservableSeries:
    """Time-by-node matrix of true observables, after burn-in removal."""

    values: np.ndarray  # (steps, n)
    start_index: int = 0

    @property
    def steps(self) -> int:
        return self.values.shape[0]


def simulate(
    model: TransitionModel,
    demand_model: DemandModel,
    anomaly_demand: np.ndarray | None,
    steps: int,
    burn_in: int,
    seed: int | np.random.SeedSequence,
    process_noise: float = 0.0,
) -> ObservableSeries:
    """Run the dynamics from the base levels and discard the burn-in prefix.

    ``anomaly_demand`` (steps x nodes, or None) is added to the sampled
    demand of the retained steps; the sum is clamped at zero. The result is
    deterministic in (model, demand_model, seed).
    """
    if steps < 1 or burn_in < 0:
        raise ValueError("steps must be >= 1 and burn_in >= 0")
    c_s = model.lipschitz_state
    if c_s >= 1.0:
        raise NotContractiveError(f"C_s={c_s:.4f} >= 1; simulation would not settle")
    n = model.n_nodes
    rng_demand, rng_noise = np.random.SeedSequence(seed).spawn(2)
    total = burn_in + steps
    demands = sample_demands(demand_model, n, total, rng_demand)
    if anomaly_demand is not None:
        extra = np.asarray(anomaly_demand, dtype=np.float64)
        if extra.shape != (steps, n):
            raise ValueError(f"anomaly demand must have shape {(steps, n)}, got {extra.shape}")
        demands[burn_in:] += extra
        np.maximum(demands, 0.0, out=demands)
    noise = None
    if process_noise > 0:
        noise = process_noise * np.random.default_rng(rng_noise).standard_normal((total, n))
    W = model.weights
    out = kern.simulate_path(
        W.indptr.astype(np.int32),
        W.indices.astype(np.int32),
        W.data,
        model.contraction,
        model.base_level,
        model.demand_gain,
        model.demand_exponent,
        demands,
        model.base_level,
        noise,
    )
    return ObservableSeries(values=out[burn_in:], start_index=0)


def measure(
    observables: ObservableSeries,
    g: NetworkGraph,
    fault_state: np.ndarray | None,
    sigma1: float,
    sigma0: float,
    seed: int | np.random.SeedSequence,
) -> np.ndarray:
    """Sensor readings for every retained step.

    Online cells (state 1) read N(observable, sigma1); broken cells
    (state 0) read N(0, sigma0). ``fault_state`` is a (steps, sensors)
    0/1 matrix, or None for all-online.
    """
    if sigma1 < 0 or sigma0 < 0:
        raise ValueError("noise scales must be >= 0")
    cols = g.sensor_indices
    truth = observables.values[:, cols]
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal(truth.shape)
    if fault_state is None:
        return truth + sigma1 * draws
    state = np.asarray(fault_state)
    if state.shape != truth.shape:
        raise ValueError(f"fault state must have shape {truth.shape}, got {state.shape}")
    online = state == 1
    return np.where(online, truth + sigma1 * draws, sigma0 * draws)


@dataclass(frozen=True, eq=False)
class MeasurementWindow:
    """2w rows of sensor measurements: w before the onset, w from it on.

    ``onset`` is the index in the source series; within the window the
    onset row sits at local index ``half_window``.
    """

    values: np.ndarray  # (2w, sensors)
    sensor_ids: tuple[str, ...]
    onset: int
    half_window: int

    def __post_init__(self):
        w = self.half_window
        if w < 1:
            raise ValueError("half_window must be >= 1")
        if self.values.shape != (2 * w, len(self.sensor_ids)):
            raise ValueError(
                f"window must be (2w, sensors) = {(2 * w, len(self.sensor_ids))},"
                f" got {self.values.shape}"
            )

    @property
    def before(self) -> np.ndarray:
        return self.values[: self.half_window]

    @property
    def after(self) -> np.ndarray:
        return self.values[self.half_window :]


def extract_window(
    measurements: np.ndarray,
    sensor_ids: Sequence[str],
    onset: int,
    half_window: int,
) -> MeasurementWindow:
    """Cut the rows [onset - w, onset + w) out of a measurement matrix."""
    w = half_window
    steps = measurements.shape[0]
    if onset - w < 0 or onset + w > steps:
        raise ValueError(
            f"onset {onset} with half_window {w} exceeds the {steps}-step series"
        )
    return MeasurementWindow(
        values=np.array(measurements[onset - w : onset + w], dtype=np.float64),
        sensor_ids=tuple(sensor_ids),
        onset=onset,
        half_window=w,
    )


def export_series_csv(path: str, matrix: np.ndarray, ids: Sequence[str]) -> None:
    """Write a time-by-column matrix with header ``t,<ids...>``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *ids])
        for t, row in enumerate(matrix):
            writer.writerow([t, *(repr(float(v)) for v in row)])


def read_series_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Read a ``t,<ids...>`` CSV back into (ids, matrix)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t" or len(header) < 2:
            raise ValueError("expected header 't,<column ids...>'")
        ids = header[1:]
        rows = []
        for line in reader:
            if len(line) != len(header):
                raise ValueError(f"row {len(rows)}: expected {len(header)} fields")
            rows.append([float(v) for v in line[1:]])
    if not rows:
        raise ValueError("no data rows")
    return ids, np.array(rows, dtype=np.float64)
