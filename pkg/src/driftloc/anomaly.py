"""Anomaly injection: demand anomalies, sensor faults, and scenario batches.

Two anomaly kinds exist. A demand anomaly ("type1", e.g. a leak) adds
withdrawal at one node from its onset onward and perturbs the whole system
through the dynamics. A sensor fault ("type2") corrupts exactly one
measurement column and leaves the physical system untouched.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .network import NetworkGraph

TYPE1 = "type1"
TYPE2 = "type2"
FAULT_PROFILES = ("broken", "offset", "stuck", "incipient_drift")


@dataclass(frozen=True)
class AnomalyScenario:
    """One injected anomaly.

    ``magnitude`` is added demand for type1; for type2 it parameterizes the
    profile (offset/drift amplitude, or the noise scale of a broken
    sensor). ``ramp`` is the number of steps a type1 anomaly takes to reach
    full magnitude (0 = abrupt). ``onset`` indexes the simulated window of
    length ``window_length``; ``window`` and ``scenario_id`` are bookkeeping.
    """

    kind: str
    node: str
    onset: int
    magnitude: float
    profile: str | None = None
    ramp: int = 0
    window: int = 0
    scenario_id: int = 0

    def __post_init__(self):
        if self.kind not in (TYPE1, TYPE2):
            raise ValueError(f"unknown anomaly kind {self.kind!r}")
        if self.magnitude < 0:
            raise ValueError("magnitude must be >= 0")
        if self.ramp < 0:
            raise ValueError("ramp must be >= 0")
        if self.kind == TYPE2:
            if self.profile not in FAULT_PROFILES:
                raise ValueError(
                    f"type2 scenario needs a profile from {FAULT_PROFILES}, got {self.profile!r}"
                )
        elif self.profile is not None:
            raise ValueError("type1 scenarios carry no fault profile")


def validate_scenario(s: AnomalyScenario, g: NetworkGraph, steps: int) -> None:
    if not 0 <= s.onset < steps:
        raise ValueError(f"onset {s.onset} outside the {steps}-step horizon")
    if s.kind == TYPE2:
        if s.node not in g.sensors:
            raise ValueError(f"type2 target {s.node!r} is not a sensor")
    else:
        g.index_of(s.node)


def anomaly_demand_series(s: AnomalyScenario, steps: int, g: NetworkGraph) -> np.ndarray:
    """Added-demand matrix (steps x nodes) for a demand anomaly.

    Zero before the onset; afterwards the target column ramps linearly to
    the full magnitude over ``ramp`` steps (value a*(t-onset)/ramp, so the
    onset row itself is 0 for ramped anomalies) and stays there. ramp=0
    jumps to the magnitude at the onset row.
    """
    if s.kind != TYPE1:
        raise ValueError("anomaly demand series is defined for type1 scenarios only")
    validate_scenario(s, g, steps)
    out = np.zeros((steps, g.n_nodes))
    col = g.index_of(s.node)
    t = np.arange(s.onset, steps, dtype=np.float64) - s.onset
    if s.ramp == 0:
        out[s.onset :, col] = s.magnitude
    else:
        out[s.onset :, col] = s.magnitude * np.minimum(1.0, t / s.ramp)
    return out


def apply_sensor_fault(
    measurements: np.ndarray,
    s: AnomalyScenario,
    sensor_ids: Sequence[str],
    seed: int | np.random.SeedSequence,
) -> np.ndarray:
    """Corrupt one sensor column from the onset onward; others untouched.

    broken:          replaced by N(0, magnitude) draws
    offset:          magnitude added
    stuck:           frozen at the onset row's value
    incipient_drift: magnitude * (t - onset)/(T - 1 - onset) added, reaching
                     the full magnitude on the last row
    """
    if s.kind != TYPE2:
        raise ValueError("sensor faults are type2 scenarios")
    if s.node not in sensor_ids:
        raise ValueError(f"fault target {s.node!r} is not among the sensor columns")
    steps = measurements.shape[0]
    if not 0 <= s.onset < steps:
        raise ValueError(f"onset {s.onset} outside the {steps}-step series")
    col = list(sensor_ids).index(s.node)
    out = np.array(measurements, dtype=np.float64)
    tail = slice(s.onset, steps)
    n_tail = steps - s.onset
    if s.profile == "broken":
        rng = np.random.default_rng(seed)
        out[tail, col] = s.magnitude * rng.standard_normal(n_tail)
    elif s.profile == "offset":
        out[tail, col] += s.magnitude
    elif s.profile == "stuck":
        out[tail, col] = out[s.onset, col]
    elif s.profile == "incipient_drift":
        horizon = max(1, steps - 1 - s.onset)
        t = np.arange(n_tail, dtype=np.float64)
        out[tail, col] += s.magnitude * t / horizon
    else:  # unreachable given scenario validation
        raise ValueError(f"unknown fault profile {s.profile!r}")
    return out


@dataclass(frozen=True)
class ScenarioBatchConfig:
    """Window layout for batch generation.

    Each window simulates ``window_length`` steps; consecutive windows are
    notionally ``window_offset`` steps apart (distinct demand streams).
    Onsets are drawn uniformly from the middle 80% of each window so that
    ``half_window`` samples exist on both sides.
    """

    n_windows: int = 23
    window_length: int = 2880
    window_offset: int = 1440
    onsets_per_window: int = 10
    half_window: int = 288

    def onset_bounds(self) -> tuple[int, int]:
        lo = -(-self.window_length // 10)  # ceil(0.1 L)
        hi = (9 * self.window_length) // 10
        if lo < self.half_window or hi > self.window_length - self.half_window:
            raise ValueError(
                f"window of {self.window_length} steps is too short for "
                f"half_window {self.half_window} (onsets need w samples on both sides)"
            )
        return lo, hi


def generate_scenarios(
    g: NetworkGraph,
    batch: ScenarioBatchConfig,
    kinds: Iterable[str],
    magnitudes: Sequence[float],
    seed: int,
    *,
    nodes: Sequence[str] | None = None,
    profiles: Sequence[str] = ("offset",),
    ramp: int = 0,
) -> list[AnomalyScenario]:
    """Expand the Cartesian product (window, onset draw, magnitude, node).

    Onset draws are shared across magnitudes and nodes within a window, so
    ``n_windows * onsets_per_window`` scenarios exist per (magnitude, node)
    combination. ``nodes`` defaults to all nodes for type1 and to the
    sensors for type2; type2 scenarios additionally multiply over
    ``profiles``. Deterministic in ``seed``.
    """
    lo, hi = batch.onset_bounds()
    rng = np.random.default_rng(seed)
    onsets = rng.integers(lo, hi, size=(batch.n_windows, batch.onsets_per_window))
    scenarios: list[AnomalyScenario] = []
    sid = 0
    for kind in kinds:
        if kind == TYPE1:
            targets = tuple(nodes) if nodes is not None else g.nodes
            kind_profiles: tuple[str | None, ...] = (None,)
        elif kind == TYPE2:
            targets = tuple(nodes) if nodes is not None else g.sensors
            for t in targets:
                if t not in g.sensors:
                    raise ValueError(f"type2 target {t!r} is not a sensor")
            kind_profiles = tuple(profiles)
        else:
            raise ValueError(f"unknown anomaly kind {kind!r}")
        for win in range(batch.n_windows):
            for j in range(batch.onsets_per_window):
                onset = int(onsets[win, j])
                for magnitude in magnitudes:
                    for node in targets:
                        for profile in kind_profiles:
                            scenarios.append(
                                AnomalyScenario(
                                    kind=kind,
                                    node=node,
                                    onset=onset,
                                    magnitude=float(magnitude),
                                    profile=profile,
                                    ramp=ramp if kind == TYPE1 else 0,
                                    window=win,
                                    scenario_id=sid,
                                )
                            )
                            sid += 1
    return scenarios


def scenarios_to_json(scenarios: Sequence[AnomalyScenario], path: str) -> None:
    with open(path, "w") as fh:
        json.dump([asdict(s) for s in scenarios], fh, indent=1)
        fh.write("\n")


def scenarios_from_json(path: str) -> list[AnomalyScenario]:
    with open(path) as fh:
        data = json.load(fh)
    return [AnomalyScenario(**rec) for rec in data]
