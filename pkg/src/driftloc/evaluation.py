"""Localization metrics, aggregation, and the normalized error map."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.stats

from .anomaly import TYPE1, TYPE2, AnomalyScenario
from .localization import LocalizationResult
from .network import NetworkGraph, geographic_distance


@dataclass(frozen=True)
class Type1Metrics:
    """Distance-style scores for one demand-anomaly localization.

    rel_dist is undefined (None) when the anomalous node is itself a
    sensor, since the optimal distance is then 0.
    """

    distance_topo: float
    distance_geo: float
    n_closer: int
    rel_dist: float | None
    best3: int

    def to_dict(self) -> dict:
        return {
            "distance_topo": self.distance_topo,
            "distance_geo": self.distance_geo,
            "n_closer": self.n_closer,
            "rel_dist": self.rel_dist,
            "best3": self.best3,
        }


@dataclass(frozen=True)
class Type2Metrics:
    """Micro-averaged precision/recall/F1 over sensor-fault scenarios.

    A scenario counts as a hit only when the selected sensor is the faulty
    one. With one prediction per scenario, micro precision and recall both
    equal the hit rate; the confusion counts are kept for reporting.
    """

    recall: float
    precision: float
    f1: float
    support: dict[str, int]
    hits: int
    total: int


def eval_type1(
    r: LocalizationResult, scenario: AnomalyScenario, g: NetworkGraph
) -> Type1Metrics:
    """Distances from the selected sensor to the true anomaly node."""
    if scenario.kind != TYPE1:
        raise ValueError("type1 metrics require a type1 scenario")
    v = scenario.node
    hops_v = g.hops_from(v)
    sensor_hops = hops_v[g.sensor_indices]
    sel_idx = list(g.sensors).index(r.selected)
    d_sel = float(sensor_hops[sel_idx])
    n_closer = int(np.sum(sensor_hops < d_sel))
    d_min = float(sensor_hops.min())
    rel_dist = None if v in g.sensors else (d_sel / d_min if d_min > 0 else None)
    closest3 = sorted(zip(sensor_hops, g.sensors))[:3]
    best3 = len(set(r.ranking[:3]) & {s for _, s in closest3})
    return Type1Metrics(
        distance_topo=d_sel,
        distance_geo=geographic_distance(g, r.selected, v),
        n_closer=n_closer,
        rel_dist=rel_dist,
        best3=best3,
    )


def eval_type2(
    results: Iterable[tuple[LocalizationResult, AnomalyScenario]]
) -> Type2Metrics:
    """Pool sensor-fault scenarios into micro P/R/F1 via confusion counts."""
    tp: dict[str, int] = {}
    fp: dict[str, int] = {}
    fn: dict[str, int] = {}
    support: dict[str, int] = {}
    total = 0
    for r, scenario in results:
        if scenario.kind != TYPE2:
            raise ValueError("type2 metrics require type2 scenarios")
        total += 1
        truth, pred = scenario.node, r.selected
        support[truth] = support.get(truth, 0) + 1
        if pred == truth:
            tp[truth] = tp.get(truth, 0) + 1
        else:
            fp[pred] = fp.get(pred, 0) + 1
            fn[truth] = fn.get(truth, 0) + 1
    if total == 0:
        raise ValueError("no scenarios to evaluate")
    tp_sum = sum(tp.values())
    precision = tp_sum / (tp_sum + sum(fp.values()))
    recall = tp_sum / (tp_sum + sum(fn.values()))
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return Type2Metrics(
        recall=recall,
        precision=precision,
        f1=f1,
        support=dict(sorted(support.items())),
        hits=tp_sum,
        total=total,
    )


TYPE1_METRIC_NAMES = ("distance_topo", "distance_geo", "n_closer", "rel_dist", "best3")


@dataclass(frozen=True)
class AggregateReport:
    """median/mean/population-std per method and metric, plus run counts."""

    stats: dict[str, dict[str, dict[str, float]]]  # method -> metric -> stat
    runs: dict[str, int]

    def to_rows(self) -> list[dict]:
        rows = []
        for method in sorted(self.stats):
            for metric in TYPE1_METRIC_NAMES:
                if metric not in self.stats[method]:
                    continue
                entry = self.stats[method][metric]
                rows.append(
                    {
                        "method": method,
                        "metric": metric,
                        "median": entry["median"],
                        "mean": entry["mean"],
                        "std": entry["std"],
                        "count": entry["count"],
                    }
                )
        return rows


def aggregate(per_method: Mapping[str, Sequence[Type1Metrics]]) -> AggregateReport:
    """Collapse per-scenario metrics; rel_dist only over its defined cases."""
    stats: dict[str, dict[str, dict[str, float]]] = {}
    runs: dict[str, int] = {}
    for method, metrics in per_method.items():
        if len(metrics) == 0:
            raise ValueError(f"no metrics for method {method!r}")
        runs[method] = len(metrics)
        table: dict[str, dict[str, float]] = {}
        for name in TYPE1_METRIC_NAMES:
            values = [getattr(m, name) for m in metrics]
            values = [v for v in values if v is not None]
            if not values:
                continue
            arr = np.array(values, dtype=np.float64)
            table[name] = {
                "median": float(np.median(arr)),
                "mean": float(arr.mean()),
                "std": float(arr.std()),
                "count": float(arr.size),
            }
        stats[method] = table
    return AggregateReport(stats=stats, runs=runs)


def report_to_csv(report: AggregateReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["method", "metric", "median", "mean", "std", "count"]
        )
        writer.writeheader()
        for row in report.to_rows():
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def error_map(
    distances_by_node: Mapping[str, Sequence[float]],
    g: NetworkGraph,
    random_baseline_mean: Mapping[str, float],
) -> list[dict]:
    """Normalize mean distance per anomaly node between the closest-sensor
    distance (0) and the random baseline's mean (1), clamped to [0, 1]."""
    records = []
    for node in sorted(distances_by_node):
        vals = distances_by_node[node]
        if len(vals) == 0:
            raise ValueError(f"no distances recorded for node {node!r}")
        hops = g.hops_from(node)
        closest = float(hops[g.sensor_indices].min())
        rand_mean = float(random_baseline_mean[node])
        mean_dist = float(np.mean(vals))
        denom = rand_mean - closest
        score = 0.0 if denom <= 0 else min(1.0, max(0.0, (mean_dist - closest) / denom))
        i = g.index_of(node)
        records.append(
            {
                "node": node,
                "x": float(g.positions[i, 0]),
                "y": float(g.positions[i, 1]),
                "score": score,
            }
        )
    return records


def error_map_to_json(records: Mapping[str, list[dict]] | list[dict], path: str) -> None:
    with open(path, "w") as fh:
        json.dump(records, fh, indent=1)
        fh.write("\n")


def wilcoxon_less(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Paired Wilcoxon signed-rank test of median(x - y) < 0.

    Utility for the acceptance harness; zero-difference pairs are dropped
    (the classic procedure). Returns (statistic, p_value).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("paired samples must have equal length")
    diff = x - y
    diff = diff[diff != 0]
    if diff.size == 0:
        return math.nan, 1.0
    res = scipy.stats.wilcoxon(diff, alternative="less")
    return float(res.statistic), float(res.pvalue)
