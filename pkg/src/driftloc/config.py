"""Experiment configuration: parsing, validation, defaults.

Configs are TOML or JSON documents with sections ``graph``, ``dynamics``,
``demand``, ``scenarios``, ``localization``, and ``learners``, plus a
mandatory top-level ``seed``. Validation errors name the offending key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import tomli

from .anomaly import FAULT_PROFILES, TYPE1, TYPE2, ScenarioBatchConfig
from .localization import LearnerSpec

MAGNITUDE_LABELS = {"small": 0.5, "medium": 2.0}  # multiples of mean base demand

METHOD_SPECS: dict[str, LearnerSpec | None] = {
    "random": None,
    "mean": None,
    "ks": None,
    "rf_fi": LearnerSpec("rf", "fi"),
    "rf_pfi": LearnerSpec("rf", "pfi"),
    "et_fi": LearnerSpec("et", "fi"),
    "et_pfi": LearnerSpec("et", "pfi"),
    "logreg": LearnerSpec("logreg", "weights"),
    "svm": LearnerSpec("svm", "weights"),
}


class ConfigError(ValueError):
    pass


def _get(section: Mapping, path: str, key: str, default, kind, check=None):
    value = section.get(key, default)
    if value is None:
        return None
    where = f"{path}.{key}" if path else key
    try:
        if kind is float:
            value = float(value)
        elif kind is int:
            if isinstance(value, float) and value != int(value):
                raise ValueError("not an integer")
            value = int(value)
        elif kind is str:
            if not isinstance(value, str):
                raise ValueError("not a string")
        elif kind is list:
            if not isinstance(value, (list, tuple)):
                raise ValueError("not a list")
            value = list(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if check is not None:
        err = check(value)
        if err:
            raise ConfigError(f"{where}: {err}")
    return value


def _positive(v):
    return None if v > 0 else "must be > 0"


def _nonnegative(v):
    return None if v >= 0 else "must be >= 0"


@dataclass(frozen=True)
class GraphConfig:
    file: str | None = None
    nodes: int = 100
    radius: float = 0.18
    sensors: int = 10
    seed: int | None = None  # defaults to the master seed


@dataclass(frozen=True)
class DynamicsConfig:
    mode: str = "realistic"
    contraction: float | None = None
    demand_gain: float = 1.0
    demand_exponent: float = 1.0
    base_level: float = 50.0
    weighting: str = "metropolis"
    sigma1: float = 0.05
    sigma0: float = 1.0
    burn_in: int = 200
    process_noise: float = 0.0


@dataclass(frozen=True)
class DemandConfig:
    base: float = 1.0
    diurnal_period: int = 144
    diurnal_amplitude: float = 0.3
    hidden_rho: float = 0.9
    hidden_volatility: float = 0.02
    noise_scale: float = 0.05


@dataclass(frozen=True)
class ScenariosConfig:
    kinds: tuple[str, ...] = (TYPE1,)
    n_windows: int = 4
    window_length: int = 2880
    window_offset: int = 1440
    onsets_per_window: int = 5
    magnitudes: tuple[float, ...] = (2.0,)
    profiles: tuple[str, ...] = ("offset",)
    ramp: int = 0
    nodes: tuple[str, ...] | None = None
    node_sample: int | None = None


@dataclass(frozen=True)
class LearnerConfig:
    n_trees: int = 100
    max_depth: int = 8
    c_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    folds: int = 5
    pfi_repeats: int = 10
    logreg_epochs: int = 200
    svm_epochs: int = 50
    svm_c: float = 1.0
    holdout_frac: float = 0.3

    def params_for(self, spec: LearnerSpec) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "c_grid": self.c_grid,
            "folds": self.folds,
            "pfi_repeats": self.pfi_repeats,
            "epochs": self.logreg_epochs if spec.family == "logreg" else self.svm_epochs,
            "c": self.svm_c,
            "holdout_frac": self.holdout_frac,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    graph: GraphConfig = field(default_factory=GraphConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    demand: DemandConfig = field(default_factory=DemandConfig)
    scenarios: ScenariosConfig = field(default_factory=ScenariosConfig)
    learners: LearnerConfig = field(default_factory=LearnerConfig)
    methods: tuple[str, ...] = ("random", "mean", "ks", "rf_fi")
    half_window: int = 288

    def batch(self) -> ScenarioBatchConfig:
        s = self.scenarios
        return ScenarioBatchConfig(
            n_windows=s.n_windows,
            window_length=s.window_length,
            window_offset=s.window_offset,
            onsets_per_window=s.onsets_per_window,
            half_window=self.half_window,
        )

    def learner_spec(self, method: str) -> LearnerSpec | None:
        spec = METHOD_SPECS[method]
        if spec is None:
            return None
        return LearnerSpec(spec.family, spec.importance, self.learners.params_for(spec))


def _graph_config(raw: Mapping) -> GraphConfig:
    return GraphConfig(
        file=_get(raw, "graph", "file", None, str),
        nodes=_get(raw, "graph", "nodes", 100, int, lambda v: None if v >= 1 else "must be >= 1"),
        radius=_get(raw, "graph", "radius", 0.18, float, _positive),
        sensors=_get(raw, "graph", "sensors", 10, int, _nonnegative),
        seed=_get(raw, "graph", "seed", None, int),
    )


def _dynamics_config(raw: Mapping) -> DynamicsConfig:
    mode = _get(
        raw, "dynamics", "mode", "realistic", str,
        lambda v: None if v in ("realistic", "theorem") else "must be 'realistic' or 'theorem'",
    )
    return DynamicsConfig(
        mode=mode,
        contraction=_get(
            raw, "dynamics", "c", None, float,
            lambda v: None if 0 < v < 1 else "must be in (0, 1)",
        ),
        demand_gain=_get(raw, "dynamics", "k", 1.0, float, _positive),
        demand_exponent=_get(
            raw, "dynamics", "alpha", 1.0, float,
            lambda v: None if 0 < v <= 1 else "must be in (0, 1]",
        ),
        base_level=_get(raw, "dynamics", "base_level", 50.0, float),
        weighting=_get(
            raw, "dynamics", "weighting", "metropolis", str,
            lambda v: None if v in ("metropolis", "uniform") else "must be 'metropolis' or 'uniform'",
        ),
        sigma1=_get(raw, "dynamics", "sigma1", 0.05, float, _nonnegative),
        sigma0=_get(raw, "dynamics", "sigma0", 1.0, float, _nonnegative),
        burn_in=_get(raw, "dynamics", "burn_in", 200, int, _nonnegative),
        process_noise=_get(raw, "dynamics", "process_noise", 0.0, float, _nonnegative),
    )


def _demand_config(raw: Mapping) -> DemandConfig:
    return DemandConfig(
        base=_get(raw, "demand", "base", 1.0, float, _nonnegative),
        diurnal_period=_get(raw, "demand", "diurnal_period", 144, int, _positive),
        diurnal_amplitude=_get(
            raw, "demand", "diurnal_amplitude", 0.3, float,
            lambda v: None if 0 <= v < 1 else "must be in [0, 1)",
        ),
        hidden_rho=_get(
            raw, "demand", "hidden_rho", 0.9, float,
            lambda v: None if 0 <= v < 1 else "must be in [0, 1)",
        ),
        hidden_volatility=_get(raw, "demand", "hidden_volatility", 0.02, float, _nonnegative),
        noise_scale=_get(raw, "demand", "noise_scale", 0.05, float, _nonnegative),
    )


def _magnitudes(values: Sequence[Any], mean_base: float) -> tuple[float, ...]:
    out = []
    for v in values:
        if isinstance(v, str):
            if v not in MAGNITUDE_LABELS:
                raise ConfigError(
                    f"scenarios.magnitudes: unknown label {v!r} (use {sorted(MAGNITUDE_LABELS)})"
                )
            out.append(MAGNITUDE_LABELS[v] * mean_base)
        else:
            try:
                out.append(float(v))
            except (TypeError, ValueError):
                raise ConfigError(f"scenarios.magnitudes: {v!r} is not a number or label") from None
            if out[-1] < 0:
                raise ConfigError("scenarios.magnitudes: must be >= 0")
    if not out:
        raise ConfigError("scenarios.magnitudes: must be nonempty")
    return tuple(out)


def _scenarios_config(raw: Mapping, mean_base: float) -> ScenariosConfig:
    kinds = tuple(_get(raw, "scenarios", "kinds", [TYPE1], list))
    for k in kinds:
        if k not in (TYPE1, TYPE2):
            raise ConfigError(f"scenarios.kinds: unknown kind {k!r}")
    profiles = tuple(_get(raw, "scenarios", "profiles", ["offset"], list))
    for p in profiles:
        if p not in FAULT_PROFILES:
            raise ConfigError(f"scenarios.profiles: unknown profile {p!r}")
    nodes = _get(raw, "scenarios", "nodes", None, list)
    return ScenariosConfig(
        kinds=kinds,
        n_windows=_get(raw, "scenarios", "n_windows", 4, int, _positive),
        window_length=_get(raw, "scenarios", "window_length", 2880, int, _positive),
        window_offset=_get(raw, "scenarios", "window_offset", 1440, int, _positive),
        onsets_per_window=_get(raw, "scenarios", "onsets_per_window", 5, int, _positive),
        magnitudes=_magnitudes(raw.get("magnitudes", [2.0]), mean_base),
        profiles=profiles,
        ramp=_get(raw, "scenarios", "ramp", 0, int, _nonnegative),
        nodes=tuple(str(n) for n in nodes) if nodes is not None else None,
        node_sample=_get(raw, "scenarios", "node_sample", None, int, _positive),
    )


def _learner_config(raw: Mapping) -> LearnerConfig:
    c_grid = _get(raw, "learners", "c_grid", [0.01, 0.1, 1.0, 10.0, 100.0], list)
    return LearnerConfig(
        n_trees=_get(raw, "learners", "n_trees", 100, int, _positive),
        max_depth=_get(raw, "learners", "max_depth", 8, int, _positive),
        c_grid=tuple(float(c) for c in c_grid),
        folds=_get(raw, "learners", "folds", 5, int, lambda v: None if v >= 2 else "must be >= 2"),
        pfi_repeats=_get(raw, "learners", "pfi_repeats", 10, int, _positive),
        logreg_epochs=_get(raw, "learners", "logreg_epochs", 200, int, _positive),
        svm_epochs=_get(raw, "learners", "svm_epochs", 50, int, _positive),
        svm_c=_get(raw, "learners", "svm_c", 1.0, float, _positive),
        holdout_frac=_get(
            raw, "learners", "holdout_frac", 0.3, float,
            lambda v: None if 0 < v < 1 else "must be in (0, 1)",
        ),
    )


def config_from_dict(raw: Mapping) -> ExperimentConfig:
    if "seed" not in raw:
        raise ConfigError("seed: required (runs must not draw wall-clock entropy)")
    seed = _get(raw, "", "seed", None, int)
    methods = tuple(_get(raw, "", "methods", ["random", "mean", "ks", "rf_fi"], list))
    if not methods:
        raise ConfigError("methods: no methods configured")
    for m in methods:
        if m not in METHOD_SPECS:
            raise ConfigError(f"methods: unknown method {m!r} (choose from {sorted(METHOD_SPECS)})")
    if len(set(methods)) != len(methods):
        raise ConfigError("methods: duplicates not allowed")
    demand = _demand_config(raw.get("demand", {}))
    return ExperimentConfig(
        seed=seed,
        graph=_graph_config(raw.get("graph", {})),
        dynamics=_dynamics_config(raw.get("dynamics", {})),
        demand=demand,
        scenarios=_scenarios_config(raw.get("scenarios", {}), demand.base),
        learners=_learner_config(raw.get("learners", {})),
        methods=methods,
        half_window=_get(raw, "", "half_window", 288, int, _positive),
    )


def load_config(path: str) -> ExperimentConfig:
    """Parse a TOML or JSON config file (sniffed by suffix, then content)."""
    text = Path(path).read_bytes()
    suffix = Path(path).suffix.lower()
    if suffix == ".json":
        raw = json.loads(text)
    elif suffix == ".toml":
        raw = tomli.loads(text.decode())
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError:
            try:
                raw = tomli.loads(text.decode())
            except tomli.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: neither valid JSON nor TOML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return config_from_dict(raw)
