"""Command-line interface.

Subcommands cover each pipeline stage: graph generation, scenario
expansion, simulation/export, localization on CSV windows, record
aggregation, the theory verification suites, and the end-to-end ``run``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import theory
from .anomaly import generate_scenarios, scenarios_to_json
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .dynamics import (
    DemandModel,
    build_transition_model,
    diurnal_profile,
    export_series_csv,
    measure,
    simulate,
)
from .evaluation import Type1Metrics, aggregate, report_to_csv
from .network import load_graph, random_geometric_graph, save_graph
from .runner import ingest_external, plan_scenarios, run_experiment


@click.group()
def main() -> None:
    """Anomaly simulation and localization on sensor-sparse networks."""


@main.group()
def graph() -> None:
    """Network generation and inspection."""


@graph.command("gen")
@click.option("--nodes", type=int, default=100, show_default=True)
@click.option("--radius", type=float, default=0.18, show_default=True)
@click.option("--sensors", type=int, default=10, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def graph_gen(nodes: int, radius: float, sensors: int, seed: int, out: str) -> None:
    """Write a seeded random geometric graph as JSON."""
    g = random_geometric_graph(nodes, radius, sensors, seed)
    save_graph(g, out)
    click.echo(f"wrote {out}: {g.n_nodes} nodes, {g.n_edges} edges, {len(g.sensors)} sensors")


@main.group()
def scenarios() -> None:
    """Anomaly scenario batches."""


@scenarios.command("generate")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--graph", "graph_path", type=click.Path(exists=True), default=None,
              help="Override the graph referenced by the config.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def scenarios_generate(config_path: str, graph_path: str | None, out: str) -> None:
    """Expand the configured scenario batch to JSON."""
    cfg = _load(config_path)
    g = load_graph(graph_path) if graph_path else _graph_of(cfg)
    scenario_list = plan_scenarios(cfg, g)
    scenarios_to_json(scenario_list, out)
    click.echo(f"wrote {out}: {len(scenario_list)} scenarios")


def _load(path: str) -> ExperimentConfig:
    try:
        return load_config(path)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from None


def _graph_of(cfg: ExperimentConfig):
    from .runner import _build_graph

    return _build_graph(cfg)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--steps", type=int, default=None, help="Defaults to the window length.")
@click.option("--measurements/--observables", default=True, show_default=True,
              help="Export noisy sensor readings or true per-node observables.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def simulate_cmd(config_path: str, seed: int | None, steps: int | None, measurements: bool, out: str) -> None:
    """Simulate the anomaly-free system and export a CSV series."""
    cfg = _load(config_path)
    if seed is not None:
        cfg = _with_seed(cfg, seed)
    g = _graph_of(cfg)
    dyn = cfg.dynamics
    model = build_transition_model(
        g, dyn.mode, contraction=dyn.contraction, demand_gain=dyn.demand_gain,
        demand_exponent=dyn.demand_exponent, base_level=dyn.base_level,
        weighting=dyn.weighting,
    )
    dem = cfg.demand
    demand_model = DemandModel(
        base=dem.base,
        diurnal=diurnal_profile(dem.diurnal_period, dem.diurnal_amplitude),
        hidden_rho=dem.hidden_rho,
        hidden_volatility=dem.hidden_volatility,
        noise_scale=dem.noise_scale,
    )
    n_steps = steps if steps is not None else cfg.scenarios.window_length
    sim_seed, meas_seed = np.random.SeedSequence([cfg.seed, 1]).spawn(2)
    series = simulate(model, demand_model, None, n_steps, dyn.burn_in, sim_seed,
                      process_noise=dyn.process_noise)
    if measurements:
        matrix = measure(series, g, None, dyn.sigma1, dyn.sigma0, meas_seed)
        export_series_csv(out, matrix, g.sensors)
    else:
        export_series_csv(out, series.values, g.nodes)
    click.echo(f"wrote {out}: {n_steps} steps x {matrix.shape[1] if measurements else g.n_nodes} columns")


main.add_command(simulate_cmd, name="simulate")


@main.command()
@click.option("--input", "csv_path", type=click.Path(exists=True), required=True,
              help="CSV with header t,<sensor ids...>.")
@click.option("--onset", type=int, required=True)
@click.option("--window", "half_window", type=int, default=288, show_default=True)
@click.option("--methods", default="mean,ks", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def localize(csv_path: str, onset: int, half_window: int, methods: str, seed: int, out: str | None) -> None:
    """Rank sensors on an externally produced measurement CSV."""
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    if not method_list:
        raise click.ClickException("no methods configured")
    try:
        results = ingest_external(csv_path, onset, half_window, method_list, seed)
    except (ValueError, ConfigError) as exc:
        raise click.ClickException(str(exc)) from None
    doc = [r.to_dict() for r in results]
    if out:
        Path(out).write_text(json.dumps(doc, indent=1) + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(json.dumps(doc, indent=1))


@main.command()
@click.option("--records", "records_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def evaluate(records_path: str, out: str) -> None:
    """Aggregate per-scenario JSONL records into a method-by-metric CSV."""
    per_method: dict[str, list[Type1Metrics]] = {}
    with open(records_path) as fh:
        for line in fh:
            rec = json.loads(line)
            if rec.get("kind") != "type1":
                continue
            per_method.setdefault(rec["method"], []).append(
                Type1Metrics(
                    distance_topo=rec["distance_topo"],
                    distance_geo=rec["distance_geo"],
                    n_closer=rec["n_closer"],
                    rel_dist=rec["rel_dist"],
                    best3=rec["best3"],
                )
            )
    if not per_method:
        raise click.ClickException("no type1 records found")
    report_to_csv(aggregate(per_method), out)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--suite", type=click.Choice(["fixpoint", "hoelder", "mean", "decay", "necessity", "all"]),
              default="all", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def verify(suite: str, out: str | None) -> None:
    """Run the theory verification sweeps; non-zero exit on any failure."""
    results = theory.run_suites([suite])
    doc = json.dumps(results, indent=1, default=float)
    if out:
        Path(out).write_text(doc + "\n")
    for name, res in results.items():
        if isinstance(res, dict):
            click.echo(f"{name}: {'pass' if res['passed'] else 'FAIL'} ({res['checks']} checks)")
    if not results["passed"]:
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def run(config_path: str, seed: int | None, jobs: int, out_dir: str) -> None:
    """Full pipeline: simulate every scenario, run every method, evaluate."""
    cfg = _load(config_path)
    if seed is not None:
        cfg = _with_seed(cfg, seed)
    try:
        report, type2_metrics, records = run_experiment(cfg, jobs=jobs, out_dir=out_dir)
    except (ValueError, ConfigError) as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(f"{len(records)} records -> {out_dir}")
    if report is not None:
        for row in report.to_rows():
            if row["metric"] == "distance_topo":
                click.echo(
                    f"  {row['method']}: median topo distance {row['median']:.2f} "
                    f"(mean {row['mean']:.2f})"
                )
    for method, m in sorted(type2_metrics.items()):
        click.echo(f"  {method}: type2 F1 {m.f1:.3f} ({m.hits}/{m.total} hits)")


def _with_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    from dataclasses import replace

    return replace(cfg, seed=seed)


if __name__ == "__main__":
    main()
