"""
Monte Carlo Sweep Service
Experiment-file loading, seeded scene drawing, per-trial evaluation of every
method and aggregation into CSV/SVG artifacts
"""

import math
import os
import time
from typing import Dict, List, Optional, Tuple

import numpy as np
import toml
from joblib import Parallel, delayed
from pydantic import BaseModel, Field, ValidationError

from config import config, logger
from models import (
    ArrayGeometry, ClusterSpec, EstimateSet, MethodTag, NmseReport, Scatterer, ScenarioConfig,
    SnapshotSet, SweepConfig, TrialRecord,
)
from utils.error_handling import ConfigError, validation_utils
from utils.reporting import artifact_path, plot_metric_svg, write_rows_csv, write_summary_csv
from utils.seeding import trial_seeds
from .channel import sample_clusters, synthesize_snapshots
from .evaluation import match_estimates, nmse
from .geometry import region_boundaries
from .methods import GridPlan, method_registry, resolve_grid_plan

log = logger.getChild("sweep")

METRICS = ["nmse_u", "nmse_v", "nmse_inv_r", "nmse_r", "nmse_channel", "nmse_angle", "search_space"]


class SweepResult(BaseModel):
    """Artifacts of one sweep"""
    records: List[TrialRecord]
    summary: List[Dict]
    csv_path: str
    trials_path: str
    svg_paths: List[str] = Field(default_factory=list)


def load_sweep_config(path: str) -> SweepConfig:
    """
    Parse a TOML experiment file

    A `[[clusters]]` array of tables with `u` and `v` keys fixes the cluster
    centers of the scenario.

    Raises:
        FileNotFoundError: if the file does not exist
        ConfigError: for malformed TOML, a missing seed or invalid values
    """
    problem = validation_utils.validate_config_path(path)
    if problem:
        if not os.path.isfile(path or ""):
            raise FileNotFoundError(problem)
        raise ConfigError(problem)
    try:
        data = toml.load(path)
    except toml.TomlDecodeError as e:
        raise ConfigError(f"Malformed experiment file {path}: {e}") from e

    if "seed" not in data:
        raise ConfigError("Experiment files need a top-level master seed")

    clusters = data.pop("clusters", None)
    if clusters:
        scenario = data.setdefault("scenario", {})
        scenario["centers"] = [[c["u"], c["v"]] for c in clusters]
        scenario["clusters"] = len(clusters)

    try:
        return SweepConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid experiment file {path}: {e}") from e


def scenario_distance(scenario: ScenarioConfig, geom: ArrayGeometry) -> float:
    """Cluster distance in meters"""
    if scenario.distance_unit == "m":
        return scenario.distance
    boundaries = region_boundaries(geom)
    if scenario.distance_unit == "fresnel":
        return scenario.distance * boundaries.fresnel_distance
    return scenario.distance * boundaries.rayleigh_distance


def apply_sweep_value(scenario: ScenarioConfig, variable: str, value: float) -> ScenarioConfig:
    """Scenario with the swept variable set to `value`"""
    field = {"concentration": "concentration", "distance": "distance", "snr": "snr_db"}[variable]
    return scenario.model_copy(update={field: float(value)})


def draw_scene(scenario: ScenarioConfig, geom: ArrayGeometry, seed: int) -> List[Scatterer]:
    """
    Draw cluster centers and their scatterers

    Centers are uniform over the disk u^2 + v^2 <= center_limit^2 unless the
    scenario fixes them.
    """
    rng = np.random.default_rng(seed)
    if scenario.centers is not None:
        centers = list(scenario.centers)
    else:
        radius = scenario.center_limit * np.sqrt(rng.uniform(size=scenario.clusters))
        phi = rng.uniform(0.0, 2 * math.pi, size=scenario.clusters)
        centers = list(zip(radius * np.cos(phi), radius * np.sin(phi)))

    distance = scenario_distance(scenario, geom)
    specs = [
        ClusterSpec.toward(
            float(u), float(v),
            concentration=scenario.concentration,
            scatterers_per_cluster=scenario.scatterers_per_cluster,
            r_min=distance * (1 - scenario.distance_spread),
            r_max=distance * (1 + scenario.distance_spread),
            distance_jitter=scenario.distance_jitter,
        )
        for u, v in centers
    ]
    return sample_clusters(specs, int(rng.integers(2 ** 32)))


def evaluate_methods(truth: List[Scatterer], snapshots: SnapshotSet, plan: GridPlan,
                     methods: List[MethodTag], refine: bool = False
                     ) -> List[Tuple[EstimateSet, NmseReport, float]]:
    """Run each method on one observation; returns (estimates, report, wall ms)"""
    results = []
    for tag in methods:
        start = time.perf_counter()
        estimates = method_registry.solve(tag, snapshots, len(truth), plan, refine)
        wall_ms = (time.perf_counter() - start) * 1000.0
        assignment = match_estimates(truth, estimates, plan.r_min)
        report = nmse(truth, estimates, assignment, snapshots, plan.r_min)
        results.append((estimates, report, wall_ms))
    return results


def run_trial(cfg: SweepConfig, point: int, value: float, trial: int) -> List[TrialRecord]:
    """Every method on one seeded scene"""
    scenario = apply_sweep_value(cfg.scenario, cfg.sweep.variable, value)
    scene_seed, noise_seed = trial_seeds(cfg.seed, point, trial)
    truth = draw_scene(scenario, cfg.geometry, scene_seed)
    snapshots = synthesize_snapshots(cfg.geometry, truth, scenario.snapshots, scenario.snr_db,
                                     scenario.model, noise_seed)
    plan = resolve_grid_plan(cfg.geometry, cfg.dictionaries)
    methods = method_registry.resolve(cfg.sweep.methods)

    records = []
    for estimates, report, wall_ms in evaluate_methods(truth, snapshots, plan, methods, cfg.sweep.refine):
        records.append(TrialRecord(
            scenario_id=f"{cfg.output.name}-p{point}",
            sweep_value=value,
            trial=trial,
            seed=scene_seed,
            method_tag=estimates.method_tag,
            nmse_u=report.nmse_u,
            nmse_v=report.nmse_v,
            nmse_inv_r=report.nmse_inv_r,
            nmse_r=report.nmse_r,
            nmse_channel=report.nmse_channel,
            channel_nmse_db=report.channel_nmse_db,
            search_space_size=estimates.search_space_size,
            wall_ms=wall_ms,
            flags=estimates.flags + report.flags,
        ))
    return records


def _run_cell(cfg: SweepConfig, cell: Tuple[int, float, int]) -> Tuple[int, int, List[TrialRecord]]:
    point, value, trial = cell
    return point, trial, run_trial(cfg, point, value, trial)


def _metric(record: TrialRecord, metric: str) -> float:
    if metric == "search_space":
        return float(record.search_space_size)
    if metric == "nmse_angle":
        return record.nmse_angle
    return float(getattr(record, metric))


def aggregate_records(records: List[TrialRecord], variable: str, values: List[float],
                      methods: List[MethodTag]) -> List[Dict]:
    """Mean and standard error of every metric per (point, method)"""
    rows = []
    for value in values:
        for tag in methods:
            selected = [r for r in records if r.sweep_value == value and r.method_tag == tag]
            if not selected:
                continue
            for metric in METRICS:
                samples = np.array([_metric(r, metric) for r in selected])
                stderr = float(np.std(samples, ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
                rows.append({
                    "sweep_var": variable,
                    "value": value,
                    "method": tag.value,
                    "metric": metric,
                    "mean": float(np.mean(samples)),
                    "stderr": stderr,
                    "trials": samples.size,
                })
    return rows


def run_sweep(cfg: SweepConfig, workers: Optional[int] = None,
              output_dir: Optional[str] = None) -> SweepResult:
    """
    Monte Carlo sweep over the configured variable

    Args:
        cfg: Experiment configuration with a [sweep] section
        workers: Process count; cfg.sweep.workers when omitted
        output_dir: Overrides cfg.output.directory

    Returns:
        SweepResult with the trial records and artifact paths

    Raises:
        ConfigError: for a missing sweep section or unknown method tags,
            before any trial runs
    """
    if cfg.sweep is None:
        raise ConfigError("The experiment file has no [sweep] section")
    methods = method_registry.resolve(cfg.sweep.methods)
    sweep = cfg.sweep.model_copy(update={"methods": methods})
    cfg = cfg.model_copy(update={"sweep": sweep})
    workers = workers or sweep.workers

    cells = [(p, float(v), t) for p, v in enumerate(sweep.values) for t in range(sweep.trials)]
    log.info(f"Sweep '{cfg.output.name}': {len(sweep.values)} points x {sweep.trials} trials, "
             f"methods {[m.value for m in methods]}, {workers} worker(s)")

    if workers > 1:
        results = Parallel(n_jobs=workers)(delayed(_run_cell)(cfg, cell) for cell in cells)
    else:
        results = []
        for cell in cells:
            log.info(f"Point {cell[0] + 1}/{len(sweep.values)} ({sweep.variable}={cell[1]:g}), "
                     f"trial {cell[2] + 1}/{sweep.trials}")
            results.append(_run_cell(cfg, cell))

    results.sort(key=lambda item: (item[0], item[1]))
    records = [record for _, _, batch in results for record in batch]
    summary = aggregate_records(records, sweep.variable, [float(v) for v in sweep.values], methods)

    directory = output_dir or cfg.output.directory or config.RESULTS_DIR
    name = cfg.output.name
    csv_path = write_summary_csv(artifact_path(directory, name), summary)
    trials_path = write_rows_csv(
        artifact_path(directory, name, "trials"),
        [{**r.model_dump(exclude={"flags"}), "method_tag": r.method_tag.value, "flags": ";".join(r.flags)}
         for r in records],
    )

    svg_paths = []
    if cfg.output.svg:
        for metric in METRICS:
            svg_paths.append(plot_metric_svg(artifact_path(directory, name, metric, extension="svg"),
                                             summary, metric, sweep.variable))
    log.info(f"Sweep artifacts written to {directory}")
    return SweepResult(records=records, summary=summary, csv_path=csv_path,
                       trials_path=trials_path, svg_paths=svg_paths)
