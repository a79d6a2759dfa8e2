"""
Near-Field Channel Toolkit Command Line
Subcommands: info, dict-info, simulate, estimate, sweep, complexity, leakage
"""

import argparse
import json
import os
import sys
from typing import List, Optional

from config import config, logger
from models import (
    ArrayGeometry, ComplexityRequest, DictInfoRequest, DictionaryFlavor, DictionarySettings,
    InfoRequest, ScenarioConfig, SweepConfig,
)
from services import method_registry, resolve_grid_plan
from services.analysis import analysis_service
from services.channel import synthesize_snapshots
from services.evaluation import leakage_profile, match_estimates, nmse
from services.sweep import draw_scene, load_sweep_config, run_sweep
from services.tpd import decompose
from utils import ConfigError, error_handler
from utils.persistence import (
    dump_tpd_sequences, load_snapshots, save_snapshots, write_estimates, write_truth_table,
)
from utils.reporting import artifact_path, plot_leakage_svg, write_rows_csv
from utils.seeding import trial_seeds


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, default=str))


def _add_geometry_args(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="TOML experiment file (its [geometry] section is used)")
    parser.add_argument("--n-h", type=int, help="Horizontal antenna count")
    parser.add_argument("--n-v", type=int, default=None, help="Vertical antenna count (defaults to n_h)")
    parser.add_argument("--wavelength", type=float, default=None,
                        help=f"Wavelength in meters (default {config.DEFAULT_WAVELENGTH})")
    parser.add_argument("--spacing", type=float, default=None, help="Antenna pitch in meters (default lambda/2)")


def _experiment(args) -> Optional[SweepConfig]:
    return load_sweep_config(args.config) if getattr(args, "config", None) else None


def _geometry(args, experiment: Optional[SweepConfig]) -> ArrayGeometry:
    if args.n_h is None:
        if experiment is None:
            raise ConfigError("Give either --config or --n-h")
        return experiment.geometry
    return ArrayGeometry(
        n_h=args.n_h,
        n_v=args.n_v if args.n_v is not None else args.n_h,
        wavelength=args.wavelength or config.DEFAULT_WAVELENGTH,
        spacing=args.spacing
    )


def _settings(args, experiment: Optional[SweepConfig]) -> DictionarySettings:
    settings = experiment.dictionaries if experiment else DictionarySettings(beta=config.PD_BETA)
    updates = {}
    if getattr(args, "beta", None):
        updates["beta"] = args.beta
    if getattr(args, "tpd_levels", None):
        updates["tpd_levels"] = args.tpd_levels
    if getattr(args, "oversampling", None):
        updates["ad_oversampling"] = tuple(args.oversampling)
        updates["tpd_oversampling"] = tuple(args.oversampling)
    return DictionarySettings(**{**settings.model_dump(), **updates})


def cmd_info(args) -> int:
    experiment = _experiment(args)
    response = analysis_service.describe_geometry(InfoRequest(geometry=_geometry(args, experiment)))
    payload = response.model_dump(exclude={"timestamp"})
    # boundaries are printed in meters to 4 significant digits
    payload["boundaries"] = {k: float(f"{v:.4g}") for k, v in payload["boundaries"].items()}
    _emit(payload)
    return 0


def cmd_dict_info(args) -> int:
    experiment = _experiment(args)
    request = DictInfoRequest(
        geometry=_geometry(args, experiment),
        flavor=DictionaryFlavor(args.flavor),
        dictionaries=_settings(args, experiment)
    )
    _emit(analysis_service.describe_dictionary(request).model_dump(exclude={"timestamp"}))
    return 0


def cmd_complexity(args) -> int:
    experiment = _experiment(args)
    request = ComplexityRequest(
        geometry=_geometry(args, experiment),
        dictionaries=_settings(args, experiment),
        pd_levels=args.pd_levels
    )
    _emit(analysis_service.complexity(request).model_dump(exclude={"timestamp"}))
    return 0


def cmd_simulate(args) -> int:
    experiment = _experiment(args)
    geom = _geometry(args, experiment)
    scenario = experiment.scenario if experiment else ScenarioConfig(
        snapshots=config.DEFAULT_SNAPSHOTS, snr_db=config.DEFAULT_SNR_DB)
    updates = {k: v for k, v in (("snapshots", args.snapshots), ("snr_db", args.snr)) if v is not None}
    scenario = scenario.model_copy(update=updates)

    seed = args.seed if args.seed is not None else (experiment.seed if experiment else 0)
    scene_seed, noise_seed = trial_seeds(seed, 0, 0)
    truth = draw_scene(scenario, geom, scene_seed)
    snapshots = synthesize_snapshots(geom, truth, scenario.snapshots, scenario.snr_db, scenario.model, noise_seed)

    archive = save_snapshots(args.out, snapshots, truth)
    table = write_truth_table(os.path.splitext(args.out)[0] + "_truth.csv", truth)
    logger.info(f"Simulated {len(truth)} scatterers, {scenario.snapshots} snapshots")
    _emit({"snapshots": archive, "truth": table, "scatterers": len(truth)})
    return 0


def cmd_estimate(args) -> int:
    experiment = _experiment(args)
    snapshots, truth = load_snapshots(args.snapshots)
    methods = method_registry.resolve(args.methods)
    order = args.order or len(truth)
    if order < 1:
        raise ConfigError("Model order is unknown: pass --order")

    plan = resolve_grid_plan(snapshots.geometry, _settings(args, experiment))
    results, summary = [], {}
    for tag in methods:
        estimates = method_registry.solve(tag, snapshots, order, plan, args.refine)
        results.append(estimates)
        if truth:
            report = nmse(truth, estimates, match_estimates(truth, estimates, plan.r_min), snapshots, plan.r_min)
            summary[tag.value] = report.model_dump()

    if args.dump_tpd:
        dump_tpd_sequences(args.dump_tpd, decompose(snapshots, snapshots.geometry, "data", order))
    if args.out:
        write_estimates(args.out, results)
    _emit({"estimates": [est.model_dump() for est in results], "metrics": summary})
    return 0


def cmd_sweep(args) -> int:
    experiment = load_sweep_config(args.config)
    workers = args.workers or (config.MAX_WORKERS if config.MAX_WORKERS > 1 else None)
    result = run_sweep(experiment, workers=workers, output_dir=args.output_dir)
    _emit({"csv": result.csv_path, "trials": result.trials_path, "svg": result.svg_paths,
           "records": len(result.records)})
    return 0


def cmd_leakage(args) -> int:
    experiment = _experiment(args)
    geom = _geometry(args, experiment)
    rows = leakage_profile(geom, args.u, args.v, args.r, _settings(args, experiment), args.fraction)
    directory = args.output_dir or config.RESULTS_DIR
    csv_path = write_rows_csv(artifact_path(directory, "leakage"), rows)
    svg_path = plot_leakage_svg(artifact_path(directory, "leakage", extension="svg"), rows)
    _emit({"rows": rows, "csv": csv_path, "svg": svg_path})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nearfield", description="Near-field ELAA channel toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="Geometry and near-field region boundaries")
    _add_geometry_args(p)
    p.set_defaults(handler=cmd_info)

    p = sub.add_parser("dict-info", help="Dictionary size, memory and mutual coherence")
    _add_geometry_args(p)
    p.add_argument("--flavor", choices=[f.value for f in DictionaryFlavor], default="PD")
    p.add_argument("--beta", type=float, help="PD coherence control factor")
    p.add_argument("--oversampling", type=int, nargs=2, metavar=("O_H", "O_V"))
    p.set_defaults(handler=cmd_dict_info)

    p = sub.add_parser("complexity", help="Search-space accounting of AD, PD and TPD")
    _add_geometry_args(p)
    p.add_argument("--pd-levels", type=int, help="S; derived from beta when omitted")
    p.add_argument("--tpd-levels", type=int, help="S_tpd; max(n_h, n_v) when omitted")
    p.add_argument("--beta", type=float)
    p.add_argument("--oversampling", type=int, nargs=2, metavar=("O_H", "O_V"))
    p.set_defaults(handler=cmd_complexity)

    p = sub.add_parser("simulate", help="Draw a seeded scene and save its snapshots")
    _add_geometry_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--snapshots", type=int)
    p.add_argument("--snr", type=float)
    p.add_argument("--out", required=True, help="Snapshot archive (.npz)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("estimate", help="Run methods on saved snapshots")
    p.add_argument("--snapshots", required=True, help="Archive written by simulate")
    p.add_argument("--methods", nargs="+", required=True, help="Method tags, e.g. TPD-MUSIC PD-OMP")
    p.add_argument("--order", type=int, help="Number of scatterers (truth count when omitted)")
    p.add_argument("--config", help="TOML experiment file providing [dictionaries]")
    p.add_argument("--refine", action="store_true", help="Apply off-grid refinement")
    p.add_argument("--dump-tpd", help="Write the TPD sequences to this .npz")
    p.add_argument("--out", help="Write estimates as JSON")
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("sweep", help="Monte Carlo sweep from an experiment file")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("leakage", help="Energy spread of one scatterer under AD and PD atoms")
    _add_geometry_args(p)
    p.add_argument("--u", type=float, default=0.0)
    p.add_argument("--v", type=float, default=0.0)
    p.add_argument("--r", type=float, required=True, help="Scatterer distance in meters")
    p.add_argument("--fraction", type=float, default=0.9)
    p.add_argument("--beta", type=float)
    p.add_argument("--output-dir")
    p.set_defaults(handler=cmd_leakage)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code"""
    args = build_parser().parse_args(argv)
    logger.info(f"Running '{args.command}'")
    try:
        code = args.handler(args)
        logger.info(f"'{args.command}' finished")
        return code
    except Exception as e:
        code = error_handler.exit_code(e)
        if code == error_handler.EXIT_CONFIG:
            logger.error(f"Configuration error: {e}")
        else:
            error_handler.log_error(logger, e, f"'{args.command}' failed")
        return code


if __name__ == "__main__":
    sys.exit(main())
