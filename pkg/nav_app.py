"""
Command-line app for DVL-outage bridging experiments.

Subcommands:
    simulate  generate the synthetic mission corpus (CSV + manifest)
    train     fit ST-BeamsNet on the training missions
    evaluate  run ST-AidedEKF vs PureINS over seeded outage scenarios
    report    rebuild the summary tables and charts from a scenario CSV
"""

import argparse
import json
import logging
import multiprocessing
import os
import sys
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from aided_nav.config import RunConfig, iter_missions, log_level_from_env, parse_durations
from aided_nav.errors import NavAidError, NavDataError
from aided_nav.eval_runner import sweep
from aided_nav.set_transformer import StWeights, train
from aided_nav.sim_data import build_windows, export_mission, generate_mission, ingest_external, mission_paths
from report_extraction import extract_report, improvement_table, write_table

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def update_progress(task_id, status, index, total):
    """
    Progress callback for training epochs and sweep scenarios.

    Args:
        task_id: ID of the current item
        status: Status of the item ('running', 'completed', 'error')
        index: Index of the current item
        total: Total number of items
    """
    if status == 'completed':
        logger.debug(f"[{index + 1}/{total}] {task_id} completed")


def _write_json(data: dict, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _load_manifest(data_dir: str) -> dict:
    path = os.path.join(data_dir, MANIFEST_NAME)
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise NavDataError(f"No mission manifest at {path}; run `simulate` first") from e
    except json.JSONDecodeError as e:
        raise NavDataError(f"Corrupt mission manifest {path}: {e}") from e


def _load_split(data_dir: str, split: str, config: RunConfig) -> Dict[str, object]:
    manifest = _load_manifest(data_dir)
    sim = config.data["simulation"]
    missions = {}
    for entry in iter_missions(manifest, split):
        paths = mission_paths(data_dir, entry["mission_id"])
        missions[entry["mission_id"]] = ingest_external(
            paths["imu"], paths["dvl"], paths["gt"], entry["mission_id"],
            imu_rate_hz=sim["imu_rate_hz"], dvl_rate_hz=sim["dvl_rate_hz"])
    if not missions:
        raise NavDataError(f"No {split} missions listed in {os.path.join(data_dir, MANIFEST_NAME)}")
    return missions


def cmd_simulate(config: RunConfig, out_dir: str) -> List[str]:
    """
    Generate every mission of the corpus and write its CSVs plus a manifest.

    Returns:
        Paths of all files written
    """
    sim = config.data["simulation"]
    specs = config.corpus()
    noise, dvl_err, geom = config.imu_noise(), config.dvl_error(), config.geometry()
    seeds = np.random.SeedSequence(config.seed).spawn(len(specs))
    jobs = [(spec, noise, dvl_err, geom, child, mission_id, sim["imu_rate_hz"], sim["dvl_rate_hz"])
            for (mission_id, _, spec), child in zip(specs, seeds)]

    workers = config.workers or 1
    if workers > 1 and len(jobs) > 1:
        with multiprocessing.Pool(min(workers, len(jobs))) as pool:
            missions = pool.starmap(generate_mission, jobs)
    else:
        missions = [generate_mission(*job) for job in jobs]

    comment = config.header_comment()
    written, entries = [], []
    for (mission_id, split, spec), mission in zip(specs, missions):
        paths = export_mission(mission, out_dir, comment)
        written.extend(paths.values())
        entries.append({"mission_id": mission_id, "split": split, "kind": spec.kind,
                        "duration": spec.duration, "files": {k: os.path.basename(p) for k, p in paths.items()}})

    written.append(_write_json(config.manifest(missions=entries), os.path.join(out_dir, MANIFEST_NAME)))
    logger.info(f"Simulated {len(missions)} missions into {out_dir}")
    return written


def cmd_train(config: RunConfig, data_dir: str, out_dir: str, svg: bool = False) -> List[str]:
    """
    Train ST-BeamsNet on the training split.

    Returns:
        Paths of the weights file and the loss-history CSV (and SVG)
    """
    missions = _load_split(data_dir, "train", config)
    hp = config.network_hyperparams()
    overlap = config.data["simulation"]["window_overlap"]
    windows = [w for mission in missions.values()
               for w in build_windows(mission, overlap, hp.n_dvl, hp.m_imu)]
    logger.info(f"Training on {len(windows)} {overlap} windows from {len(missions)} missions")

    result = train(windows, hp, config.seed, progress_callback=update_progress)
    weights_path = os.path.join(out_dir, "weights.json")
    os.makedirs(out_dir, exist_ok=True)
    result.weights.save(weights_path, config.config_hash)

    history = pd.DataFrame(result.history, columns=["epoch", "train_loss", "val_loss", "persistence_val_loss"])
    paths = [weights_path, write_table(history, os.path.join(out_dir, "loss_history.csv"),
                                       config.header_comment())]
    if svg:
        from trajectory_visualizations import configure_svg, plot_loss_history

        configure_svg(config.config_hash)
        paths.append(plot_loss_history(history, os.path.join(out_dir, "loss_history.svg")))
    logger.info(f"Best validation MSE {result.best_val_loss:.6g} at epoch {result.best_epoch}")
    return paths


def cmd_evaluate(config: RunConfig, data_dir: str, weights_path: Optional[str], out_dir: str,
                 svg: bool = False) -> List[str]:
    """
    Sweep the evaluation missions over outage durations and start times.

    Returns:
        Paths of the per-scenario CSV, summary CSV and optional SVGs
    """
    missions = _load_split(data_dir, "eval", config)
    params = config.eval_params()
    weights = None
    if any(m == "st_aided" for m in params.methods):
        if not weights_path or not os.path.exists(weights_path):
            raise NavDataError(f"Weights file {weights_path} not found; run `train` first")
        weights = StWeights.load(weights_path)

    workers = config.workers or multiprocessing.cpu_count()
    report = sweep(missions, params, config.seed, config.measurement_noise(), weights,
                   config.ekf_params(), mode='parallel' if workers > 1 else 'sequential',
                   workers=workers, progress_callback=update_progress)

    comment = config.header_comment()
    paths = [
        write_table(report.scenarios, os.path.join(out_dir, "scenarios.csv"), comment),
        write_table(report.summary, os.path.join(out_dir, "summary.csv"), comment),
    ]
    if svg:
        from trajectory_visualizations import configure_svg, plot_improvement_bars, plot_trajectory_ne

        configure_svg(config.config_hash)
        for result in report.results:
            s = result.scenario
            name = f"trajectory_{s.mission_id}_{s.t_duration:.0f}s_{s.t_init:.0f}.svg"
            paths.append(plot_trajectory_ne(result, os.path.join(out_dir, name)))
        improvements = improvement_table(report.summary)
        if not improvements.empty:
            for metric in improvements['metric'].unique():
                paths.append(plot_improvement_bars(improvements, metric,
                                                   os.path.join(out_dir, f"improvement_{metric}.svg")))
    return paths


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nav_app", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="Global seed (overrides the config)")
    common.add_argument("--out", help="Output directory (overrides the config)")
    common.add_argument("--workers", type=int, help="Worker processes (overrides NAVAID_WORKERS)")
    common.add_argument("--verbose", action="store_true", help="Debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Generate the synthetic corpus")

    p_train = sub.add_parser("train", parents=[common], help="Train ST-BeamsNet")
    p_train.add_argument("--data", help="Mission directory (default: <out>/data)")
    p_train.add_argument("--preset", choices=["published", "paper", "toy", "custom"], help="Network preset")
    p_train.add_argument("--svg", action="store_true", help="Also plot the loss history")

    p_eval = sub.add_parser("evaluate", parents=[common], help="Run the outage sweep")
    p_eval.add_argument("--data", help="Mission directory (default: <out>/data)")
    p_eval.add_argument("--weights", help="Weights file (default: <out>/model/weights.json)")
    p_eval.add_argument("--durations", help="Comma-separated outage durations in seconds")
    p_eval.add_argument("--svg", action="store_true", help="Write trajectory and improvement SVGs")

    p_report = sub.add_parser("report", parents=[common], help="Rebuild the summary from scenarios.csv")
    p_report.add_argument("--scenarios", help="Scenario CSV (default: <out>/report/scenarios.csv)")
    p_report.add_argument("--svg", action="store_true", help="Write improvement SVGs")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1

    logging.getLogger().setLevel(logging.DEBUG if args.verbose else log_level_from_env())

    try:
        if args.command == "report":
            out = args.out or "output"
            scenarios = args.scenarios or os.path.join(out, "report", "scenarios.csv")
            extract_report(scenarios, os.path.join(out, "report"), svg=args.svg)
            return 0

        overrides = {}
        if args.out:
            overrides["output_dir"] = args.out
        if args.workers is not None:
            overrides["workers"] = args.workers
        if getattr(args, "preset", None):
            overrides["network"] = {"preset": args.preset}
        durations = parse_durations(getattr(args, "durations", None))
        if durations:
            overrides["evaluation"] = {"durations": durations}
        config = RunConfig.load(args.config, seed=args.seed, overrides=overrides)

        out = config.output_dir
        data_dir = getattr(args, "data", None) or os.path.join(out, "data")
        if args.command == "simulate":
            cmd_simulate(config, data_dir)
        elif args.command == "train":
            cmd_train(config, data_dir, os.path.join(out, "model"), svg=args.svg)
        elif args.command == "evaluate":
            weights = args.weights or os.path.join(out, "model", "weights.json")
            cmd_evaluate(config, data_dir, weights, os.path.join(out, "report"),
                         svg=args.svg or config.data["evaluation"]["svg"])
        return 0
    except NavAidError as e:
        logger.error(str(e))
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
