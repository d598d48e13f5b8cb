"""
Extraction of evaluation tables from per-scenario results.

Reads the per-scenario CSV written by `evaluate`, checks its schema and
artifact header, and rebuilds the per-cell summary with improvement
percentages.
"""

import logging
import os
import re
from typing import Dict, Optional, Tuple

import pandas as pd

from aided_nav.errors import NavDataError
from aided_nav.eval_runner import BASELINE, METRICS, SCENARIO_COLUMNS, summarize

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

HEADER_PATTERN = r'^#\s*config_hash=([0-9a-f]+),seed=(\d+)\s*$'
FLOAT_FORMAT = "%.17g"
TEXT_COLUMNS = ("mission", "method")
INT_COLUMNS = ("n_starts", "epoch")


def write_table(df: pd.DataFrame, path: str, header_comment: Optional[str] = None) -> str:
    """
    Write a CSV artifact.

    Args:
        df: Table to write
        path: Destination file
        header_comment: Leading '# ...' line (config hash and seed)

    Returns:
        The path written
    """
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as f:
        if header_comment:
            f.write(f"# {header_comment}\n")
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {path}")
    return path


def read_artifact_header(path: str) -> Dict[str, str]:
    """Parse the '# config_hash=...,seed=...' line of an artifact (empty dict if absent)."""
    try:
        with open(path) as f:
            first = f.readline()
    except OSError as e:
        raise NavDataError(f"Cannot read {path}: {e}") from e
    match = re.match(HEADER_PATTERN, first.strip())
    if not match:
        return {}
    return {'config_hash': match.group(1), 'seed': match.group(2)}


def header_from(info: Dict[str, str]) -> Optional[str]:
    if not info:
        return None
    return f"config_hash={info['config_hash']},seed={info['seed']}"


def read_table(path: str) -> pd.DataFrame:
    """
    Read a CSV artifact back with the dtypes it was written from.

    Identifier columns stay strings, count columns integers and every other
    column is float, so whole-number values such as a 30 s duration do not
    come back as int64. Values parse with round-trip precision.
    """
    try:
        df = pd.read_csv(path, comment="#", float_precision="round_trip")
    except FileNotFoundError as e:
        raise NavDataError(f"Missing table {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise NavDataError(f"Malformed table {path}: {e}") from e
    for col in df.columns:
        if col in TEXT_COLUMNS:
            df[col] = df[col].astype(str)
        elif col not in INT_COLUMNS:
            try:
                df[col] = df[col].astype(float)
            except (TypeError, ValueError) as e:
                raise NavDataError(f"{os.path.basename(path)}: non-numeric values in column '{col}'") from e
    return df


def load_scenarios(path: str) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """
    Load a per-scenario results CSV.

    Returns:
        (table, header) where header holds config_hash and seed when present
    """
    header = read_artifact_header(path)
    df = read_table(path)
    for col in SCENARIO_COLUMNS:
        if col not in df.columns:
            raise NavDataError(f"{os.path.basename(path)}: missing column '{col}'")
    if BASELINE not in set(df["method"]):
        raise NavDataError(f"{os.path.basename(path)}: no {BASELINE} rows to compare against")
    return df[SCENARIO_COLUMNS], header


def improvement_table(summary: pd.DataFrame) -> pd.DataFrame:
    """Long view (mission, duration, metric, improvement_pct) of a summary table."""
    rows = []
    for row in summary.itertuples(index=False):
        for metric in METRICS:
            column = f"{metric}_improvement_pct"
            if column in summary.columns:
                rows.append({
                    'mission': row.mission,
                    'duration': row.duration,
                    'metric': metric,
                    'improvement_pct': getattr(row, column),
                })
    return pd.DataFrame(rows, columns=['mission', 'duration', 'metric', 'improvement_pct'])


def extract_report(scenarios_path: str, out_dir: str, svg: bool = False,
                   method: str = "st_aided") -> Dict[str, str]:
    """
    Rebuild the summary CSV (and optional improvement charts) from a scenario CSV.

    Args:
        scenarios_path: Per-scenario CSV from `evaluate`
        out_dir: Directory for summary.csv and SVGs
        svg: Whether to render improvement bar charts
        method: Method compared against PureINS

    Returns:
        Mapping of artifact name to path
    """
    scenarios, header = load_scenarios(scenarios_path)
    if method not in set(scenarios["method"]):
        aided = [m for m in scenarios["method"].unique() if m != BASELINE]
        method = aided[0] if aided else None
    summary = summarize(scenarios, method)
    comment = header_from(header)

    paths = {'summary': write_table(summary, os.path.join(out_dir, "summary.csv"), comment)}
    if svg and method:
        from trajectory_visualizations import configure_svg, plot_improvement_bars

        configure_svg(header.get('config_hash', ''))
        improvements = improvement_table(summary)
        for metric in METRICS:
            paths[f"improvement_{metric}"] = plot_improvement_bars(
                improvements, metric, os.path.join(out_dir, f"improvement_{metric}.svg"))
    logger.info(f"Report rebuilt from {scenarios_path} ({len(summary)} cells)")
    return paths
