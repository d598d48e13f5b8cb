"""
SVG figures: North-East trajectories, improvement bars and loss curves.

Figures are written without creation dates and with a fixed SVG id salt so
that identical inputs give byte-identical files.
"""

import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from aided_nav.eval_runner import BASELINE, RunResult  # noqa: E402

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

METHOD_STYLES = {
    'st_aided': {'label': 'ST-AidedEKF', 'color': '#1E88E5', 'linestyle': '-'},
    BASELINE: {'label': 'PureINS', 'color': '#E53935', 'linestyle': '--'},
    'oracle': {'label': 'Oracle-aided', 'color': '#43A047', 'linestyle': ':'},
    'persistence': {'label': 'Persistence-aided', 'color': '#FB8C00', 'linestyle': '-.'},
}
METRIC_LABELS = {
    'vel_rmse': 'Velocity RMSE',
    'pos_rmse': 'Position RMSE',
    'afpe': 'AFPE',
}


def configure_svg(hash_salt: str):
    """Deterministic SVG element ids."""
    plt.rcParams['svg.hashsalt'] = hash_salt or 'aided-nav'


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info(f"Saved figure {path}")
    return path


def plot_trajectory_ne(result: RunResult, path: str) -> str:
    """
    North-East track of the scenario window: ground truth, every method and
    the outage start marker.
    """
    s = result.scenario
    fig, ax = plt.subplots(figsize=(6, 5))
    gt = result.gt_p_n
    ax.plot(gt[:, 1], gt[:, 0], color='black', linewidth=1.5, label='GT')
    for name, res in result.methods.items():
        style = METHOD_STYLES.get(name, {'label': name, 'color': None, 'linestyle': '-'})
        p = res.p_n
        if len(p) != len(gt):
            k0, k_tail = result.window
            p = p[k0:k_tail + 1]
        ax.plot(p[:, 1], p[:, 0], color=style['color'], linestyle=style['linestyle'], label=style['label'])
    ax.plot(gt[0, 1], gt[0, 0], marker='o', color='black', markersize=7, linestyle='none', label='Start')
    ax.set_xlabel('East [m]')
    ax.set_ylabel('North [m]')
    ax.set_title(f"{s.mission_id}: {s.t_duration:.0f} s outage at t={s.t_init:.0f} s")
    ax.set_aspect('equal', adjustable='datalim')
    ax.grid(True, alpha=0.3)
    ax.legend(loc='best')
    return _save(fig, path)


def plot_improvement_bars(improvements: pd.DataFrame, metric: str, path: str) -> str:
    """Grouped bars: one group per outage duration, one bar per mission."""
    data = improvements[improvements['metric'] == metric]
    durations = sorted(data['duration'].unique())
    missions = list(dict.fromkeys(data['mission']))
    width = 0.8 / max(len(missions), 1)
    x = np.arange(len(durations))

    fig, ax = plt.subplots(figsize=(7, 4))
    for i, mission in enumerate(missions):
        rows = data[data['mission'] == mission].set_index('duration')
        values = [rows['improvement_pct'].get(d, np.nan) for d in durations]
        ax.bar(x + (i - (len(missions) - 1) / 2) * width, values, width, label=mission)
    ax.axhline(0.0, color='black', linewidth=0.8)
    ax.set_xticks(x)
    ax.set_xticklabels([f"{d:.0f} s" for d in durations])
    ax.set_xlabel('Outage duration')
    ax.set_ylabel('Improvement over PureINS [%]')
    ax.set_title(f"{METRIC_LABELS.get(metric, metric)} improvement")
    ax.grid(True, axis='y', alpha=0.3)
    ax.legend(loc='best')
    return _save(fig, path)


def plot_loss_history(history: pd.DataFrame, path: str) -> str:
    """Training and validation MSE per epoch, with the persistence baseline."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(history['epoch'], history['train_loss'], label='train')
    ax.plot(history['epoch'], history['val_loss'], label='validation')
    if 'persistence_val_loss' in history.columns:
        ax.axhline(history['persistence_val_loss'].iloc[0], color='gray', linestyle='--',
                   label='persistence (validation)')
    ax.set_yscale('log')
    ax.set_xlabel('Epoch')
    ax.set_ylabel('MSE [(m/s)^2]')
    ax.grid(True, alpha=0.3)
    ax.legend(loc='best')
    return _save(fig, path)
