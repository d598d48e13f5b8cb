"""
Outage evaluation: ST-AidedEKF against PureINS.

A scenario is one (mission, outage start, outage duration). ScenarioTask runs
every configured method on it, and SweepRunner runs the tasks sequentially or
on a process pool and hands back results ordered by scenario index.
"""

import logging
import multiprocessing
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from .dvl_model import DvlMeasurement, apply_outage
from .ekf import EkfParams, ErrorStateEkf
from .errors import ConfigError, NavDataError
from .set_transformer import StHyperParams, StWeights, VelocityPredictor, network_predictor, predict_outage_sequence
from .sim_data import MissionRecord

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DEFAULT_DURATIONS = (30, 40, 50)
METRICS = ("vel_rmse", "pos_rmse", "afpe")
BASELINE = "pure_ins"
AIDED_METHODS = ("st_aided", "oracle", "persistence")
KNOWN_METHODS = (BASELINE,) + AIDED_METHODS
SCENARIO_COLUMNS = ["mission", "duration", "start", "method", "vel_rmse", "pos_rmse", "afpe"]


@dataclass(frozen=True)
class OutageScenario:
    mission_id: str
    t_init: float
    t_duration: float
    seed: int
    index: int = 0

    @property
    def t_end(self) -> float:
        return self.t_init + self.t_duration


@dataclass
class EvalParams:
    """Scenario sampling and metric windows."""

    durations: Tuple[float, ...] = DEFAULT_DURATIONS
    n_starts: int = 5
    t_warmup: float = 60.0
    end_margin: float = 5.0
    tail_s: float = 10.0
    r_inflation: float = 1.0
    methods: Tuple[str, ...] = ("st_aided", "pure_ins")

    def __post_init__(self):
        if self.n_starts < 1:
            raise ConfigError(f"n_starts must be >= 1, got {self.n_starts}")
        if any(d < 0 for d in self.durations):
            raise ConfigError(f"Outage durations must be non-negative, got {self.durations}")
        if self.r_inflation <= 0:
            raise ConfigError(f"r_inflation must be positive, got {self.r_inflation}")
        unknown = set(self.methods) - set(KNOWN_METHODS)
        if unknown:
            raise ConfigError(f"Unknown evaluation methods {sorted(unknown)} (expected {KNOWN_METHODS})")
        if BASELINE not in self.methods:
            raise ConfigError(f"The method list must include the {BASELINE} baseline")


@dataclass
class MethodResult:
    """Per-epoch estimates of one method plus its outage metrics."""

    method: str
    t: np.ndarray
    v_n: np.ndarray
    C_bn: np.ndarray
    p_n: np.ndarray
    trace_P: np.ndarray
    n_updates: int
    n_predicted_updates: int
    vel_rmse: float = float("nan")
    pos_rmse: float = float("nan")
    afpe: float = float("nan")

    def metrics(self) -> Dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}

    def sliced(self, lo: int, hi: int) -> "MethodResult":
        """Copy restricted to epochs [lo, hi)."""
        return replace(self, t=self.t[lo:hi].copy(), v_n=self.v_n[lo:hi].copy(), C_bn=self.C_bn[lo:hi].copy(),
                       p_n=self.p_n[lo:hi].copy(), trace_P=self.trace_P[lo:hi].copy())


@dataclass
class RunResult:
    scenario: OutageScenario
    methods: Dict[str, MethodResult] = field(default_factory=dict)
    gt_p_n: Optional[np.ndarray] = None
    window: Tuple[int, int] = (0, 0)

    def improvement(self, method: str = "st_aided") -> Dict[str, float]:
        base = self.methods[BASELINE]
        ours = self.methods[method]
        return {m: improvement_pct(getattr(base, m), getattr(ours, m)) for m in METRICS}

    def rows(self) -> List[dict]:
        s = self.scenario
        return [
            {"mission": s.mission_id, "duration": s.t_duration, "start": s.t_init, "method": name,
             **res.metrics()}
            for name, res in self.methods.items()
        ]


# ── metrics ────────────────────────────────────────────────────────────────

def velocity_rmse(est, gt) -> float:
    """sqrt(sum_i sum_j (x_ij - x^_ij)^2 / N) over N aligned 3-vectors."""
    est = np.atleast_2d(np.asarray(est, dtype=float))
    gt = np.atleast_2d(np.asarray(gt, dtype=float))
    if est.shape != gt.shape:
        raise NavDataError(f"RMSE inputs are not aligned: {est.shape} vs {gt.shape}")
    if len(est) == 0:
        raise NavDataError("RMSE needs at least one sample")
    return float(np.sqrt(np.sum((gt - est) ** 2) / len(est)))


def position_rmse(est, gt) -> float:
    return velocity_rmse(est, gt)


def afpe(p_final_est, p_final_gt) -> float:
    """Absolute final position error: mean absolute per-axis error."""
    return float(np.mean(np.abs(np.asarray(p_final_gt, dtype=float) - np.asarray(p_final_est, dtype=float))))


def improvement_pct(baseline: float, ours: float) -> float:
    """(baseline - ours) / baseline * 100."""
    if baseline == 0:
        return float("nan")
    return (baseline - ours) / baseline * 100.0


# ── filter runs ────────────────────────────────────────────────────────────

def _index_by_epoch(mission: MissionRecord, measurements: Sequence[DvlMeasurement]) -> Dict[int, DvlMeasurement]:
    rate = round(mission.imu.rate_hz)
    t0 = mission.imu.t[0]
    return {int(round((m.t - t0) * rate)): m for m in measurements}


def run_filter(mission: MissionRecord, dvl: Sequence[DvlMeasurement], R: np.ndarray,
               ekf_params: Optional[EkfParams] = None,
               predicted: Sequence[DvlMeasurement] = (), r_inflation: float = 1.0,
               method: str = "") -> MethodResult:
    """
    Run the EKF over the whole mission.

    Valid DVL epochs update with R; at epochs where the DVL is invalid and a
    predicted measurement exists, the prediction updates with r_inflation * R.
    """
    imu = mission.imu
    measured = _index_by_epoch(mission, [m for m in dvl if m.valid])
    surrogate = _index_by_epoch(mission, predicted)
    R_pred = np.asarray(R, dtype=float) * r_inflation

    ekf = ErrorStateEkf(mission.initial_state(), ekf_params, R)
    n = len(imu)
    v_n = np.empty((n, 3))
    C_bn = np.empty((n, 3, 3))
    p_n = np.empty((n, 3))
    trace_P = np.empty(n)
    n_predicted = 0

    for k in range(n):
        if k > 0:
            ekf.propagate(imu[k - 1], imu.t[k] - imu.t[k - 1])
        if k in measured:
            ekf.correct(measured[k].body_velocity)
        elif k in surrogate:
            ekf.correct(surrogate[k].body_velocity, R_pred)
            n_predicted += 1
        v_n[k] = ekf.state.v_n
        C_bn[k] = ekf.state.C_bn
        p_n[k] = ekf.state.p_n
        trace_P[k] = ekf.P.trace

    return MethodResult(method=method, t=imu.t.copy(), v_n=v_n, C_bn=C_bn, p_n=p_n, trace_P=trace_P,
                        n_updates=ekf.n_updates, n_predicted_updates=n_predicted)


def _outage_slices(mission: MissionRecord, scenario: OutageScenario, tail_s: float) -> Tuple[int, int, int]:
    """(k0, k_end, k_tail): outage epochs are [k0, k_end), position window [k0, k_tail]."""
    gt = mission.ground_truth
    rate = round(mission.imu.rate_hz)
    k0 = gt.index_of(scenario.t_init)
    k_end = min(k0 + max(1, int(round(scenario.t_duration * rate))), len(gt) - 1)
    k_tail = min(k_end + int(round(tail_s * rate)), len(gt) - 1)
    return k0, k_end, k_tail


def score(result: MethodResult, mission: MissionRecord, scenario: OutageScenario,
          tail_s: float = 10.0) -> MethodResult:
    """
    Fill the outage metrics of a filter run.

    Position is re-integrated from the ground-truth position at t_init so
    that every method starts the outage from the same anchor.
    """
    gt = mission.ground_truth
    k0, k_end, k_tail = _outage_slices(mission, scenario, tail_s)
    result.vel_rmse = velocity_rmse(result.v_n[k0:k_end], gt.v_n[k0:k_end])
    dt = 1.0 / round(mission.imu.rate_hz)
    p = gt.p_n[k0] + cumulative_trapezoid(result.v_n[k0:k_tail + 1], dx=dt, axis=0, initial=0)
    result.p_n = result.p_n.copy()
    result.p_n[k0:k_tail + 1] = p
    result.pos_rmse = position_rmse(p, gt.p_n[k0:k_tail + 1])
    result.afpe = afpe(p[k_end - k0], gt.p_n[k_end])
    return result


def _past_dvl(mission: MissionRecord, t_init: float, n: int) -> List[DvlMeasurement]:
    past = [m for m in mission.dvl if m.t < t_init - 1e-9]
    if len(past) < n or not all(m.valid for m in past[-n:]):
        raise NavDataError(f"Mission {mission.mission_id} lacks {n} valid DVL epochs before t={t_init}")
    return past[-n:]


def oracle_predictor(mission: MissionRecord) -> VelocityPredictor:
    """Returns the ground-truth body velocity at the requested epoch."""
    v_body = mission.ground_truth.body_velocity()
    gt = mission.ground_truth
    return lambda dvl_past, imu_past, t: v_body[gt.index_of(t)]


def persistence_predictor() -> VelocityPredictor:
    """Repeats the most recent DVL velocity."""
    return lambda dvl_past, imu_past, t: np.array(dvl_past[-1], dtype=float)


def run_aided(mission: MissionRecord, scenario: OutageScenario, predictor: VelocityPredictor,
              R: np.ndarray, ekf_params: Optional[EkfParams] = None, r_inflation: float = 1.0,
              method: str = "st_aided", tail_s: float = 10.0,
              hp: Optional[StHyperParams] = None) -> MethodResult:
    """Bridge the outage with `predictor` and feed its outputs as DVL updates."""
    hp = hp or StHyperParams.preset("toy")
    stream = apply_outage(mission.dvl, scenario.t_init, scenario.t_duration)
    predicted = []
    if scenario.t_duration > 0:
        predicted = predict_outage_sequence(_past_dvl(mission, scenario.t_init, hp.n_dvl), mission.imu, None,
                                            scenario.t_init, scenario.t_duration, predictor=predictor, hp=hp)
    result = run_filter(mission, stream, R, ekf_params, predicted, r_inflation, method)
    return score(result, mission, scenario, tail_s)


def run_st_aided(mission: MissionRecord, scenario: OutageScenario, weights: StWeights, R: np.ndarray,
                 ekf_params: Optional[EkfParams] = None, r_inflation: float = 1.0,
                 tail_s: float = 10.0) -> MethodResult:
    """ST-AidedEKF: network predictions replace the missing DVL epochs."""
    return run_aided(mission, scenario, network_predictor(weights), R, ekf_params, r_inflation,
                     "st_aided", tail_s, weights.hp)


def run_pure_ins(mission: MissionRecord, scenario: OutageScenario, R: np.ndarray,
                 ekf_params: Optional[EkfParams] = None, tail_s: float = 10.0) -> MethodResult:
    """PureINS: prediction only while the DVL is out."""
    stream = apply_outage(mission.dvl, scenario.t_init, scenario.t_duration)
    result = run_filter(mission, stream, R, ekf_params, method=BASELINE)
    return score(result, mission, scenario, tail_s)


def run_reference(mission: MissionRecord, scenario: OutageScenario, R: np.ndarray,
                  ekf_params: Optional[EkfParams] = None, tail_s: float = 10.0) -> MethodResult:
    """The same filter with no outage, scored on the scenario's window."""
    result = run_filter(mission, mission.dvl, R, ekf_params, method="no_outage")
    return score(result, mission, scenario, tail_s)


# ── scenario sampling ──────────────────────────────────────────────────────

def sample_start_times(mission: MissionRecord, t_duration: float, n_starts: int, seed: int,
                       mission_index: int = 0, t_warmup: float = 60.0,
                       end_margin: float = 5.0) -> List[float]:
    """Integer start times, uniform over [t_warmup, T - t_duration - end_margin]."""
    lo = int(np.ceil(t_warmup))
    hi = int(np.floor(mission.duration - t_duration - end_margin))
    if hi < lo:
        raise NavDataError(f"Mission {mission.mission_id} ({mission.duration:.0f} s) is too short for a "
                           f"{t_duration:.0f} s outage after {t_warmup:.0f} s of warm-up")
    rng = np.random.default_rng([seed, mission_index, int(round(t_duration))])
    return [float(t) for t in rng.integers(lo, hi + 1, size=n_starts)]


def build_scenarios(missions: Dict[str, MissionRecord], params: EvalParams, seed: int) -> List[OutageScenario]:
    scenarios = []
    for m_idx, (mission_id, mission) in enumerate(missions.items()):
        for duration in params.durations:
            starts = sample_start_times(mission, duration, params.n_starts, seed, m_idx,
                                        params.t_warmup, params.end_margin)
            for t_init in starts:
                scenarios.append(OutageScenario(mission_id, t_init, float(duration), seed, len(scenarios)))
    return scenarios


# ── orchestration ──────────────────────────────────────────────────────────

class ScenarioTask:
    """One outage scenario evaluated for every configured method."""

    def __init__(self, scenario: OutageScenario, methods: Sequence[str] = ("st_aided", "pure_ins")):
        self.scenario = scenario
        self.methods = tuple(methods)
        self.description = (f"{scenario.mission_id}: {scenario.t_duration:.0f} s outage "
                            f"at t={scenario.t_init:.0f} s")

    def execute(self, context: dict) -> RunResult:
        """
        Run the scenario.

        Args:
            context: Shared inputs: missions, weights, R, ekf_params, eval_params

        Returns:
            RunResult with one MethodResult per method
        """
        s = self.scenario
        mission = context["missions"][s.mission_id]
        R = context["R"]
        ekf_params = context.get("ekf_params")
        params: EvalParams = context.get("eval_params") or EvalParams()

        result = RunResult(scenario=s)
        for method in self.methods:
            if method == BASELINE:
                res = run_pure_ins(mission, s, R, ekf_params, params.tail_s)
            elif method == "st_aided":
                weights = context.get("weights")
                if weights is None:
                    raise ConfigError("st_aided evaluation needs trained weights")
                res = run_st_aided(mission, s, weights, R, ekf_params, params.r_inflation, params.tail_s)
            elif method == "oracle":
                res = run_aided(mission, s, oracle_predictor(mission), R, ekf_params,
                                params.r_inflation, "oracle", params.tail_s)
            elif method == "persistence":
                res = run_aided(mission, s, persistence_predictor(), R, ekf_params,
                                params.r_inflation, "persistence", params.tail_s)
            else:
                raise ConfigError(f"Unknown method {method}")
            result.methods[method] = res
        k0, _, k_tail = _outage_slices(mission, s, params.tail_s)
        if not context.get("keep_full_runs"):
            result.methods = {name: res.sliced(k0, k_tail + 1) for name, res in result.methods.items()}
        result.gt_p_n = mission.ground_truth.p_n[k0:k_tail + 1]
        result.window = (k0, k_tail)
        return result


_WORKER_CONTEXT: dict = {}


def _init_worker(context: dict):
    _WORKER_CONTEXT.clear()
    _WORKER_CONTEXT.update(context)


def _execute_in_worker(task: ScenarioTask) -> RunResult:
    return task.execute(_WORKER_CONTEXT)


class SweepRunner:
    """Runs ScenarioTasks sequentially or on a process pool."""

    def __init__(self, mode: str = 'sequential', workers: Optional[int] = None,
                 progress_callback: Optional[Callable[[str, str, int, int], None]] = None):
        """
        Initialize the runner.

        Args:
            mode: Execution mode ('sequential' or 'parallel')
            workers: Process count for parallel mode (default: available cores)
            progress_callback: Optional callback function to report progress
                               Args: task_id, status, current_task_index, total_tasks
        """
        if mode not in ('sequential', 'parallel'):
            raise ConfigError(f"Unsupported mode: {mode}")
        self.mode = mode
        self.workers = workers or multiprocessing.cpu_count()
        self.tasks: Dict[str, ScenarioTask] = {}
        self.outputs: Dict[str, RunResult] = {}
        self.execution_log: List[str] = []
        self.progress_callback = progress_callback
        self.task_status: Dict[str, str] = {}

        logger.info(f"SweepRunner initialized in {mode} mode")

    def add_task(self, task_id: str, task: ScenarioTask):
        self.tasks[task_id] = task

    def _log_execution(self, message: str):
        self.execution_log.append(message)
        logger.info(message)

    def _update_progress(self, task_id: str, status: str, index: int, total: int):
        self.task_status[task_id] = status
        if self.progress_callback:
            self.progress_callback(task_id, status, index, total)

    def run_sequential(self, context: dict) -> Dict[str, RunResult]:
        self._log_execution(f"Starting sequential sweep of {len(self.tasks)} scenarios")
        start = time.perf_counter()
        total = len(self.tasks)
        for i, (task_id, task) in enumerate(self.tasks.items()):
            self._update_progress(task_id, 'running', i, total)
            try:
                self.outputs[task_id] = task.execute(context)
            except Exception as e:
                self._log_execution(f"Error executing scenario {task_id}: {e}")
                self._update_progress(task_id, 'error', i, total)
                raise
            self._log_execution(f"Scenario {task_id} completed ({task.description})")
            self._update_progress(task_id, 'completed', i, total)
        self._log_execution(f"Sequential sweep completed in {time.perf_counter() - start:.2f} seconds")
        return self.outputs

    def run_parallel(self, context: dict) -> Dict[str, RunResult]:
        """Process pool; results are collected in task order."""
        items = list(self.tasks.items())
        total = len(items)
        self._log_execution(f"Starting parallel sweep of {total} scenarios on {self.workers} workers")
        start = time.perf_counter()
        with multiprocessing.Pool(self.workers, initializer=_init_worker, initargs=(context,)) as pool:
            for i, result in enumerate(pool.imap(_execute_in_worker, [task for _, task in items])):
                task_id = items[i][0]
                self.outputs[task_id] = result
                self._log_execution(f"Scenario {task_id} completed ({items[i][1].description})")
                self._update_progress(task_id, 'completed', i, total)
        self._log_execution(f"Parallel sweep completed in {time.perf_counter() - start:.2f} seconds")
        return self.outputs

    def run(self, context: dict) -> Dict[str, RunResult]:
        if self.mode == 'parallel' and self.workers > 1 and len(self.tasks) > 1:
            return self.run_parallel(context)
        return self.run_sequential(context)

    def get_execution_log(self) -> List[str]:
        return self.execution_log


# ── aggregation ────────────────────────────────────────────────────────────

def results_frame(results: Sequence[RunResult]) -> pd.DataFrame:
    """Per-scenario long table ordered by scenario index."""
    rows = [row for r in sorted(results, key=lambda r: r.scenario.index) for row in r.rows()]
    return pd.DataFrame(rows, columns=SCENARIO_COLUMNS)


def aggregate(scenarios: pd.DataFrame) -> pd.DataFrame:
    """Mean of each metric per mission x duration x method."""
    return (scenarios.groupby(["mission", "duration", "method"], sort=False)[list(METRICS)]
            .mean().reset_index())


def summarize(scenarios: pd.DataFrame, method: Optional[str] = "st_aided") -> pd.DataFrame:
    """
    One row per mission x duration with every method's mean metrics and the
    improvement of `method` over the PureINS baseline.
    """
    cells = aggregate(scenarios)
    wide = cells.pivot_table(index=["mission", "duration"], columns="method", values=list(METRICS), sort=False)
    wide.columns = [f"{metric}_{m}" for metric, m in wide.columns]
    wide = wide.reset_index()
    counts = scenarios[scenarios["method"] == BASELINE].groupby(["mission", "duration"], sort=False).size()
    wide.insert(2, "n_starts", [int(counts.loc[(r.mission, r.duration)]) for r in wide.itertuples()])
    if method and f"vel_rmse_{method}" in wide.columns:
        for metric in METRICS:
            wide[f"{metric}_improvement_pct"] = [
                improvement_pct(b, o) for b, o in zip(wide[f"{metric}_{BASELINE}"], wide[f"{metric}_{method}"])
            ]
    return wide


@dataclass
class SweepReport:
    results: List[RunResult]
    scenarios: pd.DataFrame
    summary: pd.DataFrame
    execution_log: List[str] = field(default_factory=list)


def sweep(missions: Dict[str, MissionRecord], params: EvalParams, seed: int, R: np.ndarray,
          weights: Optional[StWeights] = None, ekf_params: Optional[EkfParams] = None,
          mode: str = 'sequential', workers: Optional[int] = None,
          progress_callback: Optional[Callable[[str, str, int, int], None]] = None) -> SweepReport:
    """
    Evaluate every mission x duration x seeded start time.

    Args:
        missions: Evaluation missions keyed by id (order fixes the seeding)
        params: Durations, start count, metric windows, methods
        seed: Seed for start-time sampling
        R: Nominal DVL measurement covariance
        weights: Trained network (required for st_aided)
        ekf_params: Filter tuning
        mode: 'sequential' or 'parallel'
        workers: Pool size for parallel mode
        progress_callback: Optional (task_id, status, index, total) callback

    Returns:
        SweepReport with per-scenario rows and the per-cell summary
    """
    scenarios = build_scenarios(missions, params, seed)
    runner = SweepRunner(mode, workers, progress_callback)
    for s in scenarios:
        runner.add_task(f"S{s.index:04d}", ScenarioTask(s, params.methods))

    context = {"missions": missions, "weights": weights, "R": np.asarray(R, dtype=float),
               "ekf_params": ekf_params, "eval_params": params}
    outputs = runner.run(context)
    results = [outputs[task_id] for task_id in runner.tasks]
    table = results_frame(results)
    method = next((m for m in AIDED_METHODS if m in params.methods), None)
    return SweepReport(results, table, summarize(table, method), runner.get_execution_log())
