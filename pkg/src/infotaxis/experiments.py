"""Monte Carlo campaigns: parameter sweeps, mismatch studies, density maps.

Runs are embarrassingly parallel: every (value index, run index) pair is
assigned its seed up front, workers can execute in any order, and the
aggregation is a pure reduction, so results are bitwise identical for
any worker count.  Aborted runs (numerical faults) are counted but
excluded from success-rate and timing statistics.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .env_model import Cell, GridSpec, correlation_length, mean_field
from .policy import HARD_CAP
from .search import (ABORTED, FAIL_TYPE_I, FAIL_TYPE_II, SUCCESS,
                     SearchConfig, SearchOutcome, run_search)

SWEEP_PARAMETERS = (
    "D_real_and_agent",
    "V_real_and_agent",
    "gamma_real_and_agent",
    "lambda_agent_over_lambda_real",
    "gamma_agent_over_gamma_real",
    "k_max",
)

# default value grids, also used by the CLI experiment presets
D_SWEEP_VALUES = (0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0)
V_SWEEP_VALUES = (0.0, 0.5, 1.0, 1.5)
GAMMA_SWEEP_VALUES = (0.2, 0.5, 1.0, 2.0, 5.0)
LAMBDA_RATIOS = (0.04, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0)
GAMMA_RATIOS = (0.1, 0.5, 1.0, 2.0, 2.5, 3.5)
KMAX_SWEEP_VALUES = (1, 2, 5, 10, 20)
WIND_STARTS = ((0, -47), (47, 0))

FIRST_STEP_BINS = ("down", "leftright", "up", "stay")

CSV_HEADER_COMMENT = "# infotaxis sweep format v1"
CSV_COLUMNS = ("value,n_runs,n_success,n_type1,n_type2,n_aborted,"
               "success_rate,mean_time_success,std_time_success,"
               "mean_time_all,first_step_mode")


@dataclass(frozen=True)
class SweepSpec:
    base: SearchConfig
    swept_parameter: str
    values: tuple
    runs_per_value: int = 100
    seed_base: int = 0

    def __post_init__(self):
        if self.swept_parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"unknown swept parameter {self.swept_parameter!r}")
        if len(self.values) == 0:
            raise ValueError("values must be non-empty")
        if self.runs_per_value < 1:
            raise ValueError("runs_per_value must be >= 1")


@dataclass(frozen=True)
class RunRecord:
    status: str
    search_time: int
    first_step: str | None
    detections_total: int
    min_distance_to_source: float


@dataclass
class ValueStats:
    value: float
    n_runs: int
    n_success: int
    n_type_I: int
    n_type_II: int
    n_aborted: int
    mean_time_success: float
    std_time_success: float
    mean_time_all: float
    first_step_histogram: dict
    first_step_mode: str

    @property
    def success_rate(self) -> float:
        counted = self.n_runs - self.n_aborted
        return self.n_success / counted if counted else math.nan


@dataclass
class SweepResult:
    swept_parameter: str
    rows: list


def derive_seed(seed_base: int, value_index: int, run_index: int) -> int:
    """Stable per-run seed; independent of execution order and platform."""
    ss = np.random.SeedSequence((seed_base, value_index, run_index))
    return int(ss.generate_state(1, np.uint64)[0])


def config_for_value(base: SearchConfig, parameter: str, value) -> SearchConfig:
    """Concrete search configuration at one swept-parameter value."""
    if parameter == "D_real_and_agent":
        return replace(base,
                       params_real=replace(base.params_real, D=float(value)),
                       params_agent=replace(base.params_agent, D=float(value)))
    if parameter == "V_real_and_agent":
        return replace(base,
                       params_real=replace(base.params_real, V=float(value)),
                       params_agent=replace(base.params_agent, V=float(value)))
    if parameter == "gamma_real_and_agent":
        return replace(base,
                       params_real=replace(base.params_real, gamma=float(value)),
                       params_agent=replace(base.params_agent, gamma=float(value)))
    if parameter == "lambda_agent_over_lambda_real":
        if base.params_agent.V != 0.0:
            raise ValueError("lambda mismatch is realized through D_agent "
                             "at V = 0; set the agent wind to zero")
        lam_agent = float(value) * correlation_length(base.params_real)
        d_agent = lam_agent ** 2 / base.params_agent.eta
        try:
            params_agent = replace(base.params_agent, D=d_agent)
        except ValueError as exc:
            raise ValueError(
                f"lambda ratio {value} implies an invalid agent model: {exc}"
            ) from exc
        return replace(base, params_agent=params_agent)
    if parameter == "gamma_agent_over_gamma_real":
        gamma_agent = float(value) * base.params_real.gamma
        return replace(base,
                       params_agent=replace(base.params_agent, gamma=gamma_agent))
    if parameter == "k_max":
        policy = replace(base.policy, truncation=HARD_CAP, k_max=int(value))
        return replace(base, policy=policy)
    raise ValueError(f"unknown swept parameter {parameter!r}")


def resolve_workers(n_workers: int | None = None) -> int:
    if n_workers is not None:
        return max(1, int(n_workers))
    env = os.environ.get("INFOTAXIS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _record_of(outcome: SearchOutcome) -> RunRecord:
    return RunRecord(outcome.status, outcome.search_time, outcome.first_step,
                     outcome.detections_total, outcome.min_distance_to_source)


def _run_record(cfg: SearchConfig) -> RunRecord:
    return _record_of(run_search(cfg))


def _map_jobs(fn, configs: list, n_workers: int) -> list:
    if n_workers == 1 or len(configs) <= 1:
        return [fn(cfg) for cfg in configs]
    chunk = max(1, len(configs) // (4 * n_workers))
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, configs, chunksize=chunk))


def _first_step_bin(step: str | None) -> str | None:
    if step is None:
        return None
    return "leftright" if step in ("left", "right") else step


def _aggregate(value, records: list) -> ValueStats:
    n = len(records)
    succ = [r.search_time for r in records if r.status == SUCCESS]
    n_type_i = sum(r.status == FAIL_TYPE_I for r in records)
    n_type_ii = sum(r.status == FAIL_TYPE_II for r in records)
    n_aborted = sum(r.status == ABORTED for r in records)
    all_times = [r.search_time for r in records if r.status != ABORTED]
    hist = {b: 0 for b in FIRST_STEP_BINS}
    for r in records:
        b = _first_step_bin(r.first_step)
        if b is not None:
            hist[b] += 1
    mode = max(FIRST_STEP_BINS, key=lambda b: hist[b])
    return ValueStats(
        value=value,
        n_runs=n,
        n_success=len(succ),
        n_type_I=n_type_i,
        n_type_II=n_type_ii,
        n_aborted=n_aborted,
        mean_time_success=float(np.mean(succ)) if succ else math.nan,
        std_time_success=float(np.std(succ)) if succ else math.nan,
        mean_time_all=float(np.mean(all_times)) if all_times else math.nan,
        first_step_histogram=hist,
        first_step_mode=mode,
    )


def run_sweep(spec: SweepSpec, n_workers: int | None = None) -> SweepResult:
    """Run every (value, seed) job and aggregate per-value statistics."""
    workers = resolve_workers(n_workers)
    # derive every configuration up front so invalid values fail early
    per_value = [config_for_value(spec.base, spec.swept_parameter, v)
                 for v in spec.values]
    configs = [replace(cfg, seed=derive_seed(spec.seed_base, j, i))
               for j, cfg in enumerate(per_value)
               for i in range(spec.runs_per_value)]
    records = _map_jobs(_run_record, configs, workers)
    rows = []
    for j, value in enumerate(spec.values):
        chunk = records[j * spec.runs_per_value:(j + 1) * spec.runs_per_value]
        rows.append(_aggregate(value, chunk))
    return SweepResult(spec.swept_parameter, rows)


# --- named campaigns with their customary configurations ---------------

def sweep_diffusion(values=D_SWEEP_VALUES, base: SearchConfig | None = None,
                    runs_per_value: int = 100, seed_base: int = 0,
                    n_workers: int | None = None) -> SweepResult:
    """Matched-model sweep of the diffusivity at zero wind."""
    base = base or SearchConfig()
    spec = SweepSpec(base, "D_real_and_agent", tuple(values),
                     runs_per_value, seed_base)
    return run_sweep(spec, n_workers)


def sweep_wind(values=V_SWEEP_VALUES, starts=WIND_STARTS,
               base: SearchConfig | None = None, runs_per_value: int = 100,
               seed_base: int = 0,
               n_workers: int | None = None) -> tuple[SweepResult, ...]:
    """Matched-model wind sweep, one result per starting position."""
    base = base or SearchConfig()
    results = []
    for start in starts:
        spec = SweepSpec(replace(base, r_start=tuple(start)),
                         "V_real_and_agent", tuple(values),
                         runs_per_value, seed_base)
        results.append(run_sweep(spec, n_workers))
    return tuple(results)


def sweep_gamma(values=GAMMA_SWEEP_VALUES, V: float = 0.0,
                base: SearchConfig | None = None, runs_per_value: int = 100,
                seed_base: int = 0,
                n_workers: int | None = None) -> SweepResult:
    """Matched-model emission-rate sweep at a fixed wind speed."""
    base = base or SearchConfig()
    base = replace(base,
                   params_real=replace(base.params_real, V=V),
                   params_agent=replace(base.params_agent, V=V))
    spec = SweepSpec(base, "gamma_real_and_agent", tuple(values),
                     runs_per_value, seed_base)
    return run_sweep(spec, n_workers)


def mismatch_lambda(ratios=LAMBDA_RATIOS, base: SearchConfig | None = None,
                    runs_per_value: int = 100, seed_base: int = 0,
                    n_workers: int | None = None) -> SweepResult:
    """Sweep of the agent's assumed correlation length, via its diffusivity."""
    base = base or SearchConfig()
    spec = SweepSpec(base, "lambda_agent_over_lambda_real", tuple(ratios),
                     runs_per_value, seed_base)
    return run_sweep(spec, n_workers)


def mismatch_gamma(ratios=GAMMA_RATIOS, gamma_real: float = 1.0,
                   base: SearchConfig | None = None,
                   runs_per_value: int = 100, seed_base: int = 0,
                   n_workers: int | None = None) -> SweepResult:
    """Sweep of the agent's assumed emission rate relative to the true one."""
    base = base or SearchConfig()
    base = replace(base,
                   params_real=replace(base.params_real, gamma=gamma_real),
                   params_agent=replace(base.params_agent, gamma=gamma_real))
    spec = SweepSpec(base, "gamma_agent_over_gamma_real", tuple(ratios),
                     runs_per_value, seed_base)
    return run_sweep(spec, n_workers)


# --- density maps -------------------------------------------------------

@dataclass
class DensityMap:
    counts: np.ndarray          # (height, width) visit counts
    n_trajectories: int

    def normalized(self) -> np.ndarray:
        m = self.counts.max()
        if m <= 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / m


@dataclass
class DensityCampaign:
    map: DensityMap
    field: np.ndarray           # mean detection-rate field of the true model
    outcomes: list


def density_map(trajectories, grid: GridSpec) -> DensityMap:
    """Aggregate visit counts of a set of (n, 2) trajectory arrays."""
    counts = np.zeros((grid.height, grid.width), dtype=np.int64)
    n = 0
    for traj in trajectories:
        t = np.asarray(traj)
        np.add.at(counts,
                  (t[:, 1] + grid.height // 2, t[:, 0] + grid.width // 2), 1)
        n += 1
    return DensityMap(counts, n)


def run_density_campaign(base: SearchConfig, n_traj: int = 200,
                         which: str = "successful", seed_base: int = 0,
                         n_workers: int | None = None) -> DensityCampaign:
    """Run n_traj searches and map the visited sites of the selected subset.

    which: "successful", "unsuccessful" (both failure types) or "all"
    (every run that did not abort).
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    selectors = {
        "successful": lambda o: o.status == SUCCESS,
        "unsuccessful": lambda o: o.status in (FAIL_TYPE_I, FAIL_TYPE_II),
        "all": lambda o: o.status != ABORTED,
    }
    if which not in selectors:
        raise ValueError(f"unknown trajectory filter {which!r}")
    configs = [replace(base, seed=derive_seed(seed_base, 0, i))
               for i in range(n_traj)]
    workers = resolve_workers(n_workers)
    outcomes = _map_jobs(run_search, configs, workers)
    selected = [o.trajectory for o in outcomes if selectors[which](o)]
    dmap = density_map(selected, base.grid)
    field = mean_field(base.r_source, base.grid, base.params_real)
    return DensityCampaign(dmap, field, outcomes)


# --- artifact writers ----------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def sweep_csv_text(result: SweepResult) -> str:
    lines = [CSV_HEADER_COMMENT, CSV_COLUMNS]
    for row in result.rows:
        lines.append(",".join([
            _fmt(row.value),
            str(row.n_runs),
            str(row.n_success),
            str(row.n_type_I),
            str(row.n_type_II),
            str(row.n_aborted),
            _fmt(float(row.success_rate)),
            _fmt(row.mean_time_success),
            _fmt(row.std_time_success),
            _fmt(row.mean_time_all),
            row.first_step_mode,
        ]))
    return "\n".join(lines) + "\n"


def write_sweep_csv(result: SweepResult, path) -> None:
    with open(path, "w") as fh:
        fh.write(sweep_csv_text(result))


def matrix_text(values: np.ndarray) -> str:
    """Plain-text matrix, largest y first; integers stay integers."""
    arr = np.asarray(values)
    if np.issubdtype(arr.dtype, np.integer):
        fmt = "{:d}".format
    else:
        fmt = "{:.10e}".format
    rows = []
    for iy in range(arr.shape[0] - 1, -1, -1):
        rows.append(" ".join(fmt(v) for v in arr[iy]))
    return "\n".join(rows) + "\n"


def write_matrix(values: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write(matrix_text(values))


def pgm_text(values: np.ndarray) -> str:
    """8-bit ASCII PGM (P2), scaled by the matrix maximum, largest y on top."""
    arr = np.asarray(values, dtype=float)
    m = arr.max()
    if m > 0:
        scaled = np.rint(255.0 * arr / m).astype(int)
    else:
        scaled = np.zeros(arr.shape, dtype=int)
    h, w = arr.shape
    lines = ["P2", f"{w} {h}", "255"]
    for iy in range(h - 1, -1, -1):
        lines.append(" ".join(str(v) for v in scaled[iy]))
    return "\n".join(lines) + "\n"


def write_pgm(values: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write(pgm_text(values))
