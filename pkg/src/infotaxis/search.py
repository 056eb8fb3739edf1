"""One complete infotactic search with first-hit termination.

Each step: sense a Poisson detection count at the current cell (drawn
from the true environment), update the belief with the agent's own
model, then either stop or move.  The search stops as soon as the
belief entropy falls below the threshold; it is a success when the
belief maximum sits exactly on the true source, a type I failure when
it sits elsewhere, and a type II failure when the step budget runs out
first.  A numerically degenerate update aborts the run, which is
reported as its own status and never folded into the failure taxonomy.

The very first sensing event can be forced to a single detection, in
which case the first move is a deterministic function of the
configuration (no randomness has entered the decision yet).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .belief import (BeliefGrid, BeliefUpdateError, argmax, bayes_update,
                     entropy, init_uniform)
from .env_model import Cell, EnvParams, GridSpec, rate_table
from .policy import MOVES, PolicyConfig, choose_move

SUCCESS = "success"
FAIL_TYPE_I = "fail_type_I"
FAIL_TYPE_II = "fail_type_II"
ABORTED = "aborted"


@dataclass(frozen=True)
class SearchConfig:
    grid: GridSpec = GridSpec()
    params_real: EnvParams = EnvParams()
    params_agent: EnvParams = EnvParams()
    r_source: Cell = (0, 35)
    r_start: Cell = (0, -47)
    dt: float = 1.0
    entropy_threshold: float = 1e-4
    max_steps: int = 10000
    policy: PolicyConfig = PolicyConfig()
    forced_initial_detection: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.grid.contains(self.r_source):
            raise ValueError(f"source {self.r_source} outside grid")
        if not self.grid.contains(self.r_start):
            raise ValueError(f"start {self.r_start} outside grid")
        if not self.entropy_threshold > 0:
            raise ValueError("entropy_threshold must be > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")


@dataclass
class SearchOutcome:
    status: str
    search_time: int
    trajectory: np.ndarray          # (n, 2) int cells (x, y), start included
    first_step: str | None          # None if the search ended before moving
    final_entropy: float
    final_argmax: Cell
    final_argmax_tie: bool
    detections_total: int
    min_distance_to_source: float   # Euclidean, in cell units
    detections: np.ndarray = field(repr=False, default=None)
    entropies: np.ndarray = field(repr=False, default=None)


def _distance(a: Cell, b: Cell) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def run_search(cfg: SearchConfig) -> SearchOutcome:
    """Run a single search to termination. Deterministic given cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    tables_real = rate_table(cfg.params_real, cfg.grid, cfg.dt)
    belief = init_uniform(cfg.grid)
    pos = cfg.r_start
    trajectory = [pos]
    detections: list[int] = []
    entropies: list[float] = []
    first_step: str | None = None
    total = 0
    min_dist = _distance(pos, cfg.r_source)
    status = None
    time = cfg.max_steps

    for step in range(1, cfg.max_steps + 1):
        if step == 1 and cfg.forced_initial_detection:
            k = 1
        else:
            k = int(rng.poisson(tables_real.rate_dt(pos, cfg.r_source)))
        try:
            belief = bayes_update(belief, pos, k, cfg.params_agent, cfg.dt)
        except BeliefUpdateError:
            status = ABORTED
            time = step
            break
        total += k
        detections.append(k)
        s = entropy(belief)
        entropies.append(s)
        if s < cfg.entropy_threshold:
            peak = argmax(belief)
            status = (SUCCESS if not peak.tie and peak.cell == cfg.r_source
                      else FAIL_TYPE_I)
            time = step
            break
        if step == cfg.max_steps:
            status = FAIL_TYPE_II
            break
        try:
            move = choose_move(belief, pos, cfg.grid, cfg.params_agent,
                               cfg.dt, cfg.policy)
        except BeliefUpdateError:
            status = ABORTED
            time = step
            break
        if first_step is None:
            first_step = move
        dx, dy = MOVES[move]
        pos = (pos[0] + dx, pos[1] + dy)
        trajectory.append(pos)
        min_dist = min(min_dist, _distance(pos, cfg.r_source))

    peak = argmax(belief)
    return SearchOutcome(
        status=status,
        search_time=time,
        trajectory=np.array(trajectory, dtype=np.int32),
        first_step=first_step,
        final_entropy=entropy(belief),
        final_argmax=peak.cell,
        final_argmax_tie=peak.tie,
        detections_total=total,
        min_distance_to_source=min_dist,
        detections=np.array(detections, dtype=np.int32),
        entropies=np.array(entropies),
    )


def first_step(cfg: SearchConfig) -> str:
    """Move chosen after the first sensing event, without running the search.

    With forced_initial_detection this is seed-independent: the belief
    after the forced single detection is a pure function of the config.
    """
    if cfg.forced_initial_detection:
        k = 1
    else:
        rng = np.random.default_rng(cfg.seed)
        tables_real = rate_table(cfg.params_real, cfg.grid, cfg.dt)
        k = int(rng.poisson(tables_real.rate_dt(cfg.r_start, cfg.r_source)))
    belief = bayes_update(init_uniform(cfg.grid), cfg.r_start, k,
                          cfg.params_agent, cfg.dt)
    return choose_move(belief, cfg.r_start, cfg.grid, cfg.params_agent,
                       cfg.dt, cfg.policy)


def trajectory_dump(outcome: SearchOutcome) -> str:
    """Tab-separated dump: one line per sensing step (index, x, y, k, entropy)."""
    lines = []
    for i, (k, s) in enumerate(zip(outcome.detections, outcome.entropies)):
        x, y = outcome.trajectory[i]
        lines.append(f"{i}\t{x}\t{y}\t{k}\t{s:.12e}")
    return "\n".join(lines) + "\n"


def write_trajectory(outcome: SearchOutcome, path) -> None:
    with open(path, "w") as fh:
        fh.write(trajectory_dump(outcome))
