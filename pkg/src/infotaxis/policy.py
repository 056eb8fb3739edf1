"""Entropy-greedy move selection.

For each admissible move (the four lattice neighbours plus staying put,
minus moves that would leave the grid) the policy scores the expected
entropy change of the belief,

    dS(r') = -P(r') * S + (1 - P(r')) * sum_k rho_k(r') * (S_k - S),

where P(r') is the current mass at the candidate cell, S the current
entropy, rho_k the Poisson probability of k detections given the mean
h(r') = dt * sum_r0 P(r0) R(r'|r0), and S_k the entropy of the
hypothetical posterior after k detections at r'.  The move with the
most negative score wins; exact ties fall back to a fixed move order.

The k sum is truncated either when the cumulative rho mass reaches a
threshold (default 0.999) or at a hard cap k_max, without renormalizing
the retained mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .belief import BeliefGrid, BeliefUpdateError, entropy
from .env_model import Cell, EnvParams, GridSpec, rate_table

MOVES: dict[str, tuple[int, int]] = {
    "down": (0, -1),
    "up": (0, 1),
    "left": (-1, 0),
    "right": (1, 0),
    "stay": (0, 0),
}

DEFAULT_MOVE_ORDER = ("down", "up", "left", "right", "stay")

CUMULATIVE = "cumulative"
HARD_CAP = "hard_cap"


@dataclass(frozen=True)
class PolicyConfig:
    truncation: str = CUMULATIVE
    threshold: float = 0.999
    k_max: int = 20
    move_order: tuple[str, ...] = DEFAULT_MOVE_ORDER

    def __post_init__(self):
        if self.truncation not in (CUMULATIVE, HARD_CAP):
            raise ValueError(f"unknown truncation mode {self.truncation!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("cumulative threshold must lie in (0, 1)")
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")
        if sorted(self.move_order) != sorted(MOVES):
            raise ValueError("move_order must be a permutation of "
                             + "/".join(sorted(MOVES)))


@dataclass(frozen=True)
class MoveEvaluation:
    move: str | None
    delta_S_bar: float
    h: float
    k_terms_used: int


def expected_hits(belief: BeliefGrid, r_prime: Cell, params_agent: EnvParams,
                  dt: float) -> float:
    """Mean number of detections at r_prime under the current belief."""
    tables = rate_table(params_agent, belief.grid, dt)
    return float(np.einsum("ij,ij->", belief.p, tables.w_window(r_prime)))


def _k_terms(h: float, cfg: PolicyConfig) -> int:
    if cfg.truncation == HARD_CAP:
        return cfg.k_max
    return int(_kernels.poisson_kmax(h, cfg.threshold))


def expected_delta_S(belief: BeliefGrid, r_prime: Cell, params_agent: EnvParams,
                     dt: float, cfg: PolicyConfig,
                     move: str | None = None) -> MoveEvaluation:
    """Expected entropy variation of sensing at r_prime next step.

    More negative is better.  Raises BeliefUpdateError if a hypothetical
    posterior in the k sum degenerates numerically.
    """
    grid = belief.grid
    if not grid.contains(r_prime):
        raise ValueError(f"candidate cell {r_prime} outside grid")
    tables = rate_table(params_agent, grid, dt)
    ix, iy = grid.to_index(r_prime)
    oy = grid.height - 1 - iy
    ox = grid.width - 1 - ix

    h = float(np.einsum("ij,ij->", belief.p,
                        tables.w[oy:oy + grid.height, ox:ox + grid.width]))
    kmax = _k_terms(h, cfg)

    Z = np.empty(kmax + 1)
    A = np.empty(kmax + 1)
    B = np.empty(kmax + 1)
    _kernels.move_stats(belief.p, belief.log_p, tables.e, tables.w,
                        tables.logw, oy, ox, kmax, Z, A, B)
    rho = np.empty(kmax + 1)
    _kernels.poisson_pmf(h, kmax, rho)

    s_now = entropy(belief)
    ks = np.arange(kmax + 1)
    ok = Z > 0.0
    if not ok.all() and np.any(rho[~ok] > 0.0):
        raise BeliefUpdateError(
            f"hypothetical posterior degenerate at {r_prime} "
            f"for k in {ks[~ok & (rho > 0.0)].tolist()}")
    s_k = np.zeros(kmax + 1)
    s_k[ok] = np.log(Z[ok]) - (A[ok] + ks[ok] * B[ok]) / Z[ok]
    info_term = float(np.dot(rho[ok], s_k[ok] - s_now))

    p_prime = float(belief.p[iy, ix])
    delta = -p_prime * s_now + (1.0 - p_prime) * info_term
    if not np.isfinite(delta):
        raise BeliefUpdateError(
            f"non-finite expected entropy change at {r_prime}")
    return MoveEvaluation(move, delta, h, kmax + 1)


def admissible_moves(r_agent: Cell, grid: GridSpec,
                     order: tuple[str, ...] = DEFAULT_MOVE_ORDER) -> list[str]:
    """Moves whose target stays on the grid; outward boundary moves drop out."""
    x, y = r_agent
    return [name for name in order
            if grid.contains((x + MOVES[name][0], y + MOVES[name][1]))]


def choose_move(belief: BeliefGrid, r_agent: Cell, grid: GridSpec,
                params_agent: EnvParams, dt: float, cfg: PolicyConfig) -> str:
    """Admissible move with minimal expected entropy change.

    Candidates are scanned in cfg.move_order and only a strictly smaller
    score displaces the incumbent, so exact ties resolve to the earliest
    entry of the order.
    """
    x, y = r_agent
    best: MoveEvaluation | None = None
    for name in cfg.move_order:
        dx, dy = MOVES[name]
        target = (x + dx, y + dy)
        if not grid.contains(target):
            continue
        ev = expected_delta_S(belief, target, params_agent, dt, cfg, move=name)
        if best is None or ev.delta_S_bar < best.delta_S_bar:
            best = ev
    assert best is not None  # stay is always admissible
    return best.move
