"""Probabilistic map of the source position and its Bayesian update.

The belief assigns a probability mass to every grid cell.  One sensing
interval at cell r with k registered detections multiplies each
hypothesis r0 by the Poisson likelihood

    L(r0) = exp(-R(r, r0)*dt) * (R(r, r0)*dt)^k

(the k! cancels under normalization) and renormalizes.  Masses live in
linear space with per-update renormalization; only the likelihood of a
single update is assembled in log space, which keeps large detection
counts from overflowing.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import _kernels
from .env_model import Cell, EnvParams, GridSpec, rate_table

# smallest positive double; keeps log(p) finite on zero-mass cells, whose
# contributions are annihilated by the paired factor p (or u) being 0
_TINY = 5e-324


class BeliefUpdateError(ArithmeticError):
    """All posterior masses underflowed to zero; the update is meaningless."""


class BeliefGrid:
    """Normalized probability masses over grid cells, shape (height, width).

    Instances are treated as immutable: updates build new grids, so the
    lazily computed entropy and log-mass caches stay valid.
    """

    __slots__ = ("p", "grid", "_logp", "_entropy")

    def __init__(self, p: np.ndarray, grid: GridSpec):
        self.p = p
        self.grid = grid
        self._logp = None
        self._entropy = None

    @property
    def log_p(self) -> np.ndarray:
        if self._logp is None:
            self._logp = np.log(np.maximum(self.p, _TINY))
        return self._logp

    def mass_at(self, cell: Cell) -> float:
        ix, iy = self.grid.to_index(cell)
        return float(self.p[iy, ix])


class ArgmaxResult(NamedTuple):
    cell: Cell
    tie: bool
    n_tied: int


def init_uniform(grid: GridSpec) -> BeliefGrid:
    """Maximum-entropy prior: every cell carries 1/N."""
    p = np.full((grid.height, grid.width), 1.0 / grid.n_cells)
    return BeliefGrid(p, grid)


def entropy(belief: BeliefGrid) -> float:
    """Shannon entropy -sum p*ln(p) in nats, with 0*ln(0) = 0."""
    if belief._entropy is None:
        s = _kernels.entropy_neg_plogp(belief.p, belief.log_p)
        belief._entropy = max(s, 0.0)
    return belief._entropy


def bayes_update(belief: BeliefGrid, r_agent: Cell, k: int,
                 params_agent: EnvParams, dt: float) -> BeliefGrid:
    """Posterior after observing k detections at r_agent over one interval.

    Raises BeliefUpdateError when every mass underflows to zero; callers
    must treat that as a numerical fault rather than renormalize garbage.
    """
    if k < 0:
        raise ValueError(f"detection count must be >= 0, got {k}")
    if not belief.grid.contains(r_agent):
        raise ValueError(f"agent cell {r_agent} outside grid")
    tables = rate_table(params_agent, belief.grid, dt)
    if k == 0:
        u = belief.p * tables.e_window(r_agent)
    elif k == 1:
        u = belief.p * tables.e_window(r_agent) * tables.w_window(r_agent)
    else:
        # log-space likelihood, shifted by its maximum before exponentiation
        expo = k * tables.logw_window(r_agent) - tables.w_window(r_agent)
        u = belief.p * np.exp(expo - expo.max())
    z = float(u.sum())
    if not (z > 0.0 and math.isfinite(z)):
        raise BeliefUpdateError(
            f"degenerate posterior normalizer (sum={z}) at {r_agent} with k={k}")
    return BeliefGrid(u / z, belief.grid)


def argmax(belief: BeliefGrid) -> ArgmaxResult:
    """Cell of maximal mass; ties flagged, representative is the smallest (y, x)."""
    m = belief.p.max()
    tied = np.argwhere(belief.p == m)
    iy, ix = tied[0]
    return ArgmaxResult(belief.grid.from_index(int(ix), int(iy)),
                        len(tied) > 1, len(tied))


def snapshot_text(belief: BeliefGrid) -> str:
    """Plain-text matrix, height rows by width columns, largest y first."""
    rows = []
    for iy in range(belief.grid.height - 1, -1, -1):
        rows.append(" ".join(f"{v:.12e}" for v in belief.p[iy]))
    return "\n".join(rows) + "\n"


def write_snapshot(belief: BeliefGrid, path) -> None:
    with open(path, "w") as fh:
        fh.write(snapshot_text(belief))
