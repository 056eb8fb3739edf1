"""Physical model of the search environment.

A source at cell r0 emits particles at rate gamma; they decay after a
lifetime eta while diffusing (diffusivity D) and drifting with a mean
current V directed along -y.  The stationary mean detection rate seen by
a searcher of size a at cell r is

    R(r, r0) = gamma / ln(lambda/a) * exp(V*(y0 - y) / (2D)) * K0(|r - r0| / lambda)

with the correlation length

    lambda = sqrt(D*eta / (1 + V^2*eta/(4D))),

the mean distance a particle travels before decaying.  The formula is the
free-space solution and is used unchanged inside the bounded grid.

Numerical notes: the distance is floored at a (K0 diverges at 0, and a is
the natural short-range cutoff), lambda <= a is rejected outright because
ln(lambda/a) <= 0 makes the rate non-positive, and the rate is assembled
in log space so large wind exponents cannot overflow.  Rates over all
displacements are precomputed once per (params, grid, dt) and shared by
the belief update, the policy and the detection sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bessel import log_k0

Cell = tuple[int, int]


@dataclass(frozen=True)
class EnvParams:
    """Transport-process parameters. V may be negative (drift along +y)."""

    gamma: float = 1.0
    D: float = 1.0
    V: float = 0.0
    eta: float = 2500.0
    a: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "D", "eta", "a"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not math.isfinite(self.V):
            raise ValueError(f"V must be finite, got {self.V}")
        lam = correlation_length(self)
        if not lam > self.a:
            raise ValueError(
                f"correlation length {lam:.6g} must exceed searcher size a={self.a:.6g}; "
                "the rate prefactor gamma/ln(lambda/a) would be non-positive"
            )


@dataclass(frozen=True)
class GridSpec:
    """Rectangular lattice with integer cell coordinates centred on (0, 0).

    x runs over [-width//2, width - 1 - width//2] and y likewise, so the
    100x100 default spans [-50, 49] in both axes.  The boundary is
    reflecting: moves that would leave the grid are suppressed by the
    policy rather than wrapped or clipped.
    """

    width: int = 100
    height: int = 100

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise ValueError("grid must be at least 3x3")

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def x_range(self) -> tuple[int, int]:
        return -(self.width // 2), self.width - 1 - self.width // 2

    @property
    def y_range(self) -> tuple[int, int]:
        return -(self.height // 2), self.height - 1 - self.height // 2

    def contains(self, cell: Cell) -> bool:
        x, y = cell
        return (self.x_range[0] <= x <= self.x_range[1]
                and self.y_range[0] <= y <= self.y_range[1])

    def to_index(self, cell: Cell) -> tuple[int, int]:
        """(x, y) -> (ix, iy) array indices; arrays are indexed [iy, ix]."""
        x, y = cell
        return x + self.width // 2, y + self.height // 2

    def from_index(self, ix: int, iy: int) -> Cell:
        return ix - self.width // 2, iy - self.height // 2

    def xs(self) -> np.ndarray:
        return np.arange(self.width) - self.width // 2

    def ys(self) -> np.ndarray:
        return np.arange(self.height) - self.height // 2


def correlation_length(params: EnvParams) -> float:
    """Mean distance a particle travels before decaying."""
    return math.sqrt(params.D * params.eta
                     / (1.0 + params.V ** 2 * params.eta / (4.0 * params.D)))


def _log_rate(dx, dy, params: EnvParams):
    """log R at displacement (dx, dy) = (x - x0, y - y0); vectorized."""
    lam = correlation_length(params)
    # Regularize the divergence of K0 at zero separation by averaging the
    # field over the searcher's footprint, a disk of radius a/2.  Because
    # ln|r| is harmonic in 2D, the average equals the centre value for every
    # cell the disk does not cover, so only the co-located cell changes and
    # there it amounts to evaluating at the effective distance
    # (a/2)*exp(-1/2).  The floor must stay below the lattice spacing:
    # flooring at a itself (= 1 in the standard setup) would make
    # co-location indistinguishable from distance 1 and the belief could
    # never collapse onto a single cell while the searcher sits on the
    # source.
    dist = np.maximum(np.hypot(dx, dy), 0.5 * math.exp(-0.5) * params.a)
    return (math.log(params.gamma) - math.log(math.log(lam / params.a))
            - params.V * np.asarray(dy, dtype=np.float64) / (2.0 * params.D)
            + log_k0(dist / lam))


def mean_rate(r: Cell, r0: Cell, params: EnvParams) -> float:
    """Mean detection rate at r for a source at r0 (distance floored at a)."""
    return math.exp(_log_rate(r[0] - r0[0], r[1] - r0[1], params))


def sample_detections(r: Cell, r0_true: Cell, params: EnvParams, dt: float,
                      rng: np.random.Generator) -> int:
    """Poisson detection count over one interval dt at r, source at r0_true."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    return int(rng.poisson(mean_rate(r, r0_true, params) * dt))


def mean_field(r0_true: Cell, grid: GridSpec, params: EnvParams) -> np.ndarray:
    """R(r, r0_true) over every grid cell, as an (height, width) array [iy, ix]."""
    dx = grid.xs()[None, :] - r0_true[0]
    dy = grid.ys()[:, None] - r0_true[1]
    return np.exp(_log_rate(dx, dy, params))


class RateTable:
    """Displacement-indexed rate tables shared by belief, policy and sampling.

    Tables are (2*height-1, 2*width-1) arrays laid out so that the slice

        T[H-1-iy : 2*H-1-iy, W-1-ix : 2*W-1-ix]

    is the (height, width) field of values against every source hypothesis
    for a searcher at array index (ix, iy).  Stored per (params, grid, dt):
    ``w`` = R*dt, ``e`` = exp(-R*dt) and ``logw`` = log(R*dt).
    """

    def __init__(self, params: EnvParams, grid: GridSpec, dt: float):
        if not dt > 0:
            raise ValueError("dt must be > 0")
        self.params = params
        self.grid = grid
        self.dt = dt
        h, w = grid.height, grid.width
        dy = (h - 1) - np.arange(2 * h - 1, dtype=np.float64)
        dx = (w - 1) - np.arange(2 * w - 1, dtype=np.float64)
        logw = _log_rate(dx[None, :], dy[:, None], params) + math.log(dt)
        self.logw = np.ascontiguousarray(logw)
        self.w = np.exp(self.logw)
        self.e = np.exp(-self.w)

    def _window(self, table: np.ndarray, ix: int, iy: int) -> np.ndarray:
        h, w = self.grid.height, self.grid.width
        return table[h - 1 - iy: 2 * h - 1 - iy, w - 1 - ix: 2 * w - 1 - ix]

    def w_window(self, cell: Cell) -> np.ndarray:
        ix, iy = self.grid.to_index(cell)
        return self._window(self.w, ix, iy)

    def e_window(self, cell: Cell) -> np.ndarray:
        ix, iy = self.grid.to_index(cell)
        return self._window(self.e, ix, iy)

    def logw_window(self, cell: Cell) -> np.ndarray:
        ix, iy = self.grid.to_index(cell)
        return self._window(self.logw, ix, iy)

    def rate_dt(self, r: Cell, r0: Cell) -> float:
        """R(r, r0) * dt via table lookup."""
        h, w = self.grid.height, self.grid.width
        return float(self.w[h - 1 - (r[1] - r0[1]), w - 1 - (r[0] - r0[0])])


@lru_cache(maxsize=64)
def rate_table(params: EnvParams, grid: GridSpec, dt: float) -> RateTable:
    return RateTable(params, grid, dt)
