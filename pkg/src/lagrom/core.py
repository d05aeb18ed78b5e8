"""Domain types shared by every module: grids, parameter sets, time axes and
snapshot tensors.

All field data is float64 throughout; the rank-collapse diagnostics elsewhere
in the package need singular-value ratios near machine epsilon, so no mixed
precision is allowed in.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

FRAMES = ("eulerian", "lagrangian", "latent")


class CflViolation(RuntimeError):
    """Raised when a solver's stability precheck fails."""


class GridTangling(RuntimeError):
    """Raised when a Lagrangian grid crosses itself beyond tolerance."""


class RankDeficiency(RuntimeError):
    """Raised when data cannot support the requested rank."""


class SolverBlowup(RuntimeError):
    """Raised when a solver state goes non-finite or a prediction overflows."""


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid in 1 or 2 dimensions.

    bounds, points and periodic are per-axis tuples. Spacing is
    (b - a)/(n - 1) on non-periodic axes and (b - a)/n on periodic ones
    (the right endpoint is the wrap image of the left).
    """

    bounds: tuple[tuple[float, float], ...]
    points: tuple[int, ...]
    periodic: tuple[bool, ...]

    def __post_init__(self):
        if not (1 <= len(self.points) <= 2):
            raise ValueError("only 1D and 2D grids are supported")
        if not (len(self.bounds) == len(self.points) == len(self.periodic)):
            raise ValueError("bounds/points/periodic length mismatch")
        for (a, b), n in zip(self.bounds, self.points):
            if n < 3:
                raise ValueError("need at least 3 points per axis")
            if not b > a:
                raise ValueError(f"empty axis interval [{a}, {b}]")

    @staticmethod
    def line(a: float, b: float, n: int, periodic: bool = False) -> "Grid":
        return Grid(((float(a), float(b)),), (int(n),), (bool(periodic),))

    @staticmethod
    def rect(bounds, points, periodic=(True, True)) -> "Grid":
        bx, by = bounds
        return Grid(
            ((float(bx[0]), float(bx[1])), (float(by[0]), float(by[1]))),
            (int(points[0]), int(points[1])),
            (bool(periodic[0]), bool(periodic[1])),
        )

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def n_space(self) -> int:
        return int(np.prod(self.points))

    def spacing(self, axis: int = 0) -> float:
        a, b = self.bounds[axis]
        n = self.points[axis]
        return (b - a) / n if self.periodic[axis] else (b - a) / (n - 1)

    def nodes(self, axis: int = 0) -> np.ndarray:
        # node_j = a + j*dx, reproducible bit-exactly from (a, dx, j)
        a, _ = self.bounds[axis]
        return a + np.arange(self.points[axis]) * self.spacing(axis)

    def length(self, axis: int = 0) -> float:
        a, b = self.bounds[axis]
        return b - a

    def meshgrid(self):
        """Node coordinate arrays shaped like the field (2D: indexed [ix, iy])."""
        if self.dim == 1:
            return (self.nodes(0),)
        return np.meshgrid(self.nodes(0), self.nodes(1), indexing="ij")


@dataclass(frozen=True)
class ParamSet:
    """Ordered parameter names plus an n_p x d matrix of sample values."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if vals.ndim != 2:
            raise ValueError("parameter values must form an n_p x d matrix")
        if vals.shape[0] < 1:
            raise ValueError("need at least one parameter sample")
        if vals.shape[1] != len(self.names):
            raise ValueError("parameter dimension does not match names")
        if not np.isfinite(vals).all():
            raise ValueError("non-finite parameter value")
        uniq = np.unique(vals, axis=0)
        if uniq.shape[0] != vals.shape[0]:
            raise ValueError("duplicate parameter rows")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @staticmethod
    def single(**kw) -> "ParamSet":
        names = tuple(kw)
        return ParamSet(names, np.array([[kw[k] for k in names]]))

    @staticmethod
    def grid(name: str, a: float, b: float, n: int) -> "ParamSet":
        """Inclusive linspace over one named parameter."""
        return ParamSet((name,), np.linspace(a, b, n)[:, None])

    @property
    def n_params(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.values[i]


@dataclass(frozen=True)
class TimeAxis:
    """Uniform time instants t0 + k*dt for k = 0..count-1."""

    t0: float
    dt: float
    count: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.count < 1:
            raise ValueError("need at least one time instant")

    def instant(self, k: int) -> float:
        return self.t0 + k * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.count) * self.dt

    @property
    def t_end(self) -> float:
        return self.instant(self.count - 1)


@dataclass(frozen=True)
class SnapshotSet:
    """Immutable dense snapshot tensor indexed [param, time, channel, space...].

    frame is one of "eulerian", "lagrangian", "latent". For latent sets the
    grid records the original spatial domain and the single space axis is the
    latent dimension.
    """

    grid: Grid
    params: ParamSet
    times: TimeAxis
    frame: str
    channel_names: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        if len(self.channel_names) < 1:
            raise ValueError("need at least one channel")
        data = np.asarray(self.data, dtype=np.float64)
        if self.frame == "latent":
            space = data.shape[3:]
            if len(space) != 1:
                raise ValueError("latent data must have one space axis")
        else:
            space = self.grid.shape
        expect = (self.params.n_params, self.times.count, len(self.channel_names), *space)
        if data.shape != expect:
            raise ValueError(f"data shape {data.shape} does not match {expect}")
        if not np.isfinite(data).all():
            raise ValueError("non-finite entry in snapshot data")
        if data.flags.writeable:
            data = data.copy()
            data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    @property
    def n_space(self) -> int:
        return int(np.prod(self.data.shape[3:]))

    def snapshot(self, param_index: int, time_index: int) -> np.ndarray:
        """One [channel, space...] block (read-only view)."""
        return self.data[param_index, time_index]


def flatten_snapshots(s: SnapshotSet, param_index: int) -> np.ndarray:
    """Matrix whose column k is the channel-stacked row-major flattening of
    snapshot (param_index, t_k). Shape (n_channels*n_space) x n_time.
    """
    if not 0 <= param_index < s.params.n_params:
        raise IndexError(f"param_index {param_index} out of range")
    block = s.data[param_index]  # [time, channel, space...]
    return block.reshape(s.times.count, -1).T.copy()


def stacked_matrix(s: SnapshotSet) -> np.ndarray:
    """Global matrix with all parameters' trajectories side by side,
    param-major then time (column p*n_t + k is snapshot (p, k))."""
    return s.data.reshape(s.params.n_params * s.times.count, -1).T.copy()


def subset_time(s: SnapshotSet, k0: int, k1: int) -> SnapshotSet:
    """Slice time indices k0..k1 inclusive; times re-anchored at t0 + k0*dt."""
    if not (0 <= k0 <= k1 < s.times.count):
        raise ValueError(f"invalid time range [{k0}, {k1}]")
    times = TimeAxis(s.times.instant(k0), s.times.dt, k1 - k0 + 1)
    return SnapshotSet(
        grid=s.grid,
        params=s.params,
        times=times,
        frame=s.frame,
        channel_names=s.channel_names,
        data=s.data[:, k0 : k1 + 1].copy(),
    )
