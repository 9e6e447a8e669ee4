"""Uniform time grids and the trapezoid quadrature shared by every bound.

All sampled quantities in the package (surrogate, residual, error-series
orders, bounds) live on one :class:`TimeGrid`.  Combining samples from two
different grids raises :class:`GridMismatchError` instead of resampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_trapezoid as _scipy_cumtrapz

DEFAULT_INTERVALS = 10_000


class GridMismatchError(ValueError):
    """Raised when samples from different grids are combined."""


class NonFiniteError(ValueError):
    """Raised when a sampled quantity contains nan or inf."""

    def __init__(self, name: str, index: int, value: float):
        super().__init__(f"{name}: non-finite value {value!r} at node {index}")
        self.index = index


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[t_start, t_end]`` with ``n_points`` nodes, endpoints included."""

    t_start: float
    t_end: float
    n_points: int = DEFAULT_INTERVALS + 1

    def __post_init__(self):
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise ValueError("grid endpoints must be finite")
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def h(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    @cached_property
    def t(self) -> np.ndarray:
        nodes = self.t_start + self.h * np.arange(self.n_points)
        nodes[-1] = self.t_end
        nodes.flags.writeable = False
        return nodes

    def refined(self, factor: int = 2) -> TimeGrid:
        """Grid on the same interval with ``factor`` times as many intervals."""
        return TimeGrid(self.t_start, self.t_end, factor * (self.n_points - 1) + 1)

    def sample(self, values) -> SampledFn:
        return SampledFn(self, values)


@dataclass(frozen=True, eq=False)
class SampledFn:
    """Real values at every node of a grid.

    Supports the handful of node-wise operations the bounds need
    (``+ - * abs``); operands must share a grid.
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    name: str = "sampled function"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 0:
            values = np.full(self.grid.n_points, float(values))
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"{self.name}: expected {self.grid.n_points} values, got shape {values.shape}"
            )
        check_finite(values, self.name)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.n_points

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    def _operand(self, other):
        if isinstance(other, SampledFn):
            require_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return SampledFn(self.grid, self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledFn(self.grid, self.values - self._operand(other))

    def __rsub__(self, other):
        return SampledFn(self.grid, self._operand(other) - self.values)

    def __mul__(self, other):
        return SampledFn(self.grid, self.values * self._operand(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SampledFn(self.grid, -self.values)

    def __abs__(self):
        return SampledFn(self.grid, np.abs(self.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def check_finite(values: np.ndarray, name: str = "values") -> None:
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFiniteError(name, int(bad[0]), float(values[bad[0]]))


def require_same_grid(*fns: SampledFn) -> TimeGrid:
    grid = fns[0].grid
    for fn in fns[1:]:
        if fn.grid != grid:
            raise GridMismatchError(f"cannot combine samples on {grid} and {fn.grid}")
    return grid


def cumtrapz(values: np.ndarray, h: float) -> np.ndarray:
    """Cumulative trapezoid on a uniform spacing, starting from 0 at node 0."""
    return _scipy_cumtrapz(values, dx=h, initial=0.0)


def cumulative_trapezoid(f: SampledFn) -> SampledFn:
    """Running integral from ``t_start`` to every node."""
    return SampledFn(f.grid, cumtrapz(f.values, f.grid.h), name="integral")


def grid_max(f: SampledFn) -> float:
    return float(np.max(f.values))


def grid_mean_abs(f: SampledFn) -> float:
    """Mean of ``|f|`` over the interval, by the trapezoid rule."""
    total = cumtrapz(np.abs(f.values), f.grid.h)[-1]
    return float(total / f.grid.length)
