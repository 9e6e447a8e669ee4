"""Guaranteed error bound for Riccati equations ``f = C u^2 + B u + A``.

With ``x(t) = R K (t - t0) < 1`` every order obeys
``|eta_j| <= R x^j e^{-q_down}`` and the geometric tail of the series gives::

    |u - v| <= |sum_{j<=J} eta_j| + R x^{J+1} e^{-q_down} / (1 - x)

Nodes with ``x >= 1`` are masked: the bound says nothing there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .approx import BoundCurve
from .grid import SampledFn, TimeGrid, cumtrapz, grid_max
from .models import OdeModel, residual as _residual
from .series import EtaSeries


class BoundInapplicableError(ValueError):
    def __init__(self, message: str, rk_span: float):
        super().__init__(f"{message} (R*K*(t_end - t0) = {rk_span:.6g})")
        self.rk_span = rk_span


def _require_riccati(model: OdeModel) -> None:
    if model.taylor_degree is None or model.taylor_degree > 2:
        raise TypeError(f"the exact bound needs a Riccati model, got {model!r}")


@dataclass(frozen=True, eq=False)
class ExactBoundConstants:
    grid: TimeGrid
    q_up: SampledFn
    q_down: SampledFn
    R: float
    K: float

    @property
    def rk(self) -> np.ndarray:
        """``R K (t - t0)`` at every node."""
        with np.errstate(invalid="ignore"):
            out = self.R * self.K * (self.grid.t - self.grid.t_start)
        out[0] = 0.0
        return out

    @property
    def rk_span(self) -> float:
        return self.R * self.K * self.grid.length

    @property
    def validity_mask(self) -> np.ndarray:
        return self.rk < 1.0

    def per_order_bound(self, j: int) -> SampledFn:
        """``R x^j e^{-q_down}`` with ``x = R K (t - t0)``."""
        if j < 0:
            raise ValueError("order must be non-negative")
        with np.errstate(over="ignore"):
            values = self.R * self.rk**j * np.exp(-self.q_down.values)
        return SampledFn(self.grid, values, name=f"per-order bound {j}")

    def tail(self, J: int) -> np.ndarray:
        """Geometric tail after order ``J``; NaN where ``x >= 1``."""
        x = self.rk
        valid = x < 1.0
        out = np.full(self.grid.n_points, np.nan)
        if self.R == 0.0:
            out[valid] = 0.0
            return out
        xv = x[valid]
        with np.errstate(divide="ignore", over="ignore"):
            log_tail = math.log(self.R) + (J + 1) * np.log(xv) - self.q_down.values[valid] - np.log1p(-xv)
            out[valid] = np.exp(log_tail)
        return out


def split_q(model: OdeModel, surrogate) -> tuple[SampledFn, SampledFn]:
    """Running integrals of the positive and negative parts of ``F_1 = 2 C v + B``."""
    _require_riccati(model)
    grid = surrogate.grid
    F1 = np.broadcast_to(model.taylor_coeffs(surrogate.v.values, grid.t, 1)[1], grid.t.shape)
    q_up = cumtrapz(np.maximum(0.0, F1), grid.h)
    q_down = cumtrapz(np.minimum(0.0, F1), grid.h)
    return SampledFn(grid, q_up, name="q_up"), SampledFn(grid, q_down, name="q_down")


def compute_R(model: OdeModel, surrogate, residual: SampledFn, q_up: SampledFn, q_down: SampledFn) -> float:
    grid = surrogate.grid
    mismatch = abs(model.u0 - surrogate.v.values[0])
    term = mismatch * np.exp(-q_up.values) + cumtrapz(np.abs(residual.values) * np.exp(q_down.values), grid.h)
    return grid_max(SampledFn(grid, term))


def compute_K(model: OdeModel, q_down: SampledFn) -> float:
    grid = q_down.grid
    C = np.broadcast_to(model.taylor_coeffs(0.0 * grid.t, grid.t, 2)[2], grid.t.shape)
    with np.errstate(over="ignore"):
        weighted = np.abs(C) * np.exp(-q_down.values)
    if not np.all(np.isfinite(weighted)):
        return math.inf
    return grid_max(SampledFn(grid, weighted))


def exact_constants(model: OdeModel, surrogate, residual: SampledFn | None = None) -> ExactBoundConstants:
    _require_riccati(model)
    r = _residual(model, surrogate) if residual is None else residual
    q_up, q_down = split_q(model, surrogate)
    R = compute_R(model, surrogate, r, q_up, q_down)
    K = compute_K(model, q_down)
    return ExactBoundConstants(surrogate.grid, q_up, q_down, R, K)


def per_order_bound(constants: ExactBoundConstants, j: int) -> SampledFn:
    return constants.per_order_bound(j)


def exact_bound(
    model: OdeModel,
    surrogate,
    J: int,
    series: EtaSeries | None = None,
    constants: ExactBoundConstants | None = None,
) -> BoundCurve:
    """Partial sum to order ``J`` plus the geometric tail, on nodes with ``R K (t - t0) < 1``."""
    _require_riccati(model)
    if J < 0:
        raise ValueError("J must be non-negative")
    series = EtaSeries(model, surrogate) if series is None else series
    constants = exact_constants(model, surrogate, series.residual) if constants is None else constants
    valid = constants.validity_mask
    if not np.any(valid[1:]):
        raise BoundInapplicableError("R K (t - t0) >= 1 at every node after t0", constants.rk_span)
    tail = constants.tail(J)
    values = np.abs(series.partial_sum(J)) + np.where(valid, tail, 0.0)
    return BoundCurve(
        "exact",
        series.grid,
        values,
        J=J,
        converged=True,
        valid=valid,
        constants={
            "R": constants.R,
            "K": constants.K,
            "rk_span": constants.rk_span,
            "tail_sup": float(np.nanmax(tail)),
        },
    )


def select_J_for_tolerance(constants: ExactBoundConstants, eps: float) -> int:
    """Smallest ``J`` from the closed form making the tail ``< eps`` everywhere.

    Evaluated at every node except ``t0`` (where the ratio tends to 0) and
    clamped below at 0.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not np.all(constants.validity_mask):
        raise BoundInapplicableError("the tolerance formula needs R K (t - t0) < 1 on the whole domain", constants.rk_span)
    if constants.R == 0.0:
        return 0
    x = constants.rk[1:]
    if not np.any(x > 0):
        return 0
    x = x[x > 0]
    qd = constants.q_down.values[1:][constants.rk[1:] > 0]
    # ln(eps R^-1 (1 - x) e^{q_down}) / ln(x) - 1, in log form to avoid under/overflow
    ratio = (math.log(eps) - math.log(constants.R) + np.log1p(-x) + qd) / np.log(x)
    J = max(0, math.ceil(float(np.max(ratio)) - 1))
    # an exact-integer ceiling leaves tail == eps at the maximising node
    if np.nanmax(constants.tail(J)) >= eps:
        J += 1
    return J
