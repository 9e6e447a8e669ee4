"""Approximate error bounds built from truncated sums of the error series.

Neither bound here is guaranteed to dominate the true error; they are
estimates whose truncation orders are picked by tolerance tests on the
series terms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import SampledFn, TimeGrid, grid_mean_abs
from .models import OdeModel
from .series import DEFAULT_MAX_ORDER, EtaSeries

log = logging.getLogger(__name__)


class NonConvergenceError(RuntimeError):
    """No order up to the cap passes the truncation criterion."""

    def __init__(self, best_order: int, margin: float, max_order: int):
        super().__init__(
            f"no order <= {max_order} meets the tolerance; best was order {best_order} "
            f"exceeding its threshold by {margin:.3e}"
        )
        self.best_order = best_order
        self.margin = margin


@dataclass(frozen=True)
class ToleranceConfig:
    eps_abs_P: float = 1e-6
    eps_rel_P: float = 1e-3
    eps_abs_J: float = 1e-7
    eps_rel_J: float = 1e-4
    max_order: int = DEFAULT_MAX_ORDER

    def __post_init__(self):
        for name in ("eps_abs_P", "eps_rel_P", "eps_abs_J", "eps_rel_J"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (self.eps_abs_P > self.eps_abs_J and self.eps_rel_P > self.eps_rel_J):
            raise ValueError("the P tolerances must be strictly looser than the J tolerances")
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")

    def pair(self, which: str) -> tuple[float, float]:
        if which == "P":
            return self.eps_abs_P, self.eps_rel_P
        if which == "J":
            return self.eps_abs_J, self.eps_rel_J
        raise ValueError(f"which must be 'P' or 'J', not {which!r}")


@dataclass(frozen=True, eq=False)
class BoundCurve:
    """Bound samples on a grid.

    ``values`` is NaN wherever ``valid`` is False; such nodes carry no bound.
    """

    kind: str
    grid: TimeGrid
    values: np.ndarray
    J: int
    P: int | None = None
    converged: bool = True
    valid: np.ndarray | None = None
    constants: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        valid = np.ones(values.shape, bool) if self.valid is None else np.array(self.valid, bool)
        values[~valid] = np.nan
        if np.any(values[valid] < 0) or not np.all(np.isfinite(values[valid])):
            raise ValueError("bound values must be finite and non-negative on valid nodes")
        values.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def fully_valid(self) -> bool:
        return bool(np.all(self.valid))

    def as_sampled(self) -> SampledFn:
        if not self.fully_valid:
            raise ValueError("bound has masked nodes")
        return SampledFn(self.grid, self.values, name=f"{self.kind} bound")

    def coverage(self, abs_error: np.ndarray) -> float:
        """Fraction of valid nodes where the bound is >= the given |error|."""
        v = self.valid
        return float(np.mean(self.values[v] >= np.asarray(abs_error)[v]))


def _stack(series: EtaSeries, J: int) -> np.ndarray:
    series.raw(J)
    return np.array([series.raw(j) for j in range(J + 1)])


def order_diagnostics(series: EtaSeries, J: int) -> dict:
    means = [grid_mean_abs(series.order(j)) for j in range(J + 1)]
    maxima = [float(np.max(np.abs(series.raw(j)))) for j in range(J + 1)]
    return {"mean_abs": means, "max_abs": maxima}


def loose_bound(series: EtaSeries, J: int) -> BoundCurve:
    """``sum_{j<=J} |eta_j|``."""
    return tight_bound(series, 0, J, kind="loose")


def tight_bound(series: EtaSeries, P: int, J: int, kind: str = "tight") -> BoundCurve:
    """``|sum_{j<=P} eta_j| + sum_{P<j<=J} |eta_j|``."""
    if not 0 <= P <= J:
        raise ValueError(f"need 0 <= P <= J, got P={P}, J={J}")
    etas = _stack(series, J)
    if P == 0:
        # identical operation order to the loose bound
        values = np.sum(np.abs(etas), axis=0)
    else:
        values = np.abs(np.sum(etas[: P + 1], axis=0)) + np.sum(np.abs(etas[P + 1 :]), axis=0)
    return BoundCurve(kind, series.grid, values, J=J, P=P if kind == "tight" else None)


def select_order(series: EtaSeries, tol: ToleranceConfig, which: str = "J", start: int = 0) -> int:
    """Smallest order ``m >= start`` with ``|eta_m| < eps_abs + eps_rel |v|`` at every node."""
    eps_abs, eps_rel = tol.pair(which)
    threshold = eps_abs + eps_rel * np.abs(series.surrogate.v.values)
    best, best_margin = None, np.inf
    for m in range(start, tol.max_order + 1):
        excess = np.abs(series.raw(m)) - threshold
        worst = float(np.max(excess))
        if worst < 0:
            return m
        if worst < best_margin:
            best, best_margin = m, worst
    if best is None:
        best, best_margin = start, np.inf
    raise NonConvergenceError(best, best_margin, tol.max_order)


def check_convergence(series: EtaSeries, J: int) -> bool:
    """``max|eta_J|`` below the mean of ``|eta_j|`` for every ``j < J``.

    An identically zero ``eta_J`` (terminated series) counts as converged.
    """
    if J == 0:
        return True
    peak = float(np.max(np.abs(series.raw(J))))
    if peak == 0.0:
        return True
    return all(peak < grid_mean_abs(series.order(j)) for j in range(J))


def approximate_bound_pipeline(
    model: OdeModel,
    surrogate,
    tol: ToleranceConfig | None = None,
    series: EtaSeries | None = None,
) -> BoundCurve:
    """Pick ``P`` with the loose pair, ``J > P`` with the strict pair, return the tight bound.

    On failure to meet a tolerance the best-effort curve is returned with
    ``converged=False``.
    """
    tol = ToleranceConfig() if tol is None else tol
    if series is None:
        series = EtaSeries(model, surrogate, max_order=tol.max_order)
    converged = True
    notes = []
    try:
        P = select_order(series, tol, "P")
    except NonConvergenceError as exc:
        log.warning("P selection failed: %s", exc)
        notes.append(f"P: {exc}")
        P, converged = exc.best_order, False
    P = min(P, tol.max_order - 1)
    try:
        J = select_order(series, tol, "J", start=P + 1)
    except NonConvergenceError as exc:
        log.warning("J selection failed: %s", exc)
        notes.append(f"J: {exc}")
        J, converged = tol.max_order, False
    series_converges = check_convergence(series, J)
    if not series_converges:
        notes.append(f"series not convergent at J={J}")
    curve = tight_bound(series, P, J)
    diagnostics = order_diagnostics(series, J)
    diagnostics.update(
        convergence_at_J=series_converges,
        convergence_at_P=check_convergence(series, P),
        notes=notes,
    )
    return BoundCurve(
        "tight",
        series.grid,
        curve.values,
        J=J,
        P=P,
        converged=converged and series_converges,
        diagnostics=diagnostics,
    )
