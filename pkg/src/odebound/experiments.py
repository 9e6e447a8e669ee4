"""Desk-scale replicas: loss ladders against the oracle error, all bound variants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .approx import BoundCurve, ToleranceConfig, approximate_bound_pipeline, loose_bound
from .grid import TimeGrid
from .models import OdeModel, loss, preset_cosmology, preset_population
from .riccati import exact_bound, exact_constants, select_J_for_tolerance
from .series import EtaSeries
from .surrogates import loss_ladder

APPROX_SCALES = (1e-1, 1e-3, 1e-5)
EXACT_SCALES = (1e-2, 1e-4, 1e-6)
EXACT_EPS = 1e-8


@dataclass(eq=False)
class BoundRecord:
    """One (surrogate, bound) pair and its comparison with the oracle error."""

    rung: int
    scale: float
    loss: float
    label: str
    curve: BoundCurve
    abs_error: np.ndarray
    series_gap: float
    extra: dict = field(default_factory=dict)

    @property
    def coverage(self) -> float:
        return self.curve.coverage(self.abs_error)

    @property
    def sup_abs_error(self) -> float:
        return float(np.max(self.abs_error))

    @property
    def sup_bound(self) -> float:
        return float(np.nanmax(self.curve.values))

    @property
    def sup_excess(self) -> float:
        """``sup (bound - |error|)`` over valid nodes."""
        v = self.curve.valid
        return float(np.max(self.curve.values[v] - self.abs_error[v]))

    def summary_row(self, experiment: str, seed: int) -> dict:
        c = self.curve
        return {
            "experiment": experiment,
            "seed": seed,
            "rung": self.rung,
            "scale": self.scale,
            "loss": self.loss,
            "bound": self.label,
            "P": "" if c.P is None else c.P,
            "J": c.J,
            "converged": int(c.converged),
            "valid_fraction": float(np.mean(c.valid)),
            "sup_abs_error": self.sup_abs_error,
            "sup_bound": self.sup_bound,
            "sup_excess": self.sup_excess,
            "sup_series_gap": self.series_gap,
            "tail_sup": c.constants.get("tail_sup", ""),
            "coverage": self.coverage,
        }


def _ladder(model: OdeModel, grid: TimeGrid, scales, seed: int, mode_count: int):
    reference = oracle.solve(model, grid)
    ladder = loss_ladder(model, grid, scales, seed, mode_count, reference)
    return reference, ladder


def _gap(series: EtaSeries, J: int, error: np.ndarray) -> float:
    return float(np.max(np.abs(series.partial_sum(J) - error)))


def run_approx(
    seed: int = 0,
    scales=APPROX_SCALES,
    tol: ToleranceConfig | None = None,
    model: OdeModel | None = None,
    grid: TimeGrid | None = None,
    mode_count: int = 3,
) -> list[BoundRecord]:
    """Tight bound from the order-selection pipeline plus the loose bound at the same ``J``."""
    tol = ToleranceConfig() if tol is None else tol
    model = preset_population() if model is None else model
    grid = model.grid() if grid is None else grid
    reference, ladder = _ladder(model, grid, scales, seed, mode_count)
    records = []
    for rung, (scale, surrogate) in enumerate(zip(scales, ladder)):
        error = reference.u.values - surrogate.v.values
        series = EtaSeries(model, surrogate, max_order=tol.max_order)
        tight = approximate_bound_pipeline(model, surrogate, tol, series)
        loose = loose_bound(series, tight.J)
        loose = BoundCurve("loose", grid, loose.values, J=tight.J, converged=tight.converged)
        gap = _gap(series, tight.J, error)
        ell = loss(model, surrogate)
        for label, curve in (("tight", tight), ("loose", loose)):
            records.append(BoundRecord(rung, scale, ell, label, curve, np.abs(error), gap))
    return records


def run_exact(
    seed: int = 0,
    scales=EXACT_SCALES,
    eps: float = EXACT_EPS,
    model: OdeModel | None = None,
    grid: TimeGrid | None = None,
    mode_count: int = 3,
) -> list[BoundRecord]:
    """Exact bound at ``J = 0``, ``J = 1`` and the ``J`` that pushes the tail below ``eps``."""
    model = preset_cosmology() if model is None else model
    grid = model.grid() if grid is None else grid
    reference, ladder = _ladder(model, grid, scales, seed, mode_count)
    records = []
    for rung, (scale, surrogate) in enumerate(zip(scales, ladder)):
        error = reference.u.values - surrogate.v.values
        series = EtaSeries(model, surrogate)
        constants = exact_constants(model, surrogate, series.residual)
        J_eps = select_J_for_tolerance(constants, eps)
        ell = loss(model, surrogate)
        for label, J in (("exact_J0", 0), ("exact_J1", 1), ("exact_Jeps", J_eps)):
            curve = exact_bound(model, surrogate, J, series, constants)
            records.append(
                BoundRecord(rung, scale, ell, label, curve, np.abs(error), _gap(series, J, error), {"eps": eps})
            )
    return records

