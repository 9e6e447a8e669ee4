"""Approximate solutions ``v(t)`` with an exact derivative channel.

The factory perturbs a reference solution by a smooth, analytically
differentiable function of known sup-norm, which gives surrogates of
controllable quality without training anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import oracle as _oracle
from .grid import SampledFn, TimeGrid, require_same_grid
from .models import OdeModel, loss


class LadderError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Surrogate:
    v: SampledFn
    dv: SampledFn
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        require_same_grid(self.v, self.dv)

    @property
    def grid(self) -> TimeGrid:
        return self.v.grid

    @classmethod
    def from_arrays(cls, grid: TimeGrid, v, dv, **provenance) -> Surrogate:
        return cls(SampledFn(grid, v, name="v"), SampledFn(grid, dv, name="dv"), provenance)

    @classmethod
    def from_functions(cls, grid: TimeGrid, v_fn, dv_fn, name: str = "analytic") -> Surrogate:
        t = grid.t
        return cls.from_arrays(grid, v_fn(t), dv_fn(t), kind="analytic", name=name)


def perturbation_basis(grid: TimeGrid, mode_count: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Seeded smooth perturbation ``p`` and its derivative, scaled to ``max |p| = 1`` on the grid.

    ``p = c0 * bump(t) + sum_m c_m sin(m pi (t - t0) / |I|)`` with a Gaussian
    bump centred on the interval, so ``p(t0) = c0 * bump(t0) != 0`` and the
    surrogate also carries an initial-condition mismatch.
    """
    if mode_count < 1:
        raise ValueError("mode_count must be >= 1")
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=mode_count + 1)
    # keep the bump weight away from zero
    coeffs[0] = np.copysign(0.5 + 0.5 * abs(coeffs[0]), coeffs[0])

    t = grid.t
    length = grid.length
    centre = grid.t_start + 0.5 * length
    width = 0.5 * length
    z = (t - centre) / width
    bump = np.exp(-(z**2))
    p = coeffs[0] * bump
    dp = coeffs[0] * bump * (-2 * z / width)
    for m in range(1, mode_count + 1):
        w = m * np.pi / length
        p = p + coeffs[m] * np.sin(w * (t - grid.t_start))
        dp = dp + coeffs[m] * w * np.cos(w * (t - grid.t_start))
    norm = np.max(np.abs(p))
    return p / norm, dp / norm


def perturbed_oracle(
    model: OdeModel,
    grid: TimeGrid | None = None,
    scale: float = 1e-3,
    mode_count: int = 3,
    seed=0,
    reference: _oracle.OracleSolution | None = None,
) -> Surrogate:
    """``v = u_ref + scale * p``, ``dv = du_ref + scale * p'``."""
    if scale < 0:
        raise ValueError("scale must be non-negative")
    grid = model.grid() if grid is None else grid
    if reference is None:
        reference = _oracle.solve(model, grid)
    elif reference.grid != grid:
        raise ValueError("reference solution lives on a different grid")
    p, dp = perturbation_basis(grid, mode_count, seed)
    v = reference.u.values + scale * p
    dv = reference.du.values + scale * dp
    return Surrogate.from_arrays(
        grid, v, dv, kind="perturbed_oracle", scale=scale, mode_count=mode_count, seed=seed
    )


def loss_ladder(
    model: OdeModel,
    grid: TimeGrid | None = None,
    scales=(1e-1, 1e-3, 1e-5),
    seed=0,
    mode_count: int = 3,
    reference: _oracle.OracleSolution | None = None,
) -> list[Surrogate]:
    """Surrogates of strictly decreasing loss, one per (strictly decreasing) scale."""
    scales = [float(s) for s in scales]
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise LadderError(f"scales must be strictly decreasing, got {scales}")
    grid = model.grid() if grid is None else grid
    if reference is None:
        reference = _oracle.solve(model, grid)
    ladder = [perturbed_oracle(model, grid, s, mode_count, seed, reference) for s in scales]
    losses = [loss(model, s) for s in ladder]
    if any(b >= a for a, b in zip(losses, losses[1:])):
        raise LadderError(f"losses not strictly decreasing for seed {seed}: {losses}; try another seed")
    return ladder
