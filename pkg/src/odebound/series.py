"""Series expansion of the error ``u - v`` driven by the residual.

With ``F_n`` the Taylor coefficients of ``f`` about the surrogate and
``q = int_{t0}^t F_1``, the error is ``eta = sum_j eta_j`` where::

    eta_0 = e^{-q} [ (u0 - v(t0)) - int r e^{q} ]
    eta_j = -e^{-q} int ( sum_{n=2}^{j+1} F_n S_{n, j+1-n} ) e^{q}      (j >= 1)

and ``S_{n,m}`` is the sum of all products ``eta_{j1} ... eta_{jn}`` with
``j1 + ... + jn = m``.  Every integral is the cumulative trapezoid on the
surrogate's grid.
"""

from __future__ import annotations

import logging

import numpy as np

from .grid import SampledFn, TimeGrid, check_finite, cumtrapz
from .models import OdeModel, residual

log = logging.getLogger(__name__)

DEFAULT_MAX_ORDER = 12
# largest |q| for which e^{+-q} is computed directly in double precision
EXP_BUDGET = 700.0


class OrderCapError(ValueError):
    """An order beyond the configured Taylor cap was requested."""


class ExponentOverflowError(ArithmeticError):
    def __init__(self, node: int, q_value: float):
        super().__init__(f"|q| = {abs(q_value):.4g} exceeds the exponent budget at node {node}; result overflows")
        self.node = node


def weighted_integral(g: np.ndarray, q: np.ndarray, h: float, exp_q=None, exp_mq=None) -> np.ndarray:
    """``e^{-q(t)} * trapz_{t0}^{t} g e^{q}`` at every node.

    Uses the direct product when ``|q|`` fits the exponent budget; otherwise a
    node-by-node recursion that only ever exponentiates increments of ``q``.
    """
    if exp_q is not None or np.max(np.abs(q)) <= EXP_BUDGET:
        eq = np.exp(q) if exp_q is None else exp_q
        emq = np.exp(-q) if exp_mq is None else exp_mq
        return emq * cumtrapz(g * eq, h)
    decay = np.exp(q[:-1] - q[1:])
    out = np.empty_like(g)
    out[0] = 0.0
    acc = 0.0
    half = 0.5 * h
    for i in range(1, len(g)):
        d = decay[i - 1]
        acc = d * acc + half * (g[i] + g[i - 1] * d)
        out[i] = acc
    return out


def compositions(n: int, m: int):
    """All ``n``-tuples of non-negative integers summing to ``m``."""
    if n == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in compositions(n - 1, m - first):
            yield (first,) + rest


class ConvolutionTable:
    """``S[n, m]``: sum over compositions of ``m`` into ``n`` parts of ``eta`` products.

    Built by the Cauchy-product recursion ``S[n, m] = sum_a S[n-1, m-a] eta_a``
    with ``S[1, m] = eta_m``; entries are memoised.
    """

    def __init__(self, grid: TimeGrid, orders: list[np.ndarray]):
        self.grid = grid
        self._orders = orders
        self._cache: dict[tuple[int, int], np.ndarray] = {}

    def raw(self, n: int, m: int) -> np.ndarray:
        if n < 1 or m < 0:
            raise ValueError(f"invalid table index ({n}, {m})")
        if m >= len(self._orders):
            raise IndexError(f"S[{n}, {m}] needs eta_{m}, only {len(self._orders)} orders available")
        if n == 1:
            return self._orders[m]
        key = (n, m)
        if key not in self._cache:
            acc = self.raw(n - 1, m) * self._orders[0]
            for a in range(1, m + 1):
                acc = acc + self.raw(n - 1, m - a) * self._orders[a]
            self._cache[key] = acc
        return self._cache[key]

    def __getitem__(self, key) -> SampledFn:
        n, m = key
        return SampledFn(self.grid, self.raw(n, m), name=f"S[{n},{m}]")

    def extend(self, up_to_n: int, up_to_j: int) -> None:
        for n in range(1, up_to_n + 1):
            for m in range(up_to_j + 1):
                self.raw(n, m)


class EtaSeries:
    """Lazily computed orders ``eta_0, eta_1, ...`` for one (model, surrogate) pair.

    ``max_order`` caps the highest order; Taylor coefficients are computed up
    to ``max_order + 1``.  Models whose expansion terminates (Riccati) have no
    effective cap.  With ``skip_vanishing`` the sum in ``eta_j`` drops terms
    whose ``F_n`` vanishes at every node.
    """

    def __init__(self, model: OdeModel, surrogate, max_order: int = DEFAULT_MAX_ORDER, skip_vanishing: bool = True):
        if max_order < 0:
            raise ValueError("max_order must be non-negative")
        self.model = model
        self.surrogate = surrogate
        self.grid: TimeGrid = surrogate.grid
        self.max_order = max_order
        self.skip_vanishing = skip_vanishing
        self.residual = residual(model, surrogate)

        t, v = self.grid.t, surrogate.v.values
        self._F = np.atleast_2d(model.taylor_coeffs(v, t, max(max_order + 1, 1)))
        self._F = np.array(np.broadcast_to(self._F, (self._F.shape[0], self.grid.n_points)))
        check_finite(self._F.ravel(), "Taylor coefficients")
        self._F_zero = [not np.any(row) for row in self._F]

        q = cumtrapz(self._F[1], self.grid.h)
        self.q = SampledFn(self.grid, q, name="q")
        over = np.flatnonzero(np.abs(q) > EXP_BUDGET)
        self.overflow_node = int(over[0]) if over.size else None
        if self.overflow_node is None:
            self._exp_q, self._exp_mq = np.exp(q), np.exp(-q)
        else:
            log.info("|q| exceeds %g at node %d; using incremental weighting", EXP_BUDGET, self.overflow_node)
            self._exp_q = self._exp_mq = None

        self.initial_mismatch = float(model.u0 - v[0])
        self._orders: list[np.ndarray] = []
        self.table = ConvolutionTable(self.grid, self._orders)

    # -- building blocks ---------------------------------------------------------

    def F(self, n: int) -> np.ndarray:
        """Samples of ``F_n`` (zeros past a terminating expansion)."""
        if n < self._F.shape[0]:
            return self._F[n]
        degree = self.model.taylor_degree
        if degree is not None and n > degree:
            return np.zeros(self.grid.n_points)
        raise OrderCapError(f"F_{n} is beyond the Taylor cap (max_order={self.max_order})")

    def _F_vanishes(self, n: int) -> bool:
        if n < len(self._F_zero):
            return self._F_zero[n]
        return self.model.taylor_degree is not None and n > self.model.taylor_degree

    def _weighted(self, g: np.ndarray) -> np.ndarray:
        return weighted_integral(g, self.q.values, self.grid.h, self._exp_q, self._exp_mq)

    def _homogeneous(self) -> np.ndarray:
        if self._exp_mq is not None:
            return self.initial_mismatch * self._exp_mq
        q = self.q.values
        with np.errstate(over="ignore", invalid="ignore"):
            return self.initial_mismatch * np.exp(-q)

    def _check(self, values: np.ndarray, j: int) -> np.ndarray:
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            node = self.overflow_node if self.overflow_node is not None else int(bad[0])
            raise ExponentOverflowError(node, float(self.q.values[node]))
        return values

    def _compute_next(self) -> None:
        j = len(self._orders)
        if j == 0:
            eta = self._homogeneous() - self._weighted(self.residual.values)
            eta[0] = self.initial_mismatch
        else:
            if self.model.taylor_degree is None and j > self.max_order:
                raise OrderCapError(f"eta_{j} requested but max_order is {self.max_order}")
            integrand = np.zeros(self.grid.n_points)
            for n in range(2, j + 2):
                if self.skip_vanishing and self._F_vanishes(n):
                    continue
                integrand = integrand + self.F(n) * self.table.raw(n, j + 1 - n)
            eta = -self._weighted(integrand)
        eta = self._check(eta, j)
        eta.flags.writeable = False
        self._orders.append(eta)

    # -- public API ------------------------------------------------------------

    @property
    def n_computed(self) -> int:
        return len(self._orders)

    def raw(self, j: int) -> np.ndarray:
        while len(self._orders) <= j:
            self._compute_next()
        return self._orders[j]

    def order(self, j: int) -> SampledFn:
        return SampledFn(self.grid, self.raw(j), name=f"eta_{j}")

    def orders(self, J: int) -> list[SampledFn]:
        return [self.order(j) for j in range(J + 1)]

    def partial_sum(self, J: int) -> np.ndarray:
        self.raw(J)
        return np.sum(self._orders[: J + 1], axis=0)


def compute_q(model: OdeModel, surrogate) -> SampledFn:
    grid = surrogate.grid
    F1 = model.taylor_coeffs(surrogate.v.values, grid.t, 1)[1]
    return SampledFn(grid, cumtrapz(np.broadcast_to(F1, grid.t.shape), grid.h), name="q")


def compute_eta0(model: OdeModel, surrogate) -> SampledFn:
    return EtaSeries(model, surrogate, max_order=0).order(0)


def compute_eta_j(series: EtaSeries, j: int) -> SampledFn:
    return series.order(j)


def sum_series(series: EtaSeries, J: int) -> SampledFn:
    return SampledFn(series.grid, series.partial_sum(J), name=f"sum eta_0..{J}")
