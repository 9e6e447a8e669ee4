"""First-order scalar ODEs ``du/dt + f(u, t) = 0`` and the benchmark presets."""

from __future__ import annotations

import ast
import math
import operator
from typing import Callable

import numpy as np

from . import jet
from .grid import SampledFn, TimeGrid, cumtrapz, require_same_grid


class ModelError(ValueError):
    pass


def _require_real(value, what: str) -> float:
    if np.iscomplexobj(value):
        raise ModelError(f"{what} must be real-valued")
    return float(value)


class OdeModel:
    """``du/dt + f(u, t) = 0`` with ``u(t0) = u0`` on ``[t0, t_end]``.

    ``rhs(u, t)`` must be written with jet-aware primitives (see
    :mod:`odebound.jet`) so that the Taylor coefficients of ``f`` in ``u``
    can be generated to any order.
    """

    #: highest n with F_n possibly nonzero; None means unbounded
    taylor_degree: int | None = None

    def __init__(self, rhs: Callable, t0: float, u0: float, t_end: float, name: str = "custom"):
        self.rhs = rhs
        self.t0 = _require_real(t0, "t0")
        self.u0 = _require_real(u0, "u0")
        self.t_end = _require_real(t_end, "t_end")
        self.name = name
        if not self.t_end > self.t0:
            raise ModelError(f"domain end {self.t_end} must exceed t0 {self.t0}")
        _require_real(self.f(self.u0, self.t0), "f(u0, t0)")

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, t0={self.t0}, u0={self.u0}, t_end={self.t_end})"

    @property
    def domain(self) -> tuple[float, float]:
        return self.t0, self.t_end

    def grid(self, n_points: int | None = None) -> TimeGrid:
        if n_points is None:
            return TimeGrid(self.t0, self.t_end)
        return TimeGrid(self.t0, self.t_end, n_points)

    def f(self, u, t):
        return self.rhs(u, t)

    def taylor_coeffs(self, v, t, max_order: int) -> np.ndarray:
        """Rows ``F_0..F_max_order`` of ``f`` expanded in ``u`` about ``v``."""
        return jet.taylor_coefficients(self.rhs, v, t, max_order)


class RiccatiModel(OdeModel):
    """``f(u, t) = C(t) u^2 + B(t) u + A(t)``.

    ``A``, ``B``, ``C`` are callables of ``t`` (numbers are promoted to
    constants).  Taylor coefficients are exact and vanish beyond order two.
    """

    taylor_degree = 2

    def __init__(self, A, B, C, t0: float, u0: float, t_end: float, name: str = "riccati"):
        self.A = _as_function_of_t(A)
        self.B = _as_function_of_t(B)
        self.C = _as_function_of_t(C)
        for label, fn in (("A", self.A), ("B", self.B), ("C", self.C)):
            _require_real(fn(np.float64(t0)), f"{label}(t0)")
        super().__init__(self._riccati_rhs, t0, u0, t_end, name)

    def _riccati_rhs(self, u, t):
        return self.C(t) * u**2 + self.B(t) * u + self.A(t)

    def taylor_coeffs(self, v, t, max_order: int) -> np.ndarray:
        if max_order < 1:
            raise ValueError("max_order must be >= 1")
        v = np.asarray(v, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(v.shape, t.shape)
        out = np.zeros((max_order + 1,) + shape)
        c = np.broadcast_to(self.C(t), shape)
        out[0] = self.f(v, t)
        out[1] = 2 * c * v + self.B(t)
        if max_order >= 2:
            out[2] = c
        return out


def _as_function_of_t(value) -> Callable:
    if callable(value):
        return value
    const = float(value)
    return lambda t: np.full(np.shape(t), const) if np.ndim(t) else const


def linear_model(lam: float, t0: float = 0.0, u0: float = 1.0, t_end: float = 1.0) -> RiccatiModel:
    """``du/dt + lam*u = 0`` written as a degenerate Riccati equation."""
    return RiccatiModel(0.0, lam, 0.0, t0, u0, t_end, name=f"linear({lam:g})")


# -- benchmark presets -------------------------------------------------------

POPULATION_PARAMS = dict(T=10.0, k=5.0, alpha=2.0, beta=-40.0, u0=2.0, t0=0.0, t_end=1.0)
COSMOLOGY_PARAMS = dict(u0=6.91, gamma=1.47e4, beta=2.56e-4, g=-1.16, n=2, t0=-1.0, t_end=0.0)


def preset_population(**overrides) -> OdeModel:
    """Logistic growth with linear harvesting and a saturating predation term.

    ``f(u) = -T u (1 - u/k) + alpha u + beta u / (1 + u^2)``.
    """
    p = {**POPULATION_PARAMS, **overrides}
    T, k, alpha, beta = p["T"], p["k"], p["alpha"], p["beta"]

    def rhs(u, t):
        return -T * u * (1 - u / k) + alpha * u + beta * u / (1 + u**2)

    return OdeModel(rhs, p["t0"], p["u0"], p["t_end"], name="population")


def cosmology_coefficients(u0, gamma, beta, g, n, source_sign=-1.0):
    """Return ``(A, B, C)`` for the linear growth-rate equation of matter perturbations.

    ``u0`` here is the rate parameter appearing in the exponents (it also
    serves as the initial value).  The source term ``A`` carries
    ``source_sign``; with the physical sign (-1, the ``-3/2 Omega_m`` source
    of the growth equation) the solution stays bounded on ``[-1, 0]``.  With
    +1 every solution blows up to ``-inf`` in finite time on that interval.
    """

    def B(t):
        return u0 * (1 + 4 * beta * gamma * np.exp(3 * u0 * t)) / (
            2 * (1 + beta * np.exp(-u0 * t) * (1 + gamma * np.exp(4 * u0 * t)))
        )

    def A(t):
        e = np.exp(u0 * t)
        w = 1 - e
        num = 3 * u0**2 * e * (1 + g * w**n - g * w ** (2 * n))
        den = 2 * (beta + e * (1 + beta * gamma * np.exp(4 * u0 * t)))
        return source_sign * num / den

    def C(t):
        return np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0

    return A, B, C


def preset_cosmology(source_sign: float = -1.0, **overrides) -> RiccatiModel:
    p = {**COSMOLOGY_PARAMS, **overrides}
    A, B, C = cosmology_coefficients(p["u0"], p["gamma"], p["beta"], p["g"], p["n"], source_sign)
    return RiccatiModel(A, B, C, p["t0"], p["u0"], p["t_end"], name="cosmology")


PRESETS = {"population": preset_population, "cosmology": preset_cosmology}


def get_model(name: str) -> OdeModel:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ModelError(f"unknown model {name!r}; choose from {sorted(PRESETS)}") from None


# -- residual and loss -------------------------------------------------------


def _check_surrogate(model: OdeModel, surrogate) -> TimeGrid:
    grid = require_same_grid(surrogate.v, surrogate.dv)
    if not math.isclose(grid.t_start, model.t0, rel_tol=0, abs_tol=1e-12 * max(1.0, abs(model.t0))):
        raise ModelError(f"surrogate grid starts at {grid.t_start}, model t0 is {model.t0}")
    return grid


def residual(model: OdeModel, surrogate) -> SampledFn:
    """``r = dv/dt + f(v, t)`` at every node."""
    grid = _check_surrogate(model, surrogate)
    v = surrogate.v.values
    r = surrogate.dv.values + model.f(v, grid.t)
    return SampledFn(grid, r, name="residual")


def loss(model: OdeModel, surrogate) -> float:
    """Mean-square residual over the domain plus squared initial mismatch."""
    grid = _check_surrogate(model, surrogate)
    r = residual(model, surrogate).values
    mean_sq = cumtrapz(r**2, grid.h)[-1] / grid.length
    return float(mean_sq + (model.u0 - surrogate.v.values[0]) ** 2)


# -- expression strings for custom Riccati coefficients ------------------------


class ExpressionError(ValueError):
    pass


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"exp": np.exp}


def parse_expression(text: str) -> Callable:
    """Compile an expression in ``t`` (``+ - * / ^``, ``exp``, numbers) to ``fn(t)``."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            pass
        elif isinstance(node, ast.Name) and node.id == "t":
            pass
        elif (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            check(node.args[0])
        else:
            raise ExpressionError(f"unsupported syntax in {text!r}: {ast.dump(node)[:40]}")

    check(tree)

    def evaluate(node, t):
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](evaluate(node.left, t), evaluate(node.right, t))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](evaluate(node.operand, t))
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return t
        return _FUNCS[node.func.id](evaluate(node.args[0], t))

    body = tree.body

    def fn(t):
        t = np.asarray(t, dtype=float)
        out = np.broadcast_to(evaluate(body, t), t.shape)
        return out if t.ndim else float(out)

    fn.source = text
    return fn


def custom_riccati(A: str, B: str, C: str, t0: float, u0: float, t_end: float) -> RiccatiModel:
    return RiccatiModel(
        parse_expression(A), parse_expression(B), parse_expression(C), t0, u0, t_end, name="custom-riccati"
    )
