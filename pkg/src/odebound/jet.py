"""Truncated power-series arithmetic for Taylor coefficients of a right-hand side.

A :class:`Jet` holds coefficients ``c[0..N]`` of ``g(v + x)`` in the
expansion variable ``x``.  Each coefficient may itself be an array, so a
single jet evaluates the expansion at every grid node at once.

Write right-hand sides with ordinary operators and the module-level
:func:`exp`, :func:`log`, :func:`sqrt` helpers; they accept plain floats and
arrays as well as jets::

    def f(u, t):
        return -10 * u * (1 - u / 5) + 2 * u - 40 * u / (1 + u**2)

    taylor_coefficients(f, v=2.0, t=0.0, max_order=4)
"""

from __future__ import annotations

import numbers

import numpy as np


class SingularExpansionError(ZeroDivisionError):
    """The expansion point makes a primitive non-analytic (e.g. ``1/x`` at 0)."""


class Jet:
    # numpy operands defer to the jet's reflected operators
    __array_ufunc__ = None

    def __init__(self, coefficients):
        c = np.asarray(coefficients, dtype=float)
        if c.ndim == 0 or c.shape[0] < 1:
            raise ValueError("a jet needs at least one coefficient")
        self.c = c

    @classmethod
    def variable(cls, value, order: int) -> Jet:
        """The jet of ``value + x``."""
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int) -> Jet:
        value = np.asarray(value, dtype=float)
        c = np.zeros((order + 1,) + value.shape)
        c[0] = value
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    def __len__(self):
        return self.c.shape[0]

    def __getitem__(self, n):
        return self.c[n]

    def __repr__(self):
        return f"Jet({self.c!r})"

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jets of different order cannot be combined")
            return other
        if isinstance(other, (numbers.Real, np.ndarray)):
            return np.asarray(other, dtype=float)
        return NotImplemented

    def _shift(self, const, sign=1.0):
        shape = (len(self),) + np.broadcast_shapes(self.c.shape[1:], const.shape)
        out = np.array(np.broadcast_to(sign * self.c, shape))
        out[0] = out[0] + const
        return Jet(out)

    # -- arithmetic ---------------------------------------------------------

    def __pos__(self):
        return self

    def __neg__(self):
        return Jet(-self.c)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if isinstance(other, Jet):
            return Jet(self.c + other.c)
        return self._shift(other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if isinstance(other, Jet):
            return Jet(self.c - other.c)
        return self._shift(-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._shift(other, sign=-1.0)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if isinstance(other, Jet):
            return Jet(_cauchy(self.c, other.c))
        return Jet(self.c * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if isinstance(other, Jet):
            return Jet(_divide(self.c, other.c))
        if np.any(other == 0):
            raise SingularExpansionError("division by zero")
        return Jet(self.c / other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        batch = np.broadcast_shapes(other.shape, self.c.shape[1:])
        num = Jet.constant(np.broadcast_to(other, batch), self.order).c
        return Jet(_divide(num, np.broadcast_to(self.c, num.shape)))

    def __pow__(self, p):
        if isinstance(p, Jet):
            return exp(p * log(self))
        if isinstance(p, numbers.Integral) and p >= 0:
            result = Jet.constant(np.ones_like(self.c[0]), self.order)
            base, k = self, int(p)
            while k:
                if k & 1:
                    result = result * base
                k >>= 1
                if k:
                    base = base * base
            return result
        return Jet(_power(self.c, float(p)))

    def __rpow__(self, base):
        return exp(self * np.log(np.asarray(base, dtype=float)))

    # -- elementary functions ---------------------------------------------

    def exp(self) -> Jet:
        a = self.c
        out = np.zeros_like(a)
        out[0] = np.exp(a[0])
        # k e_k = sum_{i=1..k} i a_i e_{k-i}
        for k in range(1, len(a)):
            out[k] = sum(i * a[i] * out[k - i] for i in range(1, k + 1)) / k
        return Jet(out)

    def log(self) -> Jet:
        a = self.c
        if np.any(a[0] <= 0):
            raise SingularExpansionError("log of a jet with non-positive constant term")
        out = np.zeros_like(a)
        out[0] = np.log(a[0])
        for k in range(1, len(a)):
            acc = k * a[k] - sum(i * out[i] * a[k - i] for i in range(1, k))
            out[k] = acc / (k * a[0])
        return Jet(out)


def _cauchy(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(out.shape[0]):
        out[k] = sum(a[i] * b[k - i] for i in range(k + 1))
    return out


def _divide(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if np.any(b[0] == 0):
        raise SingularExpansionError("division by a jet with zero constant term")
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(out.shape[0]):
        out[k] = (a[k] - sum(out[i] * b[k - i] for i in range(k))) / b[0]
    return out


def _power(a: np.ndarray, p: float) -> np.ndarray:
    # a_0 k c_k = sum_{i=1..k} (p i - (k - i)) a_i c_{k-i}
    if np.any(a[0] == 0):
        raise SingularExpansionError("non-integer power of a jet with zero constant term")
    out = np.zeros_like(a)
    out[0] = a[0] ** p
    for k in range(1, len(a)):
        acc = sum((p * i - (k - i)) * a[i] * out[k - i] for i in range(1, k + 1))
        out[k] = acc / (k * a[0])
    return out


def exp(x):
    if isinstance(x, Jet):
        return x.exp()
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        return x.log()
    return np.log(x)


def sqrt(x):
    if isinstance(x, Jet):
        return x**0.5
    return np.sqrt(x)


def taylor_coefficients(f, v, t, max_order: int) -> np.ndarray:
    """``[F_0, ..., F_max_order]`` with ``F_n = (1/n!) d^n f/du^n`` at ``(v, t)``.

    ``f(u, t)`` must be built from jet-supported primitives.  The result has
    shape ``(max_order + 1,) + shape(v)``; ``F_0`` is ``f(v, t)`` evaluated
    directly.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    out = f(Jet.variable(v, max_order), t)
    if not isinstance(out, Jet):
        # f does not depend on u
        coeffs = np.zeros((max_order + 1,) + np.broadcast_shapes(v.shape, np.shape(out)))
        coeffs[0] = out
        return coeffs
    coeffs = np.array(np.broadcast_to(out.c, (max_order + 1,) + np.broadcast_shapes(v.shape, out.c.shape[1:])))
    coeffs[0] = f(v, t)
    return coeffs
