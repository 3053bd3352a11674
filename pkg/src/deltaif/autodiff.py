"""Forward-mode automatic differentiation with dual numbers.

Functionals are written against the helpers in this module (``exp``, ``log``,
``sqrt``, ``expit``) so that the same code runs on plain floats and on
:class:`Dual` values.  Gradients are built with one dual pass per coordinate.

Comparisons between duals look only at the value part, so piecewise
functions differentiate along whichever branch the value selects.  At a kink
this returns the one-sided derivative of the chosen branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, DomainError


class Dual:
    """Number ``value + derivative * eps`` with ``eps**2 == 0``."""

    __slots__ = ("value", "derivative")

    def __init__(self, value, derivative=0.0):
        self.value = float(value)
        self.derivative = float(derivative)

    @classmethod
    def constant(cls, value):
        return cls(value, 0.0)

    @classmethod
    def variable(cls, value):
        return cls(value, 1.0)

    def __repr__(self):
        return f"Dual({self.value!r}, {self.derivative!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.derivative + other.derivative)
        return Dual(self.value + other, self.derivative)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.derivative - other.derivative)
        return Dual(self.value - other, self.derivative)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.derivative)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.value * other.derivative + self.derivative * other.value,
            )
        return Dual(self.value * other, self.derivative * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            v = self.value / other.value
            return Dual(v, (self.derivative - v * other.derivative) / other.value)
        return Dual(self.value / other, self.derivative / other)

    def __rtruediv__(self, other):
        v = other / self.value
        return Dual(v, -v * self.derivative / self.value)

    def __neg__(self):
        return Dual(-self.value, -self.derivative)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.value < 0 else self

    def __pow__(self, power):
        if isinstance(power, Dual):
            if self.value <= 0:
                raise DomainError(f"dual base must be positive for a dual exponent, got {self.value}")
            return exp(power * log(self))
        if power == 0:
            return Dual(1.0, 0.0)
        if self.value == 0 and power < 1:
            raise DomainError(f"0 ** {power} has no finite derivative")
        if self.value < 0 and not float(power).is_integer():
            raise DomainError(f"negative base {self.value} with non-integer power {power}")
        return Dual(self.value**power, power * self.value ** (power - 1) * self.derivative)

    def __rpow__(self, base):
        if base <= 0:
            raise DomainError(f"base must be positive for a dual exponent, got {base}")
        v = base**self.value
        return Dual(v, v * math.log(base) * self.derivative)

    # value-only comparisons
    def _v(self, other):
        return other.value if isinstance(other, Dual) else other

    def __lt__(self, other):
        return self.value < self._v(other)

    def __le__(self, other):
        return self.value <= self._v(other)

    def __gt__(self, other):
        return self.value > self._v(other)

    def __ge__(self, other):
        return self.value >= self._v(other)

    def __eq__(self, other):
        return self.value == self._v(other)

    def __ne__(self, other):
        return self.value != self._v(other)

    __hash__ = None

    def __float__(self):
        return self.value


def value_of(x):
    return x.value if isinstance(x, Dual) else float(x)


def derivative_of(x):
    return x.derivative if isinstance(x, Dual) else 0.0


def exp(x):
    if isinstance(x, Dual):
        v = math.exp(x.value)
        return Dual(v, v * x.derivative)
    return math.exp(x)


def log(x):
    v = value_of(x)
    if not v > 0:
        raise DomainError(f"log of non-positive value {v}")
    if isinstance(x, Dual):
        return Dual(math.log(v), x.derivative / v)
    return math.log(v)


def sqrt(x):
    v = value_of(x)
    if v < 0:
        raise DomainError(f"sqrt of negative value {v}")
    if isinstance(x, Dual):
        if v == 0:
            if x.derivative == 0:
                return Dual(0.0, 0.0)
            raise DomainError("sqrt is not differentiable at 0")
        r = math.sqrt(v)
        return Dual(r, x.derivative / (2.0 * r))
    return math.sqrt(v)


def expit(x):
    """Logistic function, stable for large |x|."""
    if value_of(x) >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def _as_point(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size == 0:
        raise DimensionError("evaluation point must be a non-empty vector")
    return x


def gradient(f: Callable, x: Sequence[float]) -> np.ndarray:
    """Gradient of a scalar function ``f(*x)`` at ``x``.

    ``f`` receives one positional argument per coordinate.
    """
    x = _as_point(x)
    k = x.size
    grad = np.empty(k)
    for i in range(k):
        args = [Dual(x[j], 1.0 if j == i else 0.0) for j in range(k)]
        grad[i] = derivative_of(f(*args))
    return grad


def jacobian(f: Callable, x: Sequence[float]) -> np.ndarray:
    """Jacobian (m x k) of a vector function ``f(*x)`` returning m outputs."""
    x = _as_point(x)
    k = x.size
    cols = []
    for i in range(k):
        args = [Dual(x[j], 1.0 if j == i else 0.0) for j in range(k)]
        out = f(*args)
        if isinstance(out, Dual) or np.isscalar(out):
            out = [out]
        cols.append([derivative_of(o) for o in out])
    return np.array(cols, dtype=float).T


def directional_derivative(grad, v) -> float:
    """Project a gradient onto direction ``v``."""
    g = np.atleast_1d(np.asarray(grad, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if g.shape != v.shape:
        raise DimensionError(f"gradient has shape {g.shape}, direction {v.shape}")
    return float(g @ v)


@dataclass(frozen=True)
class GradientCheck:
    autodiff: np.ndarray
    numeric: np.ndarray
    per_coordinate: np.ndarray
    max_abs_diff: float


def central_difference(f: Callable, x: Sequence[float], step=None) -> np.ndarray:
    x = _as_point(x)
    if step is None:
        h = 1e-6 * np.maximum(1.0, np.abs(x))
    else:
        if not step > 0:
            raise ValueError("step must be positive")
        h = np.full(x.size, float(step))
    out = np.empty(x.size)
    for i in range(x.size):
        up = x.copy()
        dn = x.copy()
        up[i] += h[i]
        dn[i] -= h[i]
        out[i] = (float(f(*up)) - float(f(*dn))) / (2.0 * h[i])
    return out


def check_gradient(f: Callable, x: Sequence[float], step=None) -> GradientCheck:
    """Compare the dual-number gradient against central differences.

    Default step is ``1e-6 * max(1, |x_i|)`` per coordinate.
    """
    ad = gradient(f, x)
    num = central_difference(f, x, step)
    diff = np.abs(ad - num)
    return GradientCheck(ad, num, diff, float(diff.max()))
