"""Empirical distribution machinery: samples, influence curves, Wald intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionError, InsufficientSample, ValidationError

POPULATION = "population"
UNBIASED = "unbiased"
CONVENTIONS = (POPULATION, UNBIASED)

NATURAL = "natural"
LOG_EXP = "log-transformed-then-exponentiated"


@dataclass(frozen=True, eq=False)
class Sample:
    """Immutable n x width table of finite observations.

    ``columns`` names each variable; lookups accept a name or an index.
    """

    data: np.ndarray
    columns: tuple = ()

    def __post_init__(self):
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DimensionError("sample must be one- or two-dimensional")
        if arr.shape[1] < 1:
            raise DimensionError("sample must have at least one column")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("sample contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        cols = tuple(self.columns) if self.columns else tuple(f"x{i}" for i in range(arr.shape[1]))
        if len(cols) != arr.shape[1]:
            raise DimensionError(f"{len(cols)} column names for width {arr.shape[1]}")
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_columns(cls, **cols):
        names = tuple(cols)
        return cls(np.column_stack([np.asarray(c, dtype=float) for c in cols.values()]), names)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def index(self, column: Union[int, str]) -> int:
        if isinstance(column, str):
            try:
                return self.columns.index(column)
            except ValueError:
                raise DimensionError(f"no column named {column!r}; have {self.columns}") from None
        if not -self.width <= column < self.width:
            raise DimensionError(f"column {column} out of range for width {self.width}")
        return column % self.width

    def column(self, column: Union[int, str] = 0) -> np.ndarray:
        return self.data[:, self.index(column)]

    def select(self, columns: Sequence[Union[int, str]]) -> "Sample":
        idx = [self.index(c) for c in columns]
        return Sample(self.data[:, idx], tuple(self.columns[i] for i in idx))

    def take(self, rows) -> "Sample":
        return Sample(self.data[rows], self.columns)

    def __len__(self):
        return self.n


def as_sample(x) -> Sample:
    return x if isinstance(x, Sample) else Sample(x)


def check_convention(convention: str) -> str:
    if convention not in CONVENTIONS:
        raise ValidationError(f"variance convention must be one of {CONVENTIONS}, got {convention!r}")
    return convention


@dataclass(frozen=True, eq=False)
class InfluenceCurve:
    values: np.ndarray
    estimand_tag: str = ""
    variance_convention: str = UNBIASED

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        check_convention(self.variance_convention)

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    scale_note: str = NATURAL

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValidationError(f"level must lie in (0, 1), got {self.level}")
        if self.lower > self.upper:
            raise ValidationError("interval lower bound exceeds upper bound")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __iter__(self):
        return iter((self.lower, self.upper))


def if_variance(curve: InfluenceCurve, convention: Optional[str] = None) -> float:
    """Variance of the estimator (SE squared) from its influence curve.

    ``population`` averages the squared values (mean assumed zero);
    ``unbiased`` centres them and divides by ``n - 1``.  Both are then
    divided by ``n``.
    """
    convention = check_convention(convention or curve.variance_convention)
    v = curve.values
    n = v.size
    if convention == POPULATION:
        if n < 1:
            raise InsufficientSample("population convention needs n >= 1")
        return float(np.dot(v, v) / n / n)
    if n < 2:
        raise InsufficientSample("unbiased convention needs n >= 2")
    c = v - v.mean()
    return float(np.dot(c, c) / (n - 1) / n)


# Rational approximation of the inverse normal CDF (P. J. Acklam), then one
# Halley step against the erfc-based CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _lower_quantile(p: float) -> float:
    # p <= 0.5
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    e = normal_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValidationError(f"probability must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        # 1 - p is exact for p in [0.5, 1)
        return -_lower_quantile(1.0 - p)
    return _lower_quantile(p)


def wald_ci(estimate: float, se: float, level: float = 0.95, scale_note: str = NATURAL) -> ConfidenceInterval:
    """``estimate +/- z * se`` with ``z`` the ``(1 + level) / 2`` normal quantile.

    With ``scale_note=LOG_EXP`` the estimate and se are on the log scale and
    the returned bounds are exponentiated.
    """
    if not 0 < level < 1:
        raise ValidationError(f"level must lie in (0, 1), got {level}")
    if not se >= 0:
        raise ValidationError(f"standard error must be non-negative, got {se}")
    z = normal_quantile((1.0 + level) / 2.0)
    lo, hi = estimate - z * se, estimate + z * se
    if scale_note == LOG_EXP:
        lo, hi = math.exp(lo), math.exp(hi)
    elif scale_note != NATURAL:
        raise ValidationError(f"unknown scale {scale_note!r}")
    return ConfidenceInterval(lo, hi, level, scale_note)


class ECDF:
    """Right-continuous empirical CDF; ties count with multiplicity."""

    def __init__(self, values):
        self.sorted = np.sort(np.asarray(values, dtype=float))
        self.n = self.sorted.size

    def __call__(self, z):
        return np.searchsorted(self.sorted, z, side="right") / self.n


def ecdf(sample, column: Union[int, str] = 0) -> ECDF:
    return ECDF(as_sample(sample).column(column))


@dataclass(frozen=True)
class Moments:
    """Plug-in moments of a paired sample."""

    mean_xy: float
    mean_x: float
    mean_y: float
    mean_x2: float
    mean_y2: float
    var_x: float
    var_y: float
    cov_xy: float
    n: int
    convention: str = POPULATION

    def as_vector(self) -> np.ndarray:
        """(E[XY], E[X], E[Y], E[X^2], E[Y^2])"""
        return np.array([self.mean_xy, self.mean_x, self.mean_y, self.mean_x2, self.mean_y2])


def sample_moments(pairs, convention: str = POPULATION, columns=(0, 1)) -> Moments:
    """Plain averages of XY, X, Y, X^2, Y^2 plus variances and covariance.

    Variances and covariance use centred sums divided by ``n`` (population)
    or ``n - 1`` (unbiased).
    """
    check_convention(convention)
    s = as_sample(pairs)
    x = s.column(columns[0])
    y = s.column(columns[1])
    n = s.n
    if n < 2:
        raise InsufficientSample("moments need n >= 2")
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    denom = n if convention == POPULATION else n - 1
    return Moments(
        mean_xy=float(np.mean(x * y)),
        mean_x=float(mx),
        mean_y=float(my),
        mean_x2=float(np.mean(x * x)),
        mean_y2=float(np.mean(y * y)),
        var_x=float(dx @ dx / denom),
        var_y=float(dy @ dy / denom),
        cov_xy=float(dx @ dy / denom),
        n=n,
        convention=convention,
    )
