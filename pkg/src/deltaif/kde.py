"""Epanechnikov kernel density estimation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .empirical import as_sample
from .errors import DegenerateSample, InsufficientSample, ValidationError

# Silverman's rule targets a Gaussian kernel; rescale to the Epanechnikov
# kernel supported on [-1, 1].
EPANECHNIKOV_FACTOR = 2.214 / 1.059


def epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def silverman_bandwidth(x) -> float:
    """``0.9 * min(sd, IQR / 1.34) * n**(-1/5)`` scaled for the Epanechnikov kernel."""
    x = np.asarray(x, dtype=float)
    n = x.size
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    # heavy ties can leave a vanishing IQR; fall back to the sd then
    spread = min(sd, iqr / 1.34) if iqr > 1e-8 * sd else sd
    if not spread > 0:
        raise DegenerateSample("sample has zero spread; bandwidth rule degenerates")
    return 0.9 * spread * n ** (-0.2) * EPANECHNIKOV_FACTOR


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    points: np.ndarray
    bandwidth: float
    kernel: str = "epanechnikov"

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def support(self):
        return self.points[0] - self.bandwidth, self.points[-1] + self.bandwidth

    def __call__(self, x):
        return evaluate(self, x)


def fit_kde(sample, bandwidth: Optional[float] = None, column=0) -> DensityEstimate:
    x = np.sort(as_sample(sample).column(column))
    if x.size < 2:
        raise InsufficientSample("density estimation needs n >= 2")
    if x[0] == x[-1]:
        raise DegenerateSample("sample has zero spread")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(x)
    elif not bandwidth > 0:
        raise ValidationError(f"bandwidth must be positive, got {bandwidth}")
    x.setflags(write=False)
    return DensityEstimate(x, float(bandwidth))


def evaluate(estimate: DensityEstimate, x):
    """Density at ``x`` (scalar or array)."""
    pts, h = estimate.points, estimate.bandwidth
    xs = np.asarray(x, dtype=float)
    flat = xs.ravel()
    out = np.empty(flat.size)
    step = max(1, 4_000_000 // pts.size)
    for start in range(0, flat.size, step):
        u = (flat[start : start + step, None] - pts[None, :]) / h
        out[start : start + step] = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0).sum(axis=1)
    out = (out / (pts.size * h)).reshape(xs.shape)
    return float(out) if out.ndim == 0 else out
