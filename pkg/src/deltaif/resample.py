"""Resampling oracles: nonparametric bootstrap and the CLT convergence experiment."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .empirical import ConfidenceInterval, as_sample
from .errors import DeltaIFError, ResampleInstability, UnsupportedDistribution, ValidationError
from .estimands import EstimandSpec, point_estimate

MIN_REPLICATES = 200
MAX_FAILURE_RATE = 0.01


def replicate_rng(seed, index: int) -> np.random.Generator:
    """Independent stream for replicate ``index``; identical however replicates are scheduled."""
    return np.random.default_rng([int(index), int(seed or 0)])


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    se: float
    percentile_ci: ConfidenceInterval
    replicates: int
    estimand_tag: str
    seed: int
    estimates: np.ndarray
    failures: int = 0


def _one(sample, spec, seed, b):
    rng = replicate_rng(seed, b)
    rows = rng.integers(0, sample.n, sample.n)
    try:
        est = point_estimate(sample.take(rows), spec)
    except (DeltaIFError, ArithmeticError, ValueError):
        return math.nan
    return est if math.isfinite(est) else math.nan


def bootstrap(sample, spec: EstimandSpec, B: int = 2000, seed: int = 0, workers: int = 1) -> BootstrapResult:
    """Row-wise nonparametric bootstrap of the estimand in ``spec``.

    The standard error is the sample standard deviation of the replicate
    estimates and the interval is the percentile interval at ``spec.level``.
    """
    if B < MIN_REPLICATES:
        raise ValidationError(f"bootstrap needs B >= {MIN_REPLICATES}, got {B}")
    s = as_sample(sample)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            est = list(pool.map(lambda b: _one(s, spec, seed, b), range(B)))
    else:
        est = [_one(s, spec, seed, b) for b in range(B)]
    est = np.array(est)
    bad = int(np.isnan(est).sum())
    if bad > MAX_FAILURE_RATE * B:
        raise ResampleInstability(f"estimand failed on {bad} of {B} resamples", failures=bad)
    good = est[~np.isnan(est)]
    alpha = 1.0 - spec.level
    lo, hi = np.quantile(good, [alpha / 2, 1 - alpha / 2])
    est.setflags(write=False)
    return BootstrapResult(
        float(np.std(good, ddof=1)),
        ConfidenceInterval(float(lo), float(hi), spec.level),
        B,
        spec.kind,
        seed,
        est,
        bad,
    )


def ks_distance(values, cdf=ndtr) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF of ``values`` and ``cdf``."""
    z = np.sort(np.asarray(values, dtype=float))
    m = z.size
    F = cdf(z)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - F), np.max(F - (i - 1) / m)))


@dataclass(frozen=True, eq=False)
class CltReport:
    distribution: str
    n_values: tuple
    replicates: int
    ks: np.ndarray  # shape (len(n_values), repeats)
    seed: int

    @property
    def mean_ks(self) -> np.ndarray:
        return self.ks.mean(axis=1)

    def rows(self):
        for i, n in enumerate(self.n_values):
            for r, d in enumerate(self.ks[i]):
                yield n, r, float(d)


def _parse_distribution(distribution, param):
    name = distribution.lower()
    if name == "poisson":
        lam = 1.0 if param is None else float(param)
        if not lam > 0:
            raise UnsupportedDistribution("poisson rate must be positive")
        return name, lam, lam, math.sqrt(lam)
    if name == "uniform":
        return name, None, 0.5, math.sqrt(1.0 / 12.0)
    if name == "bernoulli":
        p = 0.5 if param is None else float(param)
        if not 0 < p < 1:
            raise UnsupportedDistribution("bernoulli probability must lie in (0, 1)")
        return name, p, p, math.sqrt(p * (1 - p))
    raise UnsupportedDistribution(f"unsupported distribution {distribution!r}")


def _sample_means(name, param, n, size, rng):
    # Poisson and Bernoulli totals are drawn directly from their exact
    # distributions; uniform means are averaged from raw draws in chunks.
    if name == "poisson":
        return rng.poisson(param * n, size) / n
    if name == "bernoulli":
        return rng.binomial(n, param, size) / n
    out = np.empty(size)
    chunk = max(1, 2_000_000 // n)
    for start in range(0, size, chunk):
        stop = min(size, start + chunk)
        out[start:stop] = rng.random((stop - start, n)).mean(axis=1)
    return out


def clt_experiment(
    distribution: str = "poisson",
    n_values: Sequence[int] = (10, 100, 1000, 10000),
    replicates: int = 2000,
    seed: int = 0,
    param=None,
    repeats: int = 200,
) -> CltReport:
    """KS distance between the law of ``sqrt(n) (mean - mu) / sigma`` and N(0, 1).

    For every ``n`` the experiment is repeated ``repeats`` times, each time
    drawing ``replicates`` standardised means and recording one KS distance.
    """
    if replicates < 100:
        raise ValidationError("clt experiment needs replicates >= 100")
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    name, param, mu, sigma = _parse_distribution(distribution, param)
    n_values = tuple(int(n) for n in n_values)
    if any(n < 1 for n in n_values):
        raise ValidationError("sample sizes must be positive")
    ks = np.empty((len(n_values), repeats))
    for i, n in enumerate(n_values):
        for r in range(repeats):
            rng = np.random.default_rng([r, i, int(seed)])
            means = _sample_means(name, param, n, replicates, rng)
            ks[i, r] = ks_distance(math.sqrt(n) * (means - mu) / sigma)
    return CltReport(name, n_values, replicates, ks, seed)
