"""Logistic regression by IRLS with model-based (Fisher information) covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .empirical import Sample
from .errors import DimensionError, InsufficientSample, RankDeficient, Separation, ValidationError

MAX_ITER = 50
TOL = 1e-10
SEPARATION_BOUND = 30.0
RANK_TOL = 1e-12


def _expit(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def _deviance(y, eta):
    # -2 log-likelihood, computed without forming log(p)
    return 2.0 * float(np.sum(np.logaddexp(0.0, eta) - y * eta))


def _cholesky(a):
    """Cholesky factor of a symmetric matrix, RankDeficient if any pivot is tiny."""
    k = a.shape[0]
    L = np.zeros_like(a)
    tol = RANK_TOL * float(np.max(np.diag(a)))
    for j in range(k):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if not d > tol:
            raise RankDeficient(f"information matrix is rank deficient at column {j}")
        L[j, j] = np.sqrt(d)
        L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def _spd_solve(L, b):
    z = np.linalg.solve(L, b)
    return np.linalg.solve(L.T, z)


def _spd_inverse(a):
    L = _cholesky(a)
    inv = _spd_solve(L, np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


@dataclass(frozen=True, eq=False)
class FittedLogit:
    coefficients: np.ndarray
    covariance: np.ndarray
    n: int
    converged: bool
    iterations: int
    deviance: float
    names: tuple = ()

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def fit_logistic(design, y, names=()) -> FittedLogit:
    """Maximum-likelihood logistic regression.

    ``design`` must already contain the intercept column.  Newton/IRLS steps
    are halved while they increase the deviance.  Iteration stops once the
    largest coefficient change falls below 1e-10, or after 50 steps.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise DimensionError("design must be a matrix")
    n, k = X.shape
    if y.size != n:
        raise DimensionError(f"design has {n} rows but y has {y.size}")
    if n <= k:
        raise InsufficientSample(f"need more rows ({n}) than coefficients ({k})")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("outcome must be binary 0/1")
    if not np.all(np.isfinite(X)):
        raise ValidationError("design contains non-finite values")
    _cholesky(X.T @ X)

    beta = np.zeros(k)
    eta = X @ beta
    dev = _deviance(y, eta)
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        p = _expit(eta)
        w = p * (1.0 - p)
        info = X.T @ (X * w[:, None])
        try:
            step = _spd_solve(_cholesky(info), X.T @ (y - p))
        except RankDeficient:
            if np.max(np.abs(beta)) > SEPARATION_BOUND / 2 or np.all(w < 1e-8):
                raise Separation("fitted probabilities pinned at 0/1") from None
            raise
        t = 1.0
        while True:
            cand = beta + t * step
            cand_eta = X @ cand
            cand_dev = _deviance(y, cand_eta)
            if cand_dev <= dev + 1e-12 * (1.0 + abs(dev)) or t < 1e-8:
                break
            t *= 0.5
        delta = np.max(np.abs(cand - beta))
        beta, eta, dev = cand, cand_eta, cand_dev
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            raise Separation(f"coefficients diverging (max |beta| = {np.max(np.abs(beta)):.3g})")
        if delta < TOL:
            converged = True
            break

    p = _expit(eta)
    info = X.T @ (X * (p * (1.0 - p))[:, None])
    cov = _spd_inverse(info)
    beta.setflags(write=False)
    cov.setflags(write=False)
    return FittedLogit(beta, cov, n, converged, it, dev, tuple(names))


def predict_prob(fit: FittedLogit, profile) -> float:
    x = np.asarray(profile, dtype=float).ravel()
    if x.size != fit.coefficients.size:
        raise DimensionError(f"profile has {x.size} entries, model has {fit.coefficients.size}")
    return float(_expit(x @ fit.coefficients))


def fit_sample(sample: Sample, outcome, covariates) -> FittedLogit:
    """Fit ``outcome ~ covariates`` from named sample columns (intercept added)."""
    y = sample.column(outcome)
    X = np.column_stack([np.ones(sample.n)] + [sample.column(c) for c in covariates])
    names = ("intercept",) + tuple(sample.columns[sample.index(c)] for c in covariates)
    return fit_logistic(X, y, names)


def negative_loglik(design, y, beta) -> float:
    X = np.asarray(design, dtype=float)
    eta = X @ np.asarray(beta, dtype=float)
    return 0.5 * _deviance(np.asarray(y, dtype=float), eta)


def simulate_mortality_trial(n: int, seed=None, counterfactuals: bool = False):
    """Simulated cancer-treatment trial with columns (age, treat, death).

    age ~ Bernoulli(0.6); treat ~ Bernoulli(expit(0.35 - 0.15 age));
    potential outcomes death_a ~ Bernoulli(expit(2 - a + 0.65 age)); the
    observed death is the potential outcome under the received treatment.

    With ``counterfactuals=True`` returns ``(sample, death1, death0)``.
    """
    if n < 1:
        raise InsufficientSample("n must be >= 1")
    rng = np.random.default_rng(seed)
    age = rng.binomial(1, 0.6, n)
    treat = rng.binomial(1, _expit(0.35 - 0.15 * age))
    death1 = rng.binomial(1, _expit(2.0 - 1.0 + 0.65 * age))
    death0 = rng.binomial(1, _expit(2.0 - 0.0 + 0.65 * age))
    death = death1 * treat + death0 * (1 - treat)
    sample = Sample.from_columns(age=age, treat=treat, death=death)
    if counterfactuals:
        return sample, death1.astype(float), death0.astype(float)
    return sample
