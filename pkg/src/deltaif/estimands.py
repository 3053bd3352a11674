"""Plug-in estimands with delta-method / influence-function standard errors.

Each ``*_inference`` function follows the same recipe: compute the plug-in
estimate, differentiate the functional at the plug-in parameters (forward-mode
autodiff, cross-checked against a closed form), turn the gradient into an
influence curve or a quadratic form with the parameter covariance, and build
a Wald interval on the estimand's working scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import autodiff as ad
from .empirical import (
    CONVENTIONS,
    LOG_EXP,
    UNBIASED,
    ConfidenceInterval,
    InfluenceCurve,
    Sample,
    as_sample,
    if_variance,
    wald_ci,
)
from .errors import (
    BoundaryProportion,
    DegenerateCorrelation,
    DegenerateDensity,
    DegenerateVariance,
    DenominatorNearZero,
    DimensionError,
    InsufficientSample,
    ValidationError,
)
from .kde import fit_kde
from .logit import FittedLogit, fit_sample

MEAN = "mean"
RATIO = "ratio_of_means"
RISK_RATIO = "risk_ratio"
QUANTILE = "quantile"
CORRELATION = "correlation"
REGRESSION_RR = "regression_rr"
AF = "attributable_fraction"
KINDS = (MEAN, RATIO, RISK_RATIO, QUANTILE, CORRELATION, REGRESSION_RR, AF)

DENSITY_FLOOR = 1e-8
AF_FLOOR = 1e-12
CORRELATION_TOL = 1e-10


@dataclass(frozen=True)
class EstimandSpec:
    """Which functional to apply and how.

    ``columns`` binds sample columns: one for mean/quantile, (x, y) for the
    paired estimands, (outcome, covariate...) for regression_rr.
    ``profiles`` is a pair of covariate vectors (intercept first) for
    regression_rr.  ``density`` optionally replaces the KDE in quantile
    inference.
    """

    kind: str
    level: float = 0.95
    variance_convention: str = UNBIASED
    columns: tuple = ()
    p: Optional[float] = None
    bandwidth: Optional[float] = None
    density: Optional[Callable] = None
    profiles: Optional[tuple] = None
    denominator_tolerance: float = 5.0
    exposure: Optional[float] = None
    draws: int = 100_000
    threshold: float = 2.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown estimand {self.kind!r}; choose from {KINDS}")
        if not 0 < self.level < 1:
            raise ValidationError(f"level must lie in (0, 1), got {self.level}")
        if self.variance_convention not in CONVENTIONS:
            raise ValidationError(f"variance convention must be one of {CONVENTIONS}")
        object.__setattr__(self, "columns", tuple(self.columns))
        if self.kind == QUANTILE and self.p is not None and not 0 < self.p < 1:
            raise ValidationError(f"quantile probability must lie in (0, 1), got {self.p}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValidationError("bandwidth must be positive")
        if self.kind in (RATIO, CORRELATION) and self.columns and len(self.columns) != 2:
            raise ValidationError(f"{self.kind} binds exactly two columns")
        if self.kind in (MEAN, QUANTILE) and len(self.columns) > 1:
            raise ValidationError(f"{self.kind} binds a single column")
        if self.kind == RATIO and not self.denominator_tolerance >= 0:
            raise ValidationError("denominator tolerance must be non-negative")
        if self.kind == REGRESSION_RR:
            if self.profiles is not None:
                if len(self.profiles) != 2:
                    raise ValidationError("regression_rr needs exactly two profiles")
                a, b = (tuple(float(v) for v in prof) for prof in self.profiles)
                if len(a) != len(b):
                    raise ValidationError("profiles differ in length")
                if self.columns and len(a) != len(self.columns):
                    raise ValidationError(
                        f"profiles have {len(a)} entries; expected intercept + {len(self.columns) - 1} covariates"
                    )
                object.__setattr__(self, "profiles", (a, b))
        if self.kind == AF:
            if self.exposure is not None and not self.exposure > 0:
                raise ValidationError("exposure level must be positive")
            if self.draws < 2:
                raise ValidationError("need at least two Monte-Carlo draws")
            if not self.threshold > 1:
                raise ValidationError("divergence threshold must exceed 1")


@dataclass(frozen=True, eq=False)
class InferenceResult:
    estimate: float
    se: float
    ci: ConfidenceInterval
    n: object
    method: str
    influence_curve: Optional[InfluenceCurve] = None
    diagnostics: dict = field(default_factory=dict)
    warnings: tuple = ()


def _spec(spec, kind, **overrides):
    if spec is None:
        return EstimandSpec(kind, **overrides)
    if spec.kind != kind:
        raise ValidationError(f"spec is for {spec.kind!r}, not {kind!r}")
    return spec


def _xy(pairs: Sample, spec: EstimandSpec):
    cols = spec.columns or (0, 1)
    if pairs.width < 2 and not spec.columns:
        raise DimensionError("paired estimand needs a sample of width 2")
    return pairs.column(cols[0]), pairs.column(cols[1])


def delta_variance(grad, cov) -> float:
    """``grad^T cov grad`` -- first-order variance of a smooth function of an estimate."""
    g = np.atleast_1d(np.asarray(grad, dtype=float))
    c = np.atleast_2d(np.asarray(cov, dtype=float))
    if c.shape != (g.size, g.size):
        raise DimensionError(f"gradient of length {g.size} vs covariance {c.shape}")
    return float(max(g @ c @ g, 0.0))


# ---------------------------------------------------------------- functionals


def ratio(mean_x, mean_y):
    return mean_x / mean_y


def ratio_gradient(mean_x, mean_y):
    return np.array([1.0 / mean_y, -mean_x / mean_y**2])


def correlation(mean_xy, mean_x, mean_y, mean_x2, mean_y2):
    """Pearson correlation written in terms of five raw moments."""
    return (mean_xy - mean_x * mean_y) / (
        ad.sqrt(mean_x2 - mean_x * mean_x) * ad.sqrt(mean_y2 - mean_y * mean_y)
    )


def correlation_gradient(mean_xy, mean_x, mean_y, mean_x2, mean_y2):
    vx = mean_x2 - mean_x**2
    vy = mean_y2 - mean_y**2
    cov = mean_xy - mean_x * mean_y
    sx, sy = math.sqrt(vx), math.sqrt(vy)
    return np.array([
        1.0 / (sx * sy),
        mean_x * cov / (vx**1.5 * sy) - mean_y / (sx * sy),
        -mean_x / (sx * sy) + mean_y * cov / (sx * vy**1.5),
        -cov / (2.0 * vx**1.5 * sy),
        -cov / (2.0 * sx * vy**1.5),
    ])


def risk_ratio_functional(profile_a, profile_b):
    """``beta -> P(Y=1 | a) / P(Y=1 | b)`` under a logistic model."""
    a = tuple(float(v) for v in profile_a)
    b = tuple(float(v) for v in profile_b)

    def phi(*beta):
        eta_a = sum(ai * bi for ai, bi in zip(a, beta) if ai != 0.0)
        eta_b = sum(bi_ * bi for bi_, bi in zip(b, beta) if bi_ != 0.0)
        return ad.expit(eta_a) / ad.expit(eta_b)

    return phi


def risk_ratio_gradient(beta, profile_a, profile_b):
    """Closed form: ``RR * ((1 - p_a) a - (1 - p_b) b)``."""
    beta = np.asarray(beta, dtype=float)
    a = np.asarray(profile_a, dtype=float)
    b = np.asarray(profile_b, dtype=float)
    pa = 1.0 / (1.0 + math.exp(-(a @ beta)))
    pb = 1.0 / (1.0 + math.exp(-(b @ beta)))
    return (pa / pb) * ((1.0 - pa) * a - (1.0 - pb) * b)


def mono_dual_rr_gradient(b0, b1, b2):
    """Hand-derived gradient of ``(1 + e^-(b0+b1+b2)) / (1 + e^-(b0+b1))``.

    This is the risk ratio of profile (1, 1, 0) over profile (1, 1, 1).
    """
    e = math.exp(b0 + b1)
    c = -math.exp(-b2) / (e + 1.0) ** 2
    return c * np.array([(1.0 - math.exp(b2)) * e, (1.0 - math.exp(b2)) * e, e + 1.0])


def af_exposed(theta, x):
    """Attributable fraction among the exposed for ``RR = exp(x / theta)``."""
    if theta <= 0:
        return 1.0
    return 1.0 - ad.exp(-x / theta)


# ---------------------------------------------------------------- estimands


def mean_inference(sample, spec: Optional[EstimandSpec] = None) -> InferenceResult:
    spec = _spec(spec, MEAN)
    s = as_sample(sample)
    x = s.column(spec.columns[0] if spec.columns else 0)
    n = x.size
    if n < 2:
        raise InsufficientSample("mean inference needs n >= 2")
    if x[0] == x.min() == x.max():
        est = float(x[0])
        curve = np.zeros(n)
    else:
        est = float(x.mean())
        curve = x - est
    ic = InfluenceCurve(curve, MEAN, spec.variance_convention)
    se = math.sqrt(if_variance(ic))
    return InferenceResult(
        est, se, wald_ci(est, se, spec.level), n, "influence_function", ic,
        {"gradient": [1.0], "variance_convention": spec.variance_convention},
    )


def ratio_of_means_inference(pairs, spec: Optional[EstimandSpec] = None) -> InferenceResult:
    spec = _spec(spec, RATIO)
    s = as_sample(pairs)
    x, y = _xy(s, spec)
    n = s.n
    if n < 2:
        raise InsufficientSample("ratio inference needs n >= 2")
    mx, my = float(x.mean()), float(y.mean())
    sd_y = float(np.std(y, ddof=1))
    if abs(my) == 0 or abs(my) < spec.denominator_tolerance * sd_y / math.sqrt(n):
        raise DenominatorNearZero(
            f"|mean(Y)| = {abs(my):.3g} is within {spec.denominator_tolerance} standard errors of zero"
        )
    grad = ad.gradient(ratio, [mx, my])
    closed = ratio_gradient(mx, my)
    curve = grad[0] * (x - mx) + grad[1] * (y - my)
    ic = InfluenceCurve(curve, RATIO, spec.variance_convention)
    se = math.sqrt(if_variance(ic))

    ddof = 1 if spec.variance_convention == UNBIASED else 0
    c = np.cov(x, y, ddof=ddof)
    closed_var = (c[0, 0] / my**2 + mx**2 * c[1, 1] / my**4 - 2.0 * mx / my**3 * c[0, 1]) / n
    est = mx / my
    return InferenceResult(
        est, se, wald_ci(est, se, spec.level), n, "influence_function", ic,
        {
            "gradient": grad.tolist(),
            "gradient_closed_form": closed.tolist(),
            "closed_form_se": math.sqrt(max(closed_var, 0.0)),
            "variance_convention": spec.variance_convention,
        },
    )


def risk_ratio_inference(p1, n1, p2, n2, spec: Optional[EstimandSpec] = None) -> InferenceResult:
    """Risk ratio ``p1 / p2`` with the interval built on the log scale.

    The reported ``se`` is the standard error of ``log(RR)``.
    """
    spec = _spec(spec, RISK_RATIO)
    p1, p2 = float(p1), float(p2)
    for name, pv in (("p1", p1), ("p2", p2)):
        if pv in (0.0, 1.0):
            raise BoundaryProportion(f"{name} = {pv}: log risk ratio variance is undefined")
        if not 0 < pv < 1:
            raise ValidationError(f"{name} must lie in (0, 1), got {pv}")
    if n1 < 1 or n2 < 1 or int(n1) != n1 or int(n2) != n2:
        raise ValidationError("group sizes must be positive integers")
    n1, n2 = int(n1), int(n2)
    log_rr = math.log(p1) - math.log(p2)
    grad = ad.gradient(lambda a, b: ad.log(a) - ad.log(b), [p1, p2])
    cov = np.diag([p1 * (1 - p1) / n1, p2 * (1 - p2) / n2])
    se = math.sqrt(delta_variance(grad, cov))
    warnings = []
    for name, nn, pv in (("group 1", n1, p1), ("group 2", n2, p2)):
        if nn * pv * (1 - pv) < 9:
            warnings.append(f"{name}: n p (1 - p) = {nn * pv * (1 - pv):.3g} < 9; normal approximation doubtful")
    return InferenceResult(
        p1 / p2, se, wald_ci(log_rr, se, spec.level, LOG_EXP), (n1, n2), "delta_method",
        None, {"log_estimate": log_rr, "gradient": grad.tolist()}, tuple(warnings),
    )


def sample_quantile(x, p: float) -> float:
    """Smallest observation whose empirical CDF reaches ``p``."""
    xs = np.sort(np.asarray(x, dtype=float))
    n = xs.size
    # first k with k / n >= p
    k = int(np.searchsorted(np.arange(1, n + 1) / n, p, side="left"))
    return float(xs[min(k, n - 1)])


def quantile_inference(sample, p: Optional[float] = None, spec: Optional[EstimandSpec] = None) -> InferenceResult:
    spec = _spec(spec, QUANTILE, p=p)
    p = spec.p if p is None else float(p)
    if p is None or not 0 < p < 1:
        raise ValidationError(f"quantile probability must lie in (0, 1), got {p}")
    s = as_sample(sample)
    x = s.column(spec.columns[0] if spec.columns else 0)
    n = x.size
    if n < 20:
        raise InsufficientSample("quantile inference needs n >= 20")
    q = sample_quantile(x, p)
    diagnostics = {"p": p}
    if spec.density is not None:
        fq = float(spec.density(q))
        diagnostics["density"] = "injected"
    else:
        kde = fit_kde(x, spec.bandwidth)
        fq = float(kde(q))
        diagnostics["density"] = "epanechnikov_kde"
        diagnostics["bandwidth"] = kde.bandwidth
    diagnostics["density_at_estimate"] = fq
    if not fq >= DENSITY_FLOOR:
        raise DegenerateDensity(f"density estimate {fq:.3g} at the quantile is below {DENSITY_FLOOR}")
    curve = ((x <= q).astype(float) - p) / fq
    ic = InfluenceCurve(curve, QUANTILE, spec.variance_convention)
    se = math.sqrt(p * (1 - p) / (n * fq * fq))
    diagnostics["if_sample_se"] = math.sqrt(if_variance(ic))
    return InferenceResult(q, se, wald_ci(q, se, spec.level), n, "influence_function", ic, diagnostics)


_FEATURES = ("xy", "x", "y", "x2", "y2")


def _moment_features(x, y):
    return np.column_stack([x * y, x, y, x * x, y * y])


def correlation_inference(pairs, spec: Optional[EstimandSpec] = None) -> InferenceResult:
    spec = _spec(spec, CORRELATION)
    s = as_sample(pairs)
    x, y = _xy(s, spec)
    n = s.n
    if n < 3:
        raise InsufficientSample("correlation inference needs n >= 3")
    for name, v in (("X", x), ("Y", y)):
        d = v - v.mean()
        if not d @ d > 1e-14 * max(v @ v, np.finfo(float).tiny):
            raise DegenerateVariance(f"{name} has (near) zero variance")
    feats = _moment_features(x, y)
    mu = feats.mean(axis=0)
    rho = float(correlation(*mu))
    if abs(rho) >= 1.0 - CORRELATION_TOL:
        raise DegenerateCorrelation(f"|rho| = {abs(rho):.12g}; influence variance collapses")
    grad = ad.gradient(correlation, mu)
    closed = correlation_gradient(*mu)
    h = (feats - mu) @ grad
    ic = InfluenceCurve(h, CORRELATION, spec.variance_convention)
    se = math.sqrt(if_variance(ic))
    return InferenceResult(
        rho, se, wald_ci(rho, se, spec.level), n, "influence_function", ic,
        {
            "moments": dict(zip(_FEATURES, mu.tolist())),
            "gradient": grad.tolist(),
            "gradient_closed_form": closed.tolist(),
            "variance_convention": spec.variance_convention,
        },
    )


def regression_rr_inference(fit: FittedLogit, profile_a, profile_b, spec: Optional[EstimandSpec] = None) -> InferenceResult:
    """Risk ratio between two covariate profiles under a fitted logistic model.

    The interval is built on the natural (ratio) scale.
    """
    spec = _spec(spec, REGRESSION_RR)
    a = np.asarray(profile_a, dtype=float).ravel()
    b = np.asarray(profile_b, dtype=float).ravel()
    k = fit.coefficients.size
    if a.size != k or b.size != k:
        raise DimensionError(f"profiles have {a.size} and {b.size} entries; model has {k} coefficients")
    beta = fit.coefficients
    phi = risk_ratio_functional(a, b)
    est = float(phi(*beta))
    grad = ad.gradient(phi, beta)
    se = math.sqrt(delta_variance(grad, fit.covariance))
    return InferenceResult(
        est, se, wald_ci(est, se, spec.level), fit.n, "delta_method", None,
        {
            "gradient": grad.tolist(),
            "gradient_closed_form": risk_ratio_gradient(beta, a, b).tolist(),
            "p_a": float(ad.expit(float(a @ beta))),
            "p_b": float(ad.expit(float(b @ beta))),
            "profile_a": a.tolist(),
            "profile_b": b.tolist(),
        },
    )


@dataclass(frozen=True)
class AFDiagnostic:
    estimate: float
    derivative: float
    delta_se: float
    monte_carlo_se: float
    divergence_ratio: float
    warning: bool
    message: str = ""


def attributable_fraction_diagnostic(theta_hat, se_theta, x, spec: Optional[EstimandSpec] = None) -> AFDiagnostic:
    """Compare the delta-method SE of AF_e(x; theta) with a Monte-Carlo SE.

    Draws ``theta* ~ Normal(theta_hat, se_theta^2)`` and takes the standard
    deviation of ``AF_e(x; theta*)``.  A warning is raised when the two SEs
    differ by more than ``spec.threshold`` in either direction.
    """
    spec = _spec(spec, AF, exposure=x)
    if not x > 0:
        raise ValidationError(f"exposure level must be positive, got {x}")
    if not se_theta >= 0:
        raise ValidationError("se_theta must be non-negative")
    theta_hat, se_theta, x = float(theta_hat), float(se_theta), float(x)
    est = float(af_exposed(theta_hat, x))
    deriv = float(ad.gradient(lambda t: af_exposed(t, x), [theta_hat])[0])
    delta_se = abs(deriv) * se_theta

    rng = np.random.default_rng(spec.seed)
    thetas = theta_hat + se_theta * rng.standard_normal(spec.draws)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        af = np.where(thetas > 0, -np.expm1(-x / np.where(thetas > 0, thetas, 1.0)), 1.0)
    mc_se = float(np.std(af, ddof=1))

    ratio_ = mc_se / max(delta_se, AF_FLOOR)
    if mc_se == 0 and delta_se == 0:
        ratio_ = 1.0
    warn = ratio_ > spec.threshold or ratio_ < 1.0 / spec.threshold
    msg = ""
    if warn:
        msg = (
            f"delta-method SE {delta_se:.3g} and Monte-Carlo SE {mc_se:.3g} differ by a factor "
            f"{ratio_:.3g}; the linearisation is unreliable here"
        )
    return AFDiagnostic(est, deriv, delta_se, mc_se, ratio_, warn, msg)


# ---------------------------------------------------------------- dispatch


def infer(sample, spec: EstimandSpec) -> InferenceResult:
    """Run a sample-based estimand described by ``spec``."""
    s = as_sample(sample)
    if spec.kind == MEAN:
        return mean_inference(s, spec)
    if spec.kind == RATIO:
        return ratio_of_means_inference(s, spec)
    if spec.kind == QUANTILE:
        return quantile_inference(s, spec=spec)
    if spec.kind == CORRELATION:
        return correlation_inference(s, spec)
    if spec.kind == REGRESSION_RR:
        if spec.profiles is None:
            raise ValidationError("regression_rr needs two covariate profiles")
        cols = spec.columns or tuple(s.columns)
        fit = fit_sample(s, cols[0], cols[1:])
        return regression_rr_inference(fit, *spec.profiles, spec)
    raise ValidationError(f"{spec.kind} is not computed from an individual-level sample")


def point_estimate(sample, spec: EstimandSpec) -> float:
    """The estimand's plug-in value alone (no standard error)."""
    s = as_sample(sample)
    if spec.kind == MEAN:
        return float(s.column(spec.columns[0] if spec.columns else 0).mean())
    if spec.kind == RATIO:
        x, y = _xy(s, spec)
        return float(x.mean() / y.mean())
    if spec.kind == QUANTILE:
        if spec.p is None:
            raise ValidationError("quantile needs p")
        return sample_quantile(s.column(spec.columns[0] if spec.columns else 0), spec.p)
    if spec.kind == CORRELATION:
        x, y = _xy(s, spec)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = float(correlation(*_moment_features(x, y).mean(axis=0)))
        if not math.isfinite(r):
            raise DegenerateVariance("correlation undefined on a constant column")
        return r
    if spec.kind == REGRESSION_RR:
        if spec.profiles is None:
            raise ValidationError("regression_rr needs two covariate profiles")
        cols = spec.columns or tuple(s.columns)
        fit = fit_sample(s, cols[0], cols[1:])
        return float(risk_ratio_functional(*spec.profiles)(*fit.coefficients))
    raise ValidationError(f"{spec.kind} is not computed from an individual-level sample")
