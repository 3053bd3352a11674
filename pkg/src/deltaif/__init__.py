"""Delta-method and influence-function standard errors for plug-in estimators."""

from .autodiff import Dual, check_gradient, directional_derivative, gradient, jacobian
from .empirical import (
    ConfidenceInterval,
    InfluenceCurve,
    Sample,
    ecdf,
    if_variance,
    normal_quantile,
    sample_moments,
    wald_ci,
)
from .estimands import (
    EstimandSpec,
    InferenceResult,
    attributable_fraction_diagnostic,
    correlation_inference,
    infer,
    mean_inference,
    quantile_inference,
    ratio_of_means_inference,
    regression_rr_inference,
    risk_ratio_inference,
)
from .kde import DensityEstimate, fit_kde
from .logit import FittedLogit, fit_logistic, predict_prob, simulate_mortality_trial
from .resample import BootstrapResult, CltReport, bootstrap, clt_experiment

__version__ = "0.1.0"
