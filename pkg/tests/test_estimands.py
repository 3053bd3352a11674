import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deltaif import autodiff as ad
from deltaif.empirical import LOG_EXP, NATURAL, Sample
from deltaif.errors import (
    BoundaryProportion,
    DegenerateCorrelation,
    DegenerateDensity,
    DegenerateVariance,
    DenominatorNearZero,
    DimensionError,
    InsufficientSample,
    ValidationError,
)
from deltaif.estimands import (
    EstimandSpec,
    af_exposed,
    attributable_fraction_diagnostic,
    correlation,
    correlation_gradient,
    correlation_inference,
    delta_variance,
    infer,
    mean_inference,
    mono_dual_rr_gradient,
    point_estimate,
    quantile_inference,
    ratio,
    ratio_gradient,
    ratio_of_means_inference,
    regression_rr_inference,
    risk_ratio_functional,
    risk_ratio_gradient,
    risk_ratio_inference,
    sample_quantile,
)
from deltaif.logit import FittedLogit, fit_sample, simulate_mortality_trial


def forced_bivariate_normal(n, r, seed):
    """Standard bivariate normal sample with sample means 0, sds 1 and correlation r exactly."""
    z = np.random.default_rng(seed).standard_normal((n, 2))
    z -= z.mean(axis=0)
    z = z @ np.linalg.inv(np.linalg.cholesky(np.cov(z.T))).T
    return z @ np.linalg.cholesky(np.array([[1.0, r], [r, 1.0]])).T


def fake_fit(beta, cov, n=100):
    return FittedLogit(np.asarray(beta, float), np.asarray(cov, float), n, True, 1, 0.0)


class TestSpec:
    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            EstimandSpec("median")

    @pytest.mark.parametrize("level", [0.0, 1.0, -1.0])
    def test_level(self, level):
        with pytest.raises(ValidationError):
            EstimandSpec("mean", level=level)

    def test_quantile_p(self):
        with pytest.raises(ValidationError):
            EstimandSpec("quantile", p=1.5)

    def test_profile_lengths(self):
        with pytest.raises(ValidationError):
            EstimandSpec("regression_rr", profiles=((1, 0), (1, 0, 1)))
        with pytest.raises(ValidationError):
            EstimandSpec("regression_rr", columns=("y", "a"), profiles=((1, 0, 0), (1, 0, 1)))

    def test_wrong_spec_kind(self):
        with pytest.raises(ValidationError):
            mean_inference([1.0, 2.0], EstimandSpec("correlation"))


class TestMean:
    def test_constant(self):
        res = mean_inference([0.1, 0.1, 0.1])
        assert res.estimate == 0.1 and res.se == 0.0
        assert (res.ci.lower, res.ci.upper) == (0.1, 0.1)

    def test_hand_example(self):
        res = mean_inference([1.0, 2.0, 3.0])
        assert res.estimate == 2.0
        np.testing.assert_array_equal(res.influence_curve.values, [-1.0, 0.0, 1.0])
        assert res.se == pytest.approx(math.sqrt(1 / 3), rel=1e-15)

    def test_population_convention(self):
        res = mean_inference([1.0, 2.0, 3.0], EstimandSpec("mean", variance_convention="population"))
        assert res.se == pytest.approx(math.sqrt(2 / 9), rel=1e-15)

    def test_uniform_reference_scale(self):
        # reference SE 0.009161893; across seeds the SE has mean 0.00912 and sd 0.00012
        y = np.random.default_rng(7777).random(1000)
        res = mean_inference(y)
        assert abs(res.se - 0.009161893) < 5e-4
        assert res.se == pytest.approx(1 / math.sqrt(12_000), rel=0.06)

    def test_errors(self):
        with pytest.raises(InsufficientSample):
            mean_inference([1.0])
        with pytest.raises(ValidationError):
            mean_inference([1.0, np.inf])


class TestRatio:
    def test_identical_columns(self):
        x = np.random.default_rng(1).normal(5, 1, 40)
        res = ratio_of_means_inference(np.column_stack([x, x]))
        assert res.estimate == pytest.approx(1.0, rel=1e-15)
        assert res.se < 1e-14

    def test_hand_example(self):
        # X = (1, 3), Y = (2, 4): Var X = Var Y = Cov = 2 (n - 1 denominators)
        # se^2 = (1/2) [2/9 + 4 * 2 / 81 - 2 * (2/27) * 2] = 1/81
        spec = EstimandSpec("ratio_of_means", denominator_tolerance=1.0)
        res = ratio_of_means_inference([[1, 2], [3, 4]], spec)
        assert res.estimate == pytest.approx(2 / 3, rel=1e-15)
        assert res.se == pytest.approx(1 / 9, rel=1e-13)
        assert res.diagnostics["closed_form_se"] == pytest.approx(1 / 9, rel=1e-13)

    def test_guard_default(self):
        with pytest.raises(DenominatorNearZero):
            ratio_of_means_inference([[1, 2], [3, 4]])
        with pytest.raises(DenominatorNearZero):
            ratio_of_means_inference(np.random.default_rng(0).normal(0, 1, (100, 2)))

    def test_bivariate_normal_reference_scale(self):
        # reference 0.7541776 / 0.01054424; across seeds est sd 0.0097, se sd 0.00029
        d = np.random.default_rng(123).multivariate_normal([3, 4], [[1, 0.3], [0.3, 2]], 1000)
        res = ratio_of_means_inference(d)
        assert abs(res.estimate - 0.7541776) < 4 * 0.0097
        assert abs(res.se - 0.01054424) < 4 * 0.00029

    def test_named_columns(self):
        s = Sample.from_columns(a=[5, 1, 6, 2.0], b=[1, 2, 3, 4.0], c=[8, 9, 10, 11.0])
        spec = EstimandSpec("ratio_of_means", columns=("b", "c"))
        assert ratio_of_means_inference(s, spec).estimate == pytest.approx(2.5 / 9.5)


class TestRiskRatio:
    def test_reference_two_arm(self):
        res = risk_ratio_inference(0.6, 100, 0.4, 100)
        assert res.estimate == pytest.approx(1.5, abs=1e-12)
        assert res.se == pytest.approx(0.147196, abs=1e-6)
        assert res.ci.lower == pytest.approx(1.124081, abs=1e-6)
        assert res.ci.upper == pytest.approx(2.001634, abs=1e-6)
        assert res.ci.scale_note == LOG_EXP
        assert res.warnings == ()

    def test_equal_groups(self):
        res = risk_ratio_inference(0.3, 80, 0.3, 80)
        assert res.estimate == 1.0
        assert math.log(res.ci.lower) == pytest.approx(-math.log(res.ci.upper), rel=1e-12)

    def test_hand_variance(self):
        res = risk_ratio_inference(0.5, 50, 0.5, 50)
        assert res.se == pytest.approx(0.2, rel=1e-14)

    @pytest.mark.parametrize("p1, p2", [(0.0, 0.4), (1.0, 0.4), (0.4, 0.0), (0.4, 1.0)])
    def test_boundary(self, p1, p2):
        with pytest.raises(BoundaryProportion):
            risk_ratio_inference(p1, 10, p2, 10)

    def test_small_cell_warning(self):
        res = risk_ratio_inference(0.1, 20, 0.4, 100)
        assert len(res.warnings) == 1 and "group 1" in res.warnings[0]

    @given(st.floats(0.01, 0.99), st.integers(1, 500), st.floats(0.01, 0.99), st.integers(1, 500))
    def test_swap(self, p1, n1, p2, n2):
        a = risk_ratio_inference(p1, n1, p2, n2)
        b = risk_ratio_inference(p2, n2, p1, n1)
        assert b.diagnostics["log_estimate"] == -a.diagnostics["log_estimate"]
        assert b.se == pytest.approx(a.se, rel=1e-15)
        assert b.estimate == pytest.approx(1 / a.estimate, rel=1e-14)
        assert b.ci.lower == pytest.approx(1 / a.ci.upper, rel=1e-14)
        assert b.ci.upper == pytest.approx(1 / a.ci.lower, rel=1e-14)


class TestQuantile:
    def test_injected_density(self):
        x = np.random.default_rng(3).random(100)
        res = quantile_inference(x, 0.25, EstimandSpec("quantile", p=0.25, density=lambda q: 1.0))
        assert res.se == pytest.approx(0.043301, abs=5e-7)
        assert res.se == pytest.approx(math.sqrt(0.25 * 0.75 / 100), rel=1e-14)

    def test_min_definition(self):
        x = np.arange(1.0, 22.0)  # 21 points, median 11
        assert sample_quantile(x, 0.5) == 11.0
        res = quantile_inference(x - 11.0, 0.5)
        assert res.estimate == 0.0
        # ties: F_n jumps straight past p
        assert sample_quantile([1, 2, 2, 2, 3], 0.3) == 2.0
        assert sample_quantile([1, 2, 3, 4], 0.25) == 1.0

    def test_matches_enumeration(self, rng):
        x = rng.normal(size=37)
        for p in np.linspace(0.01, 0.99, 41):
            brute = min(v for v in x if np.mean(x <= v) >= p)
            assert sample_quantile(x, p) == brute

    def test_normal_lower_quartile_reference(self):
        # reference interval 49.28908 .. 49.46078 (width 0.1717)
        y = np.random.default_rng(7777).normal(50, 1, 1000)
        res = quantile_inference(y, 0.25)
        assert abs(res.estimate - 49.3255) < 0.15
        assert res.ci.width == pytest.approx(49.46078 - 49.28908, rel=0.2)

    def test_influence_curve(self, rng):
        x = rng.normal(size=200)
        res = quantile_inference(x, 0.3)
        f = res.diagnostics["density_at_estimate"]
        np.testing.assert_allclose(res.influence_curve.values, ((x <= res.estimate) - 0.3) / f)

    def test_degenerate_density(self):
        x = np.arange(30.0)
        with pytest.raises(DegenerateDensity):
            quantile_inference(x, 0.5, EstimandSpec("quantile", p=0.5, density=lambda q: 0.0))

    def test_errors(self):
        with pytest.raises(InsufficientSample):
            quantile_inference(np.arange(10.0), 0.5)
        with pytest.raises(ValidationError):
            quantile_inference(np.arange(30.0), 1.5)


class TestCorrelation:
    def test_perfect(self):
        x = np.linspace(0, 1, 20)
        with pytest.raises(DegenerateCorrelation):
            correlation_inference(np.column_stack([x, x]))

    def test_constant(self):
        with pytest.raises(DegenerateVariance):
            correlation_inference(np.column_stack([np.ones(5), np.arange(5.0)]))

    def test_perturbed(self):
        d = np.array([[-1, -1], [0, 1e-3], [1, 1]])
        res = correlation_inference(d)
        assert res.estimate < 1
        h = res.influence_curve.values
        assert abs(h.mean()) < 1e-10 * (np.max(np.abs(h)) + 1)

    def test_forced_correlation_reference(self):
        # reference 0.8107681 .. 0.8492319; across seeds each bound has sd 0.0006
        res = correlation_inference(forced_bivariate_normal(1000, 0.83, 1))
        assert res.estimate == pytest.approx(0.83, abs=1e-12)
        assert abs(res.ci.lower - 0.8107681) < 0.0025
        assert abs(res.ci.upper - 0.8492319) < 0.0025

    def test_matches_numpy(self, rng):
        d = rng.normal(size=(60, 2)) @ np.array([[1, 0.4], [0, 1]])
        assert correlation_inference(d).estimate == pytest.approx(np.corrcoef(d.T)[0, 1], rel=1e-12)


class TestRegressionRR:
    def test_same_profile(self):
        fit = fake_fit([0.3, -0.2, 1.0], np.eye(3))
        res = regression_rr_inference(fit, [1, 1, 0], [1, 1, 0])
        assert res.estimate == 1.0 and res.se == 0.0

    def test_origin_identity_covariance(self):
        # gradient at 0: RR [(1 - 1/2) a - (1 - 1/2) b] = (0, 1/2, -1/2)
        fit = fake_fit([0, 0, 0], np.eye(3))
        res = regression_rr_inference(fit, [1, 1, 0], [1, 0, 1])
        assert res.estimate == 1.0
        np.testing.assert_allclose(res.diagnostics["gradient"], [0, 0.5, -0.5], atol=1e-15)
        assert res.se == pytest.approx(math.sqrt(0.5), rel=1e-14)
        assert res.ci.scale_note == NATURAL

    def test_dimension(self):
        with pytest.raises(DimensionError):
            regression_rr_inference(fake_fit([0, 0, 0], np.eye(3)), [1, 0], [1, 1])

    @pytest.mark.parametrize("profiles", [((1, 1, 0), (1, 0, 1)), ((1, 0, 0), (1, 0, 1)), ((1, 1, 0), (1, 1, 1))])
    def test_profile_pairs(self, profiles):
        s = simulate_mortality_trial(1000, 1972)
        fit = fit_sample(s, "death", ["age", "treat"])
        res = regression_rr_inference(fit, *profiles)
        g = np.array(res.diagnostics["gradient"])
        assert res.se == pytest.approx(math.sqrt(g @ fit.covariance @ g), rel=1e-14)
        np.testing.assert_allclose(g, res.diagnostics["gradient_closed_form"], rtol=1e-10)
        assert res.ci.lower < res.estimate < res.ci.upper

    def test_trial_reference_scale(self):
        # profile (age=1, treat=0) over (age=0, treat=1); truth expit(2.65) / expit(1)
        s = simulate_mortality_trial(1000, 1972)
        fit = fit_sample(s, "death", ["age", "treat"])
        res = regression_rr_inference(fit, [1, 1, 0], [1, 0, 1])
        truth = (1 / (1 + math.exp(-2.65))) / (1 / (1 + math.exp(-1.0)))
        assert abs(res.estimate - truth) < 4 * res.se
        assert abs(res.estimate - 1.330238) < 4 * res.se


class TestAF:
    def test_zero_theta(self):
        d = attributable_fraction_diagnostic(0.0, 0.05, 1.0, EstimandSpec("attributable_fraction", seed=1))
        assert d.delta_se == 0.0
        assert d.monte_carlo_se > 0
        assert d.warning

    def test_smooth_regime(self):
        d = attributable_fraction_diagnostic(5.0, 0.1, 1.0, EstimandSpec("attributable_fraction", seed=2))
        assert d.delta_se == pytest.approx(d.monte_carlo_se, rel=0.1)
        assert d.derivative == pytest.approx(-math.exp(-0.2) / 25, rel=1e-14)
        assert not d.warning

    def test_tiny_se(self):
        d = attributable_fraction_diagnostic(5.0, 1e-12, 1.0, EstimandSpec("attributable_fraction", seed=3))
        assert d.delta_se < 1e-13 and d.monte_carlo_se < 1e-13

    def test_exposure(self):
        with pytest.raises(ValidationError):
            attributable_fraction_diagnostic(1.0, 0.1, 0.0)

    def test_function_branches(self):
        assert af_exposed(-1.0, 2.0) == 1.0
        assert af_exposed(2.0, 2.0) == pytest.approx(1 - math.exp(-1))
        assert ad.gradient(lambda t: af_exposed(t, 1.0), [-0.5])[0] == 0.0

    def test_deterministic(self):
        spec = EstimandSpec("attributable_fraction", seed=9)
        assert attributable_fraction_diagnostic(0.01, 0.05, 1.0, spec) == attributable_fraction_diagnostic(0.01, 0.05, 1.0, spec)


# ---------------------------------------------------------------- properties

moment_points = st.tuples(
    st.floats(-2, 2), st.floats(-2, 2), st.floats(0.5, 2), st.floats(0.5, 2), st.floats(-0.9, 0.9)
)


def moments_from(mx, my, sx, sy, r):
    return (r * sx * sy + mx * my, mx, my, sx * sx + mx * mx, sy * sy + my * my)


@given(moment_points)
def test_correlation_gradient_routes(p):
    m = moments_from(*p)
    auto = ad.gradient(correlation, m)
    np.testing.assert_allclose(auto, correlation_gradient(*m), rtol=1e-8, atol=1e-12)


@given(st.floats(-10, 10), st.floats(0.5, 10) | st.floats(-10, -0.5))
def test_ratio_gradient_routes(mx, my):
    # atol only absorbs subnormal rounding
    np.testing.assert_allclose(ad.gradient(ratio, [mx, my]), ratio_gradient(mx, my), rtol=1e-12, atol=1e-300)


@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_regression_rr_gradient_routes(beta):
    phi = risk_ratio_functional((1, 1, 0), (1, 1, 1))
    auto = ad.gradient(phi, beta)
    np.testing.assert_allclose(auto, mono_dual_rr_gradient(*beta), rtol=1e-8, atol=1e-14)
    np.testing.assert_allclose(auto, risk_ratio_gradient(beta, (1, 1, 0), (1, 1, 1)), rtol=1e-8, atol=1e-14)


@given(st.integers(0, 2**31 - 1))
def test_three_step_contract(seed):
    rng = np.random.default_rng(seed)
    n = 80
    x = rng.normal(3, 1, n)
    y = 0.5 * x + rng.normal(4, 1, n)
    d = np.column_stack([x, y])

    res = ratio_of_means_inference(d)
    cov = np.cov(x, y) / n
    assert res.se == pytest.approx(math.sqrt(delta_variance(res.diagnostics["gradient"], cov)), rel=1e-8)
    assert res.se == pytest.approx(res.diagnostics["closed_form_se"], rel=1e-8)

    res = correlation_inference(d)
    feats = np.column_stack([x * y, x, y, x * x, y * y])
    cov = np.cov(feats.T) / n
    assert res.se == pytest.approx(math.sqrt(delta_variance(res.diagnostics["gradient"], cov)), rel=1e-8)

    res = mean_inference(x)
    assert res.se**2 == pytest.approx(np.var(x, ddof=1) / n, rel=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_centering_identity(seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(2, 1, (50, 2)) + np.array([0, 3])
    for res in (mean_inference(d[:, 0]), ratio_of_means_inference(d), correlation_inference(d)):
        h = res.influence_curve.values
        assert abs(h.mean()) <= 1e-10 * (np.max(np.abs(h)) + 1)


@given(st.integers(0, 2**31 - 1))
def test_permutation_and_level_monotonicity(seed):
    rng = np.random.default_rng(seed)
    d = rng.normal(2, 1, (40, 2)) + np.array([0, 3])
    perm = rng.permutation(40)
    for kind in ("mean", "ratio_of_means", "correlation", "quantile"):
        spec = EstimandSpec(kind, p=0.4 if kind == "quantile" else None)
        a, b = infer(d, spec), infer(d[perm], spec)
        assert b.se == pytest.approx(a.se, rel=1e-12)
        wide = infer(d, EstimandSpec(kind, level=0.99, p=spec.p))
        assert wide.ci.lower <= a.ci.lower and wide.ci.upper >= a.ci.upper


def test_infer_regression_rr_dispatch():
    s = simulate_mortality_trial(800, 4)
    spec = EstimandSpec("regression_rr", columns=("death", "age", "treat"), profiles=((1, 1, 0), (1, 0, 1)))
    res = infer(s, spec)
    assert res.estimate == pytest.approx(point_estimate(s, spec), rel=1e-14)
    with pytest.raises(ValidationError):
        infer(s, EstimandSpec("risk_ratio"))
