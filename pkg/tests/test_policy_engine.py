import numpy as np
import pytest

from model_params import CostSpec, ModelError, UtilityFamily, UtilitySpec
from policy_engine import (
    Policy,
    Regime,
    critical_lambda,
    optimize_policy,
    policy_sweep,
    reduced_value,
    smooth_pasting_residuals,
    value_coefficients,
    value_profile,
)
from utility import burst


def test_baseline_two_point_policy(baseline_utility, table_asset, sale_costs):
    policy = optimize_policy(baseline_utility, table_asset, sale_costs)
    assert policy.regime is Regime.TWO_POINT
    assert policy.theta == pytest.approx(0.183, abs=0.002)
    assert policy.theta_big == pytest.approx(1.037, abs=0.002)
    assert policy.v1 > 0
    assert 0 < policy.theta < 1 < 1 / sale_costs.kappa < policy.theta_big


def test_baseline_gains_only_at_higher_loss_aversion(baseline_utility, table_asset, sale_costs):
    policy = optimize_policy(baseline_utility.with_lambda(2.56), table_asset, sale_costs)
    assert policy.regime is Regime.GAINS_ONLY
    assert policy.theta == 0.0
    assert policy.coefficients.c2 == 0.0
    assert policy.theta_big == pytest.approx(1.036, abs=0.002)


def test_piecewise_linear_utility_never_realizes_losses(table_asset, table_costs):
    gamma1 = 1.0723318
    for beta in (0.0, 0.5, 0.99 * gamma1):
        u = UtilitySpec(UtilityFamily.SCALED_TK, 1.0, 1.0, 2.0, beta, 0.10)
        assert optimize_policy(u, table_asset, table_costs).regime is Regime.GAINS_ONLY


@pytest.mark.parametrize("lam", [1.0, 1.5, 3.0])
def test_linear_utility_gains_only_for_any_loss_aversion(table_asset, table_costs, lam):
    u = UtilitySpec(UtilityFamily.SCALED_TK, 1.0, 1.0, lam, 0.3, 0.10)
    assert optimize_policy(u, table_asset, table_costs).regime is Regime.GAINS_ONLY


def test_optimize_rejects_transversality_failure(table_asset, table_costs):
    u = UtilitySpec(UtilityFamily.SCALED_TK, 0.88, 0.88, 2.25, 0.0, 0.05)
    with pytest.raises(ModelError) as err:
        optimize_policy(u, table_asset, table_costs)
    assert err.value.code == "TRANSVERSALITY"
    assert err.value.details.codes == ["ALPHA_G_EXCEEDS_GAMMA1"]


def test_smooth_pasting_at_optimum(baseline_utility, table_asset, sale_costs):
    policy = optimize_policy(baseline_utility, table_asset, sale_costs)
    residuals = smooth_pasting_residuals(policy, baseline_utility, table_asset, sale_costs)
    assert residuals.max_abs() < 1e-6


def test_smooth_pasting_detects_perturbation(baseline_utility, table_asset, sale_costs):
    policy = optimize_policy(baseline_utility, table_asset, sale_costs)
    moved = Policy(policy.theta, policy.theta_big * 1.01, policy.regime, policy.v1, policy.coefficients)
    residuals = smooth_pasting_residuals(moved, baseline_utility, table_asset, sale_costs)
    assert abs(residuals.upper) > 1e-6


def test_gains_only_has_no_lower_residual(baseline_utility, table_asset, sale_costs):
    u = baseline_utility.with_lambda(3.0)
    policy = optimize_policy(u, table_asset, sale_costs)
    residuals = smooth_pasting_residuals(policy, u, table_asset, sale_costs)
    assert residuals.lower is None
    assert abs(residuals.upper) < 1e-6


def test_boundary_conditions_hold(baseline_utility, table_asset, sale_costs):
    u, costs = baseline_utility, sale_costs
    rng = np.random.default_rng(11)
    cases = [(0.183, 1.037)] + [(rng.uniform(0.05, 0.95), rng.uniform(1.02, 3.0)) for _ in range(10)]
    for theta, big in cases:
        coeffs = value_coefficients(theta, big, u, table_asset, costs)
        for phi in (theta, big):
            target = burst(costs.kappa * phi - 1.0, u).value + (costs.K * phi) ** u.beta * coeffs.v1
            assert float(coeffs.value(phi)) == pytest.approx(target, rel=1e-9, abs=1e-12)


def test_gains_only_coefficients(baseline_utility, table_asset, sale_costs):
    coeffs = value_coefficients(None, 1.2, baseline_utility, table_asset, sale_costs)
    assert coeffs.c2 == 0.0
    assert reduced_value(0.0, coeffs) == 0.0
    assert reduced_value(1.0, coeffs) == pytest.approx(coeffs.v1)


def test_value_coefficients_rejects_bad_thresholds(baseline_utility, table_asset, sale_costs):
    with pytest.raises(ModelError) as err:
        value_coefficients(0.5, 0.9, baseline_utility, table_asset, sale_costs)
    assert err.value.code == "DEGENERATE"


def test_reduced_value_solves_the_ode(baseline_utility, table_asset, sale_costs):
    coeffs = value_coefficients(0.183, 1.037, baseline_utility, table_asset, sale_costs)
    x = np.linspace(0.183, 1.037, 100)
    mu, var, delta = table_asset.mu, table_asset.variance, baseline_utility.delta
    residual = 0.5 * var * x ** 2 * coeffs.curvature(x) + mu * x * coeffs.slope(x) - delta * coeffs.value(x)
    scale = np.abs(delta * coeffs.value(x)) + np.abs(mu * x * coeffs.slope(x)) + 1.0
    assert np.all(np.abs(residual) / scale < 1e-8)


def test_reduced_value_out_of_region(baseline_utility, table_asset, sale_costs):
    coeffs = value_coefficients(0.183, 1.037, baseline_utility, table_asset, sale_costs)
    with pytest.raises(ModelError) as err:
        reduced_value(1.2, coeffs)
    assert err.value.code == "OUT_OF_REGION"


def test_critical_lambda_at_baseline(baseline_utility, table_asset, sale_costs):
    crit = critical_lambda(baseline_utility, table_asset, sale_costs)
    # the two-point policy at 2.5 and the one-point policy at 2.56 bracket the boundary
    assert 2.5 < crit.lambda_star < 2.56
    assert crit.lambda_star == pytest.approx(2.531, abs=0.005)
    assert crit.theta_star == pytest.approx(0.166, abs=0.002)
    assert crit.theta_big_star == pytest.approx(1.036, abs=0.002)


def test_critical_lambda_agrees_with_optimizer(baseline_utility, table_asset, sale_costs):
    lam = critical_lambda(baseline_utility, table_asset, sale_costs).lambda_star
    below = optimize_policy(baseline_utility.with_lambda(lam * (1 - 1e-3)), table_asset, sale_costs)
    above = optimize_policy(baseline_utility.with_lambda(lam * (1 + 1e-3)), table_asset, sale_costs)
    assert below.regime is Regime.TWO_POINT
    assert above.regime is Regime.GAINS_ONLY


def test_critical_lambda_ignores_own_lambda(baseline_utility, table_asset, sale_costs):
    a = critical_lambda(baseline_utility, table_asset, sale_costs).lambda_star
    b = critical_lambda(baseline_utility.with_lambda(7.0), table_asset, sale_costs).lambda_star
    assert a == pytest.approx(b, rel=1e-12)


def test_critical_lambda_falls_as_beta_approaches_gamma1(baseline_utility, table_asset, sale_costs):
    low = critical_lambda(baseline_utility, table_asset, sale_costs).lambda_star
    high = critical_lambda(baseline_utility.replace(beta=0.6), table_asset, sale_costs).lambda_star
    assert high < low


def test_critical_lambda_below_one_near_gamma1(table_asset, table_costs):
    u = UtilitySpec(UtilityFamily.SCALED_TK, 1.0, 1.0, 2.0, 1.07, 0.10)
    assert critical_lambda(u, table_asset, table_costs).lambda_star < 1.0


def test_critical_lambda_modified_tk(modified_utility, table_asset, table_costs):
    # with beta = 0 the loss threshold shrinks to 0 at the switch: lambda* = alpha_L C1*
    crit = critical_lambda(modified_utility, table_asset, table_costs)
    c1_star = value_coefficients(None, crit.theta_big_star, modified_utility, table_asset, table_costs).c1
    assert crit.theta_star == 0.0
    assert crit.lambda_star == pytest.approx(modified_utility.alpha_l * c1_star, rel=1e-9)
    assert crit.lambda_star == pytest.approx(10.97, abs=0.02)
    below = optimize_policy(modified_utility.with_lambda(crit.lambda_star * 0.95), table_asset, table_costs)
    above = optimize_policy(modified_utility.with_lambda(crit.lambda_star * 1.05), table_asset, table_costs)
    assert below.regime is Regime.TWO_POINT
    assert above.regime is Regime.GAINS_ONLY


def test_critical_lambda_vanishes_just_below_gamma1(baseline_utility, table_asset, sale_costs):
    crit = critical_lambda(baseline_utility.replace(beta=0.6666), table_asset, sale_costs)
    assert crit.lambda_star == 0.0
    assert crit.theta_star == 0.0
    assert crit.theta_big_star > 1.0 / sale_costs.kappa
    near = critical_lambda(baseline_utility.replace(beta=0.666), table_asset, sale_costs)
    assert 0.0 <= near.lambda_star < 1e-3


def test_critical_lambda_matches_optimizer_on_random_parameters(table_asset, sale_costs):
    rng = np.random.default_rng(20240611)
    for _ in range(5):
        u = UtilitySpec(UtilityFamily.SCALED_TK,
                        alpha_g=float(rng.uniform(0.45, 0.6)),
                        alpha_l=float(rng.uniform(0.45, 0.6)),
                        lam=2.0,
                        beta=float(rng.uniform(0.1, 0.4)),
                        delta=float(rng.uniform(0.045, 0.06)))
        lam = critical_lambda(u, table_asset, sale_costs).lambda_star
        assert lam > 0
        below = optimize_policy(u.with_lambda(lam * 0.95), table_asset, sale_costs)
        above = optimize_policy(u.with_lambda(lam * 1.05), table_asset, sale_costs)
        assert below.regime is Regime.TWO_POINT, u
        assert above.regime is Regime.GAINS_ONLY, u


@pytest.mark.slow
@pytest.mark.parametrize("lam", [2.5, 2.56])
def test_no_grid_point_beats_the_optimum(baseline_utility, table_asset, sale_costs, lam):
    u, costs = baseline_utility.with_lambda(lam), sale_costs
    policy = optimize_policy(u, table_asset, costs)
    best_grid = -np.inf
    for big in np.linspace(1.0 / costs.kappa + 0.001, 5.0, 200):
        best_grid = max(best_grid, value_coefficients(None, big, u, table_asset, costs).v1)
        for theta in np.linspace(0.005, 0.995, 200):
            try:
                best_grid = max(best_grid, value_coefficients(theta, big, u, table_asset, costs).v1)
            except ModelError:
                continue
    assert policy.v1 >= best_grid - 1e-9


def test_time_unit_invariance(baseline_utility, table_asset, sale_costs):
    factor = 12.0
    base = optimize_policy(baseline_utility, table_asset, sale_costs)
    scaled = optimize_policy(baseline_utility.replace(delta=baseline_utility.delta * factor),
                             table_asset.rescaled(factor), sale_costs)
    assert scaled.theta == pytest.approx(base.theta, rel=1e-6)
    assert scaled.theta_big == pytest.approx(base.theta_big, rel=1e-6)
    assert scaled.v1 == pytest.approx(base.v1, rel=1e-8)


def test_thresholds_fall_with_loss_aversion(baseline_utility, table_asset, sale_costs):
    policies = [optimize_policy(baseline_utility.with_lambda(lam), table_asset, sale_costs)
                for lam in (2.0, 2.25, 2.5)]
    assert all(p.regime is Regime.TWO_POINT for p in policies)
    thetas = [p.theta for p in policies]
    bigs = [p.theta_big for p in policies]
    assert all(a >= b - 1e-9 for a, b in zip(thetas, thetas[1:]))
    assert all(a >= b - 1e-9 for a, b in zip(bigs, bigs[1:]))


def test_higher_costs_widen_the_band(table_asset):
    u = UtilitySpec(UtilityFamily.MODIFIED_TK, 0.5, 8.0, 2.0, 0.0, 0.05)
    narrow = optimize_policy(u, table_asset, CostSpec(0.005, 0.005))
    wide = optimize_policy(u, table_asset, CostSpec(0.02, 0.02))
    assert wide.theta_big > narrow.theta_big
    if narrow.realizes_losses and wide.realizes_losses:
        assert wide.theta <= narrow.theta


def test_modified_tk_sells_gains_later_than_scaled_tk(table_asset, table_costs):
    scaled = optimize_policy(UtilitySpec(UtilityFamily.SCALED_TK, 0.5, 0.5, 2.0, 0.0, 0.05),
                             table_asset, table_costs)
    modified = optimize_policy(UtilitySpec(UtilityFamily.MODIFIED_TK, 0.5, 2.0, 2.0, 0.0, 0.05),
                               table_asset, table_costs)
    assert modified.theta_big > scaled.theta_big


def test_value_profile_peaks_near_the_optimum(baseline_utility, table_asset, sale_costs):
    u = baseline_utility.with_lambda(2.0)
    policy = optimize_policy(u, table_asset, sale_costs)
    profile = value_profile(u, table_asset, sale_costs,
                            thetas=np.concatenate([[0.0], np.linspace(0.05, 0.6, 56)]))
    assert list(profile.columns) == ["theta", "theta_big", "v1"]
    assert profile["v1"].max() <= policy.v1 + 1e-9
    assert profile.loc[profile["v1"].idxmax(), "theta"] == pytest.approx(policy.theta, abs=0.011)


def test_policy_sweep_annotates_failures(baseline_utility, table_asset, sale_costs):
    sweep = policy_sweep(baseline_utility, table_asset, sale_costs, "lambda", [2.0, 3.0])
    assert list(sweep["regime"]) == ["TwoPoint", "GainsOnly"]
    failing = policy_sweep(baseline_utility, table_asset, sale_costs, "delta", [0.05, 0.01])
    assert failing.loc[1, "note"] == "TRANSVERSALITY"
    with pytest.raises(ModelError):
        policy_sweep(baseline_utility, table_asset, sale_costs, "rho", [1.0])
