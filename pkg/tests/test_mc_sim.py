import numpy as np
import pytest

from aggregation import HoldingGroup, InvestorType, heterogeneous_holdings, representative_odean
from episode_stats import PoissonRule, ThresholdRule, gains_only_stats, poisson_stats, threshold_stats
from mc_sim import (
    SimConfig,
    compare_to_closed_form,
    dt_refinement_check,
    simulate_accounts,
    simulate_poisson_episodes,
    simulate_threshold_episodes,
)
from model_params import AssetParams, ModelError
from policy_engine import optimize_policy

SMALL = SimConfig(seed=7, dt=1.0 / 250.0, n_episodes=2000, batches=20, block_size=500, chunk_steps=256)


def closed_forms(stats, *extra):
    names = ("q_gain", "phi_gain", "mean_duration") + extra
    return {name: getattr(stats, name) for name in names}


@pytest.mark.parametrize("kwargs", [
    {"dt": 0.0}, {"n_episodes": 0}, {"batches": 1}, {"block_size": 1}, {"workers": 0}, {"horizon_years": -1.0},
])
def test_sim_config_validation(kwargs):
    with pytest.raises(ModelError) as err:
        SimConfig(**kwargs)
    assert err.value.code == "DEGENERATE"


def test_threshold_runs_are_deterministic(table_asset, fit_thresholds):
    first = simulate_threshold_episodes(*fit_thresholds, table_asset, SMALL)
    second = simulate_threshold_episodes(*fit_thresholds, table_asset, SMALL)
    assert first == second
    other = simulate_threshold_episodes(*fit_thresholds, table_asset, SMALL.replace(seed=8))
    assert other.estimates != first.estimates


def test_results_do_not_depend_on_worker_count(table_asset, fit_thresholds):
    serial = simulate_threshold_episodes(*fit_thresholds, table_asset, SMALL)
    threaded = simulate_threshold_episodes(*fit_thresholds, table_asset, SMALL.replace(workers=3))
    assert serial == threaded
    cfg = SMALL.replace(n_episodes=20_000, block_size=3000)
    assert simulate_poisson_episodes(1.16, table_asset, cfg) == \
        simulate_poisson_episodes(1.16, table_asset, cfg.replace(workers=2))


def test_bridge_never_sells_later_than_grid(table_asset, fit_thresholds):
    bridged = simulate_threshold_episodes(*fit_thresholds, table_asset, SMALL)
    grid = simulate_threshold_episodes(*fit_thresholds, table_asset, SMALL.replace(bridge=False))
    assert grid.estimates["mean_duration"] >= bridged.estimates["mean_duration"]


def test_episode_ledger(table_asset, fit_thresholds):
    theta, big = fit_thresholds
    result = simulate_threshold_episodes(theta, big, table_asset, SMALL.replace(keep_ledger=True))
    ledger = result.ledger
    assert list(ledger.columns) == ["stream", "t_start", "t_end", "x_exit", "is_gain"]
    assert len(ledger) == SMALL.n_episodes
    assert (ledger["is_gain"] == (ledger["x_exit"] > 1.0)).all()
    sold = (ledger["x_exit"] >= big * (1 - 1e-12)) | (ledger["x_exit"] <= theta * (1 + 1e-12))
    assert sold.all()
    assert (ledger["t_end"] > ledger["t_start"]).all()
    assert ledger["is_gain"].mean() == pytest.approx(result.estimates["q_gain"])
    assert simulate_threshold_episodes(theta, big, table_asset, SMALL).ledger is None


def test_threshold_simulation_rejects_degenerate_rules(table_asset):
    with pytest.raises(ModelError) as err:
        simulate_threshold_episodes(1.1, 1.2, table_asset, SMALL)
    assert err.value.code == "DEGENERATE"
    with pytest.raises(ModelError):
        simulate_threshold_episodes(0.0, 1.5, AssetParams(mu=0.03, sigma=0.30), SMALL)
    with pytest.raises(ModelError):
        simulate_poisson_episodes(0.0, table_asset, SMALL)


def test_poisson_concordance(table_asset):
    cfg = SimConfig(seed=11, n_episodes=100_000, block_size=10_000)
    empirical = simulate_poisson_episodes(1.16, table_asset, cfg)
    report = compare_to_closed_form(
        empirical, closed_forms(poisson_stats(1.16, table_asset), "gain_level", "loss_level"), z_limit=3.0)
    assert len(report) == 5
    assert report["is_consistent"].all(), report.to_string()


def test_poisson_standard_errors_shrink_with_sample_size(table_asset):
    cfg = SimConfig(seed=5, block_size=5000)
    small = simulate_poisson_episodes(1.16, table_asset, cfg.replace(n_episodes=20_000))
    large = simulate_poisson_episodes(1.16, table_asset, cfg.replace(n_episodes=40_000))
    for name in ("q_gain", "mean_duration"):
        ratio = large.standard_errors[name] / small.standard_errors[name]
        assert ratio == pytest.approx(1 / np.sqrt(2), rel=0.2)


def test_accounts_need_enough_sales(table_asset):
    population = [HoldingGroup(2, PoissonRule(0.5), table_asset)]
    cfg = SimConfig(seed=1, dt=1.0 / 250.0, n_accounts=2)
    with pytest.raises(ModelError) as err:
        simulate_accounts(population, 0.1, cfg)
    assert err.value.code == "HORIZON_TOO_SHORT"


def test_account_population_validation(table_asset):
    rule = PoissonRule(1.0)
    cfg = SimConfig(n_accounts=2)
    with pytest.raises(ModelError):
        simulate_accounts([], 1.0, cfg)
    mixed = [InvestorType(1.0, 2, rule, table_asset), HoldingGroup(2, rule, table_asset)]
    with pytest.raises(ModelError):
        simulate_accounts(mixed, 1.0, cfg)
    stats_only = [HoldingGroup(2, stats=poisson_stats(1.0, table_asset))]
    with pytest.raises(ModelError) as err:
        simulate_accounts(stats_only, 1.0, cfg)
    assert err.value.code == "INVALID_MIX"


@pytest.mark.slow
def test_threshold_concordance_at_fit_row(table_asset, fit_thresholds):
    cfg = SimConfig(seed=1, dt=1.0 / 2500.0, n_episodes=100_000, block_size=5000)
    empirical = simulate_threshold_episodes(*fit_thresholds, table_asset, cfg)
    report = compare_to_closed_form(empirical, closed_forms(threshold_stats(*fit_thresholds, table_asset)),
                                    z_limit=3.0)
    assert report["is_consistent"].all(), report.to_string()


@pytest.mark.slow
def test_symmetric_case_splits_evenly():
    cfg = SimConfig(seed=4, dt=1.0 / 2500.0, n_episodes=100_000, block_size=5000)
    empirical = simulate_threshold_episodes(0.8, 1.25, AssetParams(mu=0.045, sigma=0.30), cfg)
    q = empirical.estimates["q_gain"]
    assert abs(q - 0.5) < 3 * empirical.standard_errors["q_gain"]


@pytest.mark.slow
def test_gains_only_concordance(table_asset):
    cfg = SimConfig(seed=6, dt=1.0 / 2500.0, n_episodes=20_000, block_size=2000)
    rule = ThresholdRule(0.0, 1.3)
    empirical = simulate_threshold_episodes(rule.theta, rule.theta_big, table_asset, cfg)
    assert empirical.estimates["q_gain"] == 1.0
    expected = gains_only_stats(1.3, table_asset)
    se = empirical.standard_errors["mean_duration"]
    assert abs(empirical.estimates["mean_duration"] - expected.mean_duration) < 3 * se


@pytest.mark.slow
def test_dt_refinement_is_within_noise(table_asset, fit_thresholds):
    cfg = SimConfig(seed=9, dt=1.0 / 2500.0, n_episodes=100_000, block_size=5000)
    report = dt_refinement_check(*fit_thresholds, table_asset, cfg, factor=4)
    assert list(report.columns) == ["statistic", "coarse", "fine", "difference", "se", "within_se"]
    assert set(report["statistic"]) == {"q_gain", "phi_gain", "mean_duration"}
    assert report["within_se"].all(), report.to_string()


@pytest.mark.slow
def test_account_simulation_matches_fit_row(table_asset, fit_thresholds):
    population = [HoldingGroup(8, ThresholdRule(*fit_thresholds), table_asset)]
    cfg = SimConfig(seed=12, dt=1.0 / 2500.0, n_accounts=400, batches=40)
    empirical = simulate_accounts(population, 20.0, cfg)
    expected = representative_odean(threshold_stats(*fit_thresholds, table_asset), 8.0)
    for name in ("pgr", "plr", "o"):
        gap = abs(empirical.estimates[name] - getattr(expected, name))
        assert gap < 3 * empirical.standard_errors[name], name


@pytest.mark.slow
def test_poisson_accounts_show_no_disposition(table_asset):
    population = [InvestorType(1.0, 8, PoissonRule(1.16), table_asset)]
    cfg = SimConfig(seed=13, dt=1.0 / 2500.0, n_accounts=300, batches=30)
    empirical = simulate_accounts(population, 15.0, cfg)
    assert abs(empirical.estimates["o"] - 1.0) < 3 * empirical.standard_errors["o"]
    assert empirical.estimates["pgr"] == pytest.approx(0.125, abs=0.01)


@pytest.mark.slow
def test_mixed_holdings_match_pooled_measures(table_asset, fit_thresholds):
    groups = [HoldingGroup(4, ThresholdRule(*fit_thresholds), table_asset),
              HoldingGroup(4, PoissonRule(1.5), table_asset)]
    cfg = SimConfig(seed=14, dt=1.0 / 2500.0, n_accounts=400, batches=40)
    empirical = simulate_accounts(groups, 20.0, cfg)
    expected = heterogeneous_holdings(groups)
    for name in ("pgr", "plr"):
        gap = abs(empirical.estimates[name] - getattr(expected, name))
        assert gap < 3 * empirical.standard_errors[name], name


@pytest.mark.slow
def test_mixed_threshold_and_poisson_holdings_gain_share(modified_utility, table_asset, table_costs):
    policy = optimize_policy(modified_utility, table_asset, table_costs)
    groups = [HoldingGroup(4, ThresholdRule(policy.theta, policy.theta_big), table_asset),
              HoldingGroup(4, PoissonRule(1.0), table_asset)]
    expected = heterogeneous_holdings(groups)
    assert expected.phi_gain == pytest.approx(0.440, abs=0.002)
    cfg = SimConfig(seed=15, dt=1.0 / 2500.0, n_accounts=400, batches=40)
    empirical = simulate_accounts(groups, 20.0, cfg)
    gap = abs(empirical.estimates["phi_gain"] - expected.phi_gain)
    assert gap < 3 * empirical.standard_errors["phi_gain"]
