#!/usr/bin/env python3
"""
CALIBRATION TABLES
Summary statistics of optimal and random trading, end to end

Builds:
1. Scaled-TK table: empirical reference rows, threshold fit, Poisson fits,
   optimal policies for several utility blocks
2. Modified-TK table: alpha_G = 0.5, alpha_L in {2, 4, 8, 30}, beta in {0, 0.3}
3. Mixture table: half optimal traders, half Poisson traders, pooled across
   investors and within accounts

Every row runs optimize -> trading statistics -> Odean aggregation. Rows whose
parameters fail are kept and annotated with the error code.

Usage: python calibration_tables.py [results_dir]
"""

from __future__ import annotations

import logging
import os
import sys

import numpy as np
import pandas as pd

from aggregation import HoldingGroup, InvestorType, heterogeneous_holdings, heterogeneous_investors, representative_odean
from episode_stats import PoissonRule, ThresholdRule, calibrate_poisson_rate, poisson_stats, rule_stats, threshold_stats
from model_params import AssetParams, CostSpec, ModelError, UtilityFamily, UtilitySpec, days_to_years, years_to_days
from policy_engine import Regime, cached_policy

logger = logging.getLogger(__name__)

RESULTS_BASE = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "results")

TABLE_ASSET = AssetParams(mu=0.09, sigma=0.30)
TABLE_COSTS = CostSpec(0.01, 0.01)
ACCOUNT_MULTIPLIER = 8.0

# Odean's sale price ratios and holding period used by the fit rows.
ODEAN_GAIN = 1.277
ODEAN_LOSS = 0.772
ODEAN_Q_GAIN = 0.538
ODEAN_DAYS = 312

TABLE_COLUMNS = ["block", "label", "gain_pct", "loss_pct", "q_gain", "phi_gain",
                 "mean_duration_days", "pgr", "plr", "o", "note"]
MIXTURE_COLUMNS = ["block", "label", "gain_pct", "loss_pct", "q_gain", "mean_duration_days",
                   "investors_phi_gain", "investors_pgr", "investors_plr", "investors_o",
                   "holdings_phi_gain", "holdings_pgr", "holdings_plr", "holdings_o", "note"]

REFERENCE_ROWS = [
    {"block": "data", "label": "Odean data", "gain_pct": 0.277, "loss_pct": -0.228, "q_gain": 0.538,
     "phi_gain": 0.419, "mean_duration_days": 312.0, "pgr": 0.148, "plr": 0.098, "o": 1.51, "note": ""},
    {"block": "data", "label": "Dhar & Zhu data", "gain_pct": None, "loss_pct": None, "q_gain": 0.658,
     "phi_gain": 0.465, "mean_duration_days": 122.0, "pgr": 0.132, "plr": 0.064, "o": 2.06, "note": ""},
]

# (block label, alpha_g, alpha_l, lambda, delta, betas)
SCALED_BLOCKS = [
    ("alpha_g=1 alpha_l=1", 1.0, 1.0, 2.0, 0.10, (0.0, 0.53)),
    ("alpha_g=0.88 alpha_l=0.88", 0.88, 0.88, 2.25, 0.08, (0.0, 0.88)),
    ("alpha_g=0.5 alpha_l=0.88", 0.5, 0.88, 2.0, 0.05, (0.0, 0.3)),
    ("alpha_g=0.5 alpha_l=1.0", 0.5, 1.0, 2.0, 0.05, (0.0, 0.3)),
    ("alpha_g=0.5 alpha_l=0.5", 0.5, 0.5, 2.0, 0.05, (0.0, 0.3)),
]
MODIFIED_ALPHA_L = (2.0, 4.0, 8.0, 30.0)
MIXTURE_ALPHA_L = (2.0, 4.0, 8.0)
BETAS = (0.0, 0.3)
MIXTURE_RHOS = (1.5, 1.0)


def _blank_row(block, label, note):
    row = {col: None for col in TABLE_COLUMNS}
    row.update(block=block, label=label, note=note)
    return row


def _summary_row(block, label, stats, odean, loss_realized=True):
    return {
        "block": block,
        "label": label,
        "gain_pct": stats.gain_level - 1.0,
        "loss_pct": stats.loss_level - 1.0 if loss_realized else None,
        "q_gain": stats.q_gain,
        "phi_gain": stats.phi_gain,
        "mean_duration_days": years_to_days(stats.mean_duration),
        "pgr": odean.pgr,
        "plr": odean.plr,
        "o": odean.o,
        "note": "",
    }


def fit_row(asset=TABLE_ASSET, m=ACCOUNT_MULTIPLIER):
    """Odean's average sale ratios taken as the thresholds."""
    stats = threshold_stats(ODEAN_LOSS, ODEAN_GAIN, asset)
    return _summary_row("fit", "Fit to Odean's Theta, theta", stats, representative_odean(stats, m))


def poisson_rows(asset=TABLE_ASSET, m=ACCOUNT_MULTIPLIER):
    """One Poisson trader per Odean statistic it is calibrated to."""
    targets = [("loss", ODEAN_LOSS), ("duration", days_to_years(ODEAN_DAYS)),
               ("gain", ODEAN_GAIN), ("q_gain", ODEAN_Q_GAIN)]
    rows = []
    for target, value in targets:
        rho = calibrate_poisson_rate(target, value, asset)
        stats = poisson_stats(rho, asset)
        row = _summary_row("poisson", f"rho = {rho:.2f}", stats, representative_odean(stats, m))
        row["note"] = f"matched {target}"
        rows.append(row)
    return rows


def policy_row(block, label, u, asset=TABLE_ASSET, costs=TABLE_COSTS, m=ACCOUNT_MULTIPLIER):
    try:
        policy = cached_policy(u, asset, costs)
        if policy.regime is Regime.TWO_POINT:
            stats = threshold_stats(policy.theta, policy.theta_big, asset)
        else:
            stats = rule_stats(ThresholdRule(0.0, policy.theta_big), asset)
    except ModelError as exc:
        logger.warning("%s %s: %s", block, label, exc)
        return _blank_row(block, label, exc.code)
    row = _summary_row(block, label, stats, representative_odean(stats, m), policy.realizes_losses)
    row["note"] = ",".join(policy.warnings)
    return row


def scaled_tk_table(asset=TABLE_ASSET, costs=TABLE_COSTS, m=ACCOUNT_MULTIPLIER):
    """Reference rows, Poisson fits and scaled-TK optimal policies."""
    rows = list(REFERENCE_ROWS) + [fit_row(asset, m)] + poisson_rows(asset, m)
    for block, a_g, a_l, lam, delta, betas in SCALED_BLOCKS:
        for beta in betas:
            u = UtilitySpec(UtilityFamily.SCALED_TK, a_g, a_l, lam, beta, delta)
            rows.append(policy_row(block, f"beta = {beta}", u, asset, costs, m))
            logger.info("scaled-TK %s beta=%s done", block, beta)
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def modified_utility(alpha_l, beta, lam=2.0, delta=0.05, alpha_g=0.5):
    return UtilitySpec(UtilityFamily.MODIFIED_TK, alpha_g, alpha_l, lam, beta, delta)


def modified_tk_table(asset=TABLE_ASSET, costs=TABLE_COSTS, m=ACCOUNT_MULTIPLIER):
    rows = list(REFERENCE_ROWS) + [fit_row(asset, m)]
    for alpha_l in MODIFIED_ALPHA_L:
        for beta in BETAS:
            rows.append(policy_row(f"alpha_g=0.5 alpha_l={alpha_l}", f"beta = {beta}",
                                   modified_utility(alpha_l, beta), asset, costs, m))
            logger.info("modified-TK alpha_l=%s beta=%s done", alpha_l, beta)
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def mixture_row(u, rho, asset=TABLE_ASSET, costs=TABLE_COSTS, n=8):
    """
    Equal mix of an optimal threshold trader and a Poisson trader.

    Investors: half the accounts of each kind, n stocks each.
    Holdings: every account trades n/2 stocks each way.
    """
    policy = cached_policy(u, asset, costs)
    threshold = ThresholdRule(policy.theta if policy.realizes_losses else 0.0, policy.theta_big)
    poisson = PoissonRule(rho)
    investors = heterogeneous_investors([
        InvestorType(0.5, n, threshold, asset), InvestorType(0.5, n, poisson, asset)])
    holdings = heterogeneous_holdings([
        HoldingGroup(n // 2, threshold, asset), HoldingGroup(n - n // 2, poisson, asset)])
    return {
        "gain_pct": investors.gain_level - 1.0,
        "loss_pct": investors.loss_level - 1.0,
        "q_gain": investors.q_gain,
        "mean_duration_days": years_to_days(investors.mean_duration),
        "investors_phi_gain": investors.phi_gain,
        "investors_pgr": investors.pgr,
        "investors_plr": investors.plr,
        "investors_o": investors.o,
        "holdings_phi_gain": holdings.phi_gain,
        "holdings_pgr": holdings.pgr,
        "holdings_plr": holdings.plr,
        "holdings_o": holdings.o,
        "note": ",".join(policy.warnings),
    }


def _reference_mixture_rows(asset, m):
    rows = []
    for ref in list(REFERENCE_ROWS) + [fit_row(asset, m)]:
        row = {key: ref[key] for key in ("block", "label", "gain_pct", "loss_pct", "q_gain",
                                         "mean_duration_days", "note")}
        for side in ("investors", "holdings"):
            for stat in ("phi_gain", "pgr", "plr", "o"):
                row[f"{side}_{stat}"] = ref[stat]
        rows.append(row)
    return rows


def mixture_table(asset=TABLE_ASSET, costs=TABLE_COSTS, m=ACCOUNT_MULTIPLIER):
    rows = _reference_mixture_rows(asset, m)
    n = int(round(m))
    for alpha_l in MIXTURE_ALPHA_L:
        for beta in BETAS:
            for rho in MIXTURE_RHOS:
                block = f"alpha_g=0.5 alpha_l={alpha_l}"
                label = f"beta = {beta}, rho = {rho}"
                try:
                    row = mixture_row(modified_utility(alpha_l, beta), rho, asset, costs, n)
                except ModelError as exc:
                    logger.warning("%s %s: %s", block, label, exc)
                    row = {col: None for col in MIXTURE_COLUMNS}
                    row["note"] = exc.code
                row.update(block=block, label=label)
                rows.append(row)
                logger.info("mixture %s %s done", block, label)
    return pd.DataFrame(rows, columns=MIXTURE_COLUMNS)


TABLE_BUILDERS = {"t1": scaled_tk_table, "t2": modified_tk_table, "t3": mixture_table}


def build_table(table_id, asset=None, costs=None, m=None):
    """Dispatch by id ("t1", "t2", "t3"); asset, costs and m default to the table values."""
    if table_id not in TABLE_BUILDERS:
        raise ModelError("CONFIG_PARSE", f"unknown table {table_id!r}; use one of {sorted(TABLE_BUILDERS)}")
    return TABLE_BUILDERS[table_id](
        asset or TABLE_ASSET, costs or TABLE_COSTS, ACCOUNT_MULTIPLIER if m is None else m)


def format_table(df):
    """
    Percent columns as strings with one decimal, durations rounded to days,
    O to two decimals. A missing loss threshold on a row where every episode
    ends in a gain prints as "never"; other missing values as "----".
    """
    out = df.copy()
    never = df["loss_pct"].isna() & (df["q_gain"] == 1.0)
    for col in out.columns:
        if col in ("block", "label", "note"):
            continue
        if col == "mean_duration_days":
            out[col] = df[col].map(lambda v: "----" if pd.isna(v) else f"{v:.0f}")
        elif col == "o" or col.endswith("_o"):
            out[col] = df[col].map(_format_ratio)
        else:
            out[col] = df[col].map(_format_pct)
    out.loc[never, "loss_pct"] = "never"
    return out


def _format_pct(v):
    if v is None or pd.isna(v):
        return "----"
    if np.isinf(v):
        return "inf"
    return f"{100.0 * v:.1f}%"


def _format_ratio(v):
    if v is None or pd.isna(v):
        return "----"
    return "inf" if np.isinf(v) else f"{v:.2f}"


def main():
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    results_dir = sys.argv[1] if len(sys.argv) > 1 else RESULTS_BASE
    os.makedirs(results_dir, exist_ok=True)

    for part, (table_id, title) in enumerate(
            [("t1", "SCALED-TK UTILITY"), ("t2", "MODIFIED-TK UTILITY"), ("t3", "MIXED TRADERS")], start=1):
        logger.info("=" * 70)
        logger.info("PART %d: %s", part, title)
        logger.info("=" * 70)
        table = build_table(table_id)
        output_file = os.path.join(results_dir, f"table_{table_id}.csv")
        table.to_csv(output_file, index=False)
        logger.info("\n%s", format_table(table).to_string(index=False))
        logger.info("Saved to: %s", output_file)


if __name__ == "__main__":
    main()
