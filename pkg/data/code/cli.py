#!/usr/bin/env python3
"""
Realization Utility Command Line
Optimal policies, trading statistics, tables and simulations from JSON configs

Usage:
  python cli.py policy --config data/configs/baseline_policy.json
  python cli.py stats --config data/configs/fit_row.json --format csv
  python cli.py table t3 --out table3.csv --format csv
  python cli.py simulate --config data/configs/simulate.json --seed 7 -v

Exit codes: 0 ok, 1 other model error, 2 transversality, 3 no participation,
4 config parse error, 5 simulation horizon too short.
stdout carries data only; diagnostics go to stderr.
simulate on a representative population uses whole-stock accounts: a moment mix
(n_bar, sigma_n) becomes sizes floor(m) and floor(m) + 1 with the same multiplier m.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

import calibration_tables
import config_loader
import mc_sim
from aggregation import InvestorType, heterogeneous_holdings, heterogeneous_investors, representative_odean
from episode_stats import PoissonRule, poisson_stats, rule_stats
from model_params import ModelError, check_transversality, years_to_days
from policy_engine import (SWEEP_PARAMETERS, critical_lambda, optimize_policy, policy_sweep,
                           smooth_pasting_residuals, value_profile)

logger = logging.getLogger(__name__)

COMMANDS = ("policy", "stats", "poisson", "aggregate", "table", "simulate", "lambda-star", "profile", "sweep")

EXIT_CODES = {
    "TRANSVERSALITY": 2,
    "NONPOSITIVE_DELTA": 2,
    "NO_PARTICIPATION": 3,
    "CONFIG_PARSE": 4,
    "HORIZON_TOO_SHORT": 5,
}

PERCENT_KEYS = {"gain_pct", "loss_pct", "q_gain", "q_loss", "phi_gain", "phi_loss", "pgr", "plr"}


@dataclass
class RunConfig:
    command: str
    config_path: str | None = None
    out_path: str | None = None
    fmt: str = "json"
    seed: int | None = None
    overrides: list = field(default_factory=list)
    log_level: str = "WARNING"
    table_id: str | None = None


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description="Realization utility trading policies and disposition statistics.")
    p.add_argument("command", choices=COMMANDS, help="What to compute.")
    p.add_argument("table_id", nargs="?", help="Table id for the table command (t1, t2, t3).")
    p.add_argument("--config", help="JSON config file.")
    p.add_argument("--out", help="Output file (default: stdout).")
    p.add_argument("--format", choices=["json", "csv"], default="json", help="Output format (default: json).")
    p.add_argument("--seed", type=int, help="Override sim.seed.")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="Override a config key by dotted path, e.g. utility.lambda=2.5 (repeatable).")
    p.add_argument("--log-level", default="WARNING", help="Logging level (DEBUG/INFO/WARNING/ERROR).")
    p.add_argument("-v", "--verbose", action="store_true", help="Same as --log-level INFO.")
    return p


def parse_run_config(argv=None):
    args = build_arg_parser().parse_args(argv)
    return RunConfig(
        command=args.command,
        config_path=args.config,
        out_path=args.out,
        fmt=args.format,
        seed=args.seed,
        overrides=list(args.set),
        log_level="INFO" if args.verbose else args.log_level,
        table_id=args.table_id,
    )


def _jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, pd.DataFrame):
        return _jsonable(obj.to_dict(orient="records"))
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def _percent(value):
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return value
    return round(100.0 * value, 1)


def _csv_frame(result):
    if isinstance(result, pd.DataFrame):
        return result
    flat = {}
    for key, value in result.items():
        if isinstance(value, dict):
            for sub, inner in value.items():
                if not isinstance(inner, (dict, list)):
                    flat[f"{key}.{sub}"] = _percent(inner) if sub in PERCENT_KEYS else inner
        elif isinstance(value, list):
            flat[key] = ";".join(str(v) for v in value)
        else:
            flat[key] = _percent(value) if key in PERCENT_KEYS else value
    return pd.DataFrame([flat])


def render(doc, result, fmt):
    if fmt == "csv":
        return _csv_frame(result).to_csv(index=False)
    report = {key: value for key, value in doc.items() if key != "result"}
    report["result"] = result
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _banner(title, rows):
    lines = ["", title, "=" * 70]
    lines += [f"{key:<28} {value}" for key, value in rows.items()]
    lines.append("=" * 70)
    logger.info("\n".join(lines))


def _raise_transversality(report):
    codes = ", ".join(report.codes)
    messages = "; ".join(v.message for v in report.violations)
    raise ModelError("TRANSVERSALITY", f"{codes}: {messages}", report)


def cmd_policy(doc):
    u, asset, costs = config_loader.build_utility(doc), config_loader.build_asset(doc), config_loader.build_costs(doc)
    report = check_transversality(u, asset, costs)
    if not report.ok:
        _raise_transversality(report)
    policy = optimize_policy(u, asset, costs)
    residuals = smooth_pasting_residuals(policy, u, asset, costs)
    result = policy.as_dict()
    result["transversality"] = report.as_dict()
    result["pasting_residuals"] = {"upper": residuals.upper, "lower": residuals.lower}
    _banner("OPTIMAL POLICY", {"regime": result["regime"], "theta": policy.theta,
                               "Theta": policy.theta_big, "v(1)": policy.v1})
    return result


def _rule_from_policy_section(doc):
    if "policy" not in doc:
        raise ModelError("CONFIG_PARSE", "missing section 'policy'")
    return config_loader.build_rule(doc["policy"], doc)


def _odean_for(stats, doc):
    if "population" not in doc:
        return None
    odean = representative_odean(stats, config_loader.build_mix(doc))
    result = odean.as_dict()
    result["mean_duration_days"] = None if odean.mean_duration is None else years_to_days(odean.mean_duration)
    return result


def cmd_stats(doc):
    asset = config_loader.build_asset(doc)
    rule = _rule_from_policy_section(doc)
    stats = rule_stats(rule, asset)
    result = {"rule": rule.as_dict(), "stats": stats.as_dict()}
    odean = _odean_for(stats, doc)
    if odean is not None:
        result["odean"] = odean
    _banner("TRADING STATISTICS", stats.as_dict())
    return result


def cmd_poisson(doc):
    asset = config_loader.build_asset(doc)
    rule = _rule_from_policy_section(doc)
    if not isinstance(rule, PoissonRule):
        raise ModelError("CONFIG_PARSE", "poisson needs policy.rho or policy.calibrate")
    stats = poisson_stats(rule.rho, asset)
    result = {"rule": rule.as_dict(), "stats": stats.as_dict()}
    odean = _odean_for(stats, doc)
    if odean is not None:
        result["odean"] = odean
    _banner("POISSON TRADER", stats.as_dict())
    return result


def cmd_aggregate(doc):
    kind, members = config_loader.build_population(doc)
    if kind == "representative":
        stats = rule_stats(_rule_from_policy_section(doc), config_loader.build_asset(doc))
        odean = representative_odean(stats, members)
    elif kind == "investors":
        odean = heterogeneous_investors(members)
    else:
        odean = heterogeneous_holdings(members)
    result = odean.as_dict()
    result["kind"] = kind
    result["mean_duration_days"] = None if odean.mean_duration is None else years_to_days(odean.mean_duration)
    _banner("ODEAN MEASURES", {"PGR": odean.pgr, "PLR": odean.plr, "O": odean.o})
    return result


def cmd_table(doc, table_id, fmt):
    asset = config_loader.build_asset(doc) if "asset" in doc else None
    costs = config_loader.build_costs(doc) if "costs" in doc else None
    m = config_loader.build_mix(doc).multiplier if "population" in doc else None
    table = calibration_tables.build_table(table_id, asset, costs, m)
    logger.info("\n%s", calibration_tables.format_table(table).to_string(index=False))
    return calibration_tables.format_table(table) if fmt == "csv" else table


def cmd_simulate(doc, seed=None):
    cfg = config_loader.build_sim_config(doc, seed)
    asset = config_loader.build_asset(doc)
    if "population" in doc:
        kind, members = config_loader.build_population(doc)
        if kind == "representative":
            rule = _rule_from_policy_section(doc)
            sizes, fractions = members.integer_sizes()
            members = [InvestorType(f, n, rule, asset) for n, f in zip(sizes, fractions) if f > 0]
            logger.info("account sizes %s with fractions %s", sizes, tuple(round(f, 6) for f in fractions))
            closed = heterogeneous_investors(members)
        else:
            closed = heterogeneous_investors(members) if kind == "investors" else heterogeneous_holdings(members)
        empirical = mc_sim.simulate_accounts(members, cfg.horizon_years, cfg)
        closed_forms = {"pgr": closed.pgr, "plr": closed.plr, "o": closed.o,
                        "phi_gain": closed.phi_gain, "q_gain": closed.q_gain}
    else:
        rule = _rule_from_policy_section(doc)
        stats = rule_stats(rule, asset)
        if isinstance(rule, PoissonRule):
            empirical = mc_sim.simulate_poisson_episodes(rule.rho, asset, cfg)
        else:
            empirical = mc_sim.simulate_threshold_episodes(rule.theta, rule.theta_big, asset, cfg)
        closed_forms = {"q_gain": stats.q_gain, "phi_gain": stats.phi_gain, "mean_duration": stats.mean_duration,
                        "gain_level": stats.gain_level, "loss_level": stats.loss_level}

    report = mc_sim.compare_to_closed_form(empirical, closed_forms)
    ledger_path = doc.get("sim", {}).get("ledger")
    if empirical.ledger is not None and isinstance(ledger_path, str):
        empirical.ledger.to_csv(ledger_path, index=False)
        logger.info("episode ledger written to %s", ledger_path)
    return report


def cmd_lambda_star(doc):
    u, asset, costs = config_loader.build_utility(doc), config_loader.build_asset(doc), config_loader.build_costs(doc)
    crit = critical_lambda(u, asset, costs)
    result = {"lambda_star": crit.lambda_star, "theta_star": crit.theta_star, "theta_big_star": crit.theta_big_star}
    _banner("CRITICAL LOSS AVERSION", result)
    return result


def cmd_profile(doc):
    u, asset, costs = config_loader.build_utility(doc), config_loader.build_asset(doc), config_loader.build_costs(doc)
    section = doc.get("profile", {})
    return value_profile(u, asset, costs, section.get("thetas"), section.get("theta_big"))


def cmd_sweep(doc):
    u, asset, costs = config_loader.build_utility(doc), config_loader.build_asset(doc), config_loader.build_costs(doc)
    section = doc.get("sweep")
    if not section or "parameter" not in section or "values" not in section:
        raise ModelError("CONFIG_PARSE", f"sweep needs sweep.parameter (one of {SWEEP_PARAMETERS}) and sweep.values")
    return policy_sweep(u, asset, costs, section["parameter"], section["values"])


def run(rc):
    doc = config_loader.load_config(rc.config_path, rc.overrides)
    if rc.seed is not None:
        doc.setdefault("sim", {})["seed"] = rc.seed
    if rc.command == "table":
        if rc.table_id is None:
            raise ModelError("CONFIG_PARSE", "table needs an id: t1, t2 or t3")
        result = cmd_table(doc, rc.table_id, rc.fmt)
    elif rc.command == "simulate":
        result = cmd_simulate(doc, rc.seed)
    else:
        handlers = {"policy": cmd_policy, "stats": cmd_stats, "poisson": cmd_poisson,
                    "aggregate": cmd_aggregate, "lambda-star": cmd_lambda_star,
                    "profile": cmd_profile, "sweep": cmd_sweep}
        result = handlers[rc.command](doc)
    return render(doc, result, rc.fmt)


def main(argv=None) -> int:
    rc = parse_run_config(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, str(rc.log_level).upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        text = run(rc)
    except ModelError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return EXIT_CODES.get(exc.code, 1)

    if rc.out_path:
        Path(rc.out_path).write_text(text, encoding="utf-8")
        logger.info("Saved to: %s", rc.out_path)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
