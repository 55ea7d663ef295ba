"""
Run Configuration Loader
Parse, validate and override the JSON documents that drive every command

Key Concepts:
1. One JSON document with sections asset, costs, utility, policy, population, sim
2. Unknown keys are rejected with their dotted location (e.g. "utility.lamda")
3. Overrides "section.key=value" are applied before validation; values parse as JSON
4. A "result" section is accepted and ignored, so written reports load back as configs
"""

from __future__ import annotations

import copy
import json
import logging
from pathlib import Path

from aggregation import AccountSizeMix, HoldingGroup, InvestorType
from episode_stats import PoissonRule, ThresholdRule, calibrate_poisson_rate
from mc_sim import SimConfig
from model_params import AssetParams, CostSpec, ModelError, UtilitySpec
from policy_engine import Regime, cached_policy

logger = logging.getLogger(__name__)

RULE_KEYS = {"theta", "theta_big", "rho", "optimal", "calibrate"}

SCHEMA = {
    "asset": {"mu", "sigma"},
    "costs": {"k_s", "k_p", "kappa"},
    "utility": {"family", "alpha_g", "alpha_l", "lambda", "beta", "delta"},
    "policy": RULE_KEYS,
    "population": {"kind", "mix", "types", "groups"},
    "sim": {"seed", "dt", "n_episodes", "horizon_years", "n_accounts", "antithetic", "bridge", "batches",
            "workers", "block_size", "chunk_steps", "ledger"},
    "sweep": {"parameter", "values"},
    "profile": {"thetas", "theta_big"},
    "result": None,
}
MIX_KEYS = {"n_bar", "sigma_n", "sizes", "fractions"}
TYPE_KEYS = {"pi", "n", "rule"}
GROUP_KEYS = {"n", "rule"}
CALIBRATE_KEYS = {"target", "value"}
POPULATION_KINDS = ("representative", "investors", "holdings")

_MISSING = object()


def _fail(message, location=None):
    where = f" at {location}" if location else ""
    raise ModelError("CONFIG_PARSE", f"{message}{where}")


def _check_keys(mapping, allowed, location):
    if not isinstance(mapping, dict):
        _fail("expected an object", location)
    for key in mapping:
        if key not in allowed:
            _fail(f"unknown key {key!r}", f"{location}.{key}" if location else key)


def _number(mapping, key, location, default=_MISSING):
    value = mapping.get(key, default)
    if value is _MISSING:
        _fail("missing required number", f"{location}.{key}")
    if value is None or isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"expected a number, got {value!r}", f"{location}.{key}")
    return float(value)


def _integer(mapping, key, location, default):
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(f"expected an integer, got {value!r}", f"{location}.{key}")
    return value


def validate(doc):
    """Check every section against the schema; returns the document unchanged."""
    _check_keys(doc, SCHEMA, "")
    for section, allowed in SCHEMA.items():
        if section in doc and allowed is not None:
            _check_keys(doc[section], allowed, section)
    population = doc.get("population")
    if population is not None:
        if "mix" in population:
            _check_keys(population["mix"], MIX_KEYS, "population.mix")
        for name, keys in (("types", TYPE_KEYS), ("groups", GROUP_KEYS)):
            members = population.get(name, [])
            if not isinstance(members, list):
                _fail("expected a list", f"population.{name}")
            for i, member in enumerate(members):
                _check_keys(member, keys, f"population.{name}[{i}]")
                _check_keys(member.get("rule", {}), RULE_KEYS, f"population.{name}[{i}].rule")
    return doc


def parse_config(text, source="<config>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError("CONFIG_PARSE", f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return validate(doc)


def load_config(path, overrides=()):
    """Read a config file (or start from an empty one), apply overrides, validate."""
    if path is None:
        doc = {}
    else:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ModelError("CONFIG_PARSE", f"cannot read {path}: {exc.strerror}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelError("CONFIG_PARSE", f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    doc = apply_overrides(doc, overrides)
    logger.debug("config loaded from %s with %d overrides", path, len(overrides))
    return validate(doc)


def apply_overrides(doc, overrides):
    """
    Set dotted keys, e.g. "utility.lambda=2.5" or "sim.seed=7".

    The value is parsed as JSON when possible and kept as a string otherwise.
    """
    doc = copy.deepcopy(doc)
    for item in overrides:
        path, sep, raw = item.partition("=")
        if not sep or not path:
            _fail(f"override {item!r} is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = doc
        keys = path.split(".")
        for key in keys[:-1]:
            node = target.setdefault(key, {})
            if not isinstance(node, dict):
                _fail("cannot set a key inside a non-object", path)
            target = node
        target[keys[-1]] = value
    return doc


def _section(doc, name):
    if name not in doc:
        _fail(f"missing section {name!r}")
    return doc[name]


def build_asset(doc):
    section = _section(doc, "asset")
    return AssetParams(mu=_number(section, "mu", "asset"), sigma=_number(section, "sigma", "asset"))


def build_costs(doc):
    section = doc.get("costs", {})
    k_s = _number(section, "k_s", "costs", 0.0)
    k_p = _number(section, "k_p", "costs", 0.0)
    kappa = section.get("kappa", "K")
    if isinstance(kappa, str):
        return CostSpec.with_preset(k_s, k_p, kappa)
    return CostSpec(k_s, k_p, kappa=_number(section, "kappa", "costs"))


def build_utility(doc):
    section = _section(doc, "utility")
    return UtilitySpec(
        family=section.get("family", "scaled-tk"),
        alpha_g=_number(section, "alpha_g", "utility"),
        alpha_l=_number(section, "alpha_l", "utility"),
        lam=_number(section, "lambda", "utility"),
        beta=_number(section, "beta", "utility", 0.0),
        delta=_number(section, "delta", "utility"),
    )


def build_rule(spec, doc, location="policy"):
    """
    ThresholdRule or PoissonRule from {theta, theta_big}, {rho},
    {"calibrate": {target, value}} or {"optimal": true}.
    """
    _check_keys(spec, RULE_KEYS, location)
    if spec.get("optimal"):
        policy = cached_policy(build_utility(doc), build_asset(doc), build_costs(doc))
        theta = policy.theta if policy.regime is Regime.TWO_POINT else 0.0
        return ThresholdRule(theta, policy.theta_big)
    if "calibrate" in spec:
        target = spec["calibrate"]
        _check_keys(target, CALIBRATE_KEYS, f"{location}.calibrate")
        rho = calibrate_poisson_rate(target.get("target"), _number(target, "value", f"{location}.calibrate"),
                                     build_asset(doc))
        return PoissonRule(rho)
    if "rho" in spec:
        return PoissonRule(_number(spec, "rho", location))
    return ThresholdRule(_number(spec, "theta", location), _number(spec, "theta_big", location))


def build_mix(doc):
    section = _section(doc, "population")
    mix = section.get("mix")
    if mix is None:
        _fail("missing account size mix", "population.mix")
    if "sizes" in mix:
        return AccountSizeMix(sizes=tuple(mix["sizes"]), fractions=tuple(mix.get("fractions", ())))
    return AccountSizeMix(n_bar=_number(mix, "n_bar", "population.mix"),
                          sigma_n=_number(mix, "sigma_n", "population.mix", 0.0))


def build_population(doc):
    """(kind, members): members are InvestorType or HoldingGroup lists, or the mix."""
    section = _section(doc, "population")
    kind = section.get("kind", "representative")
    if kind not in POPULATION_KINDS:
        _fail(f"unknown population kind {kind!r}; use one of {POPULATION_KINDS}", "population.kind")
    if kind == "representative":
        return kind, build_mix(doc)
    asset = build_asset(doc)
    if kind == "investors":
        types = section.get("types", [])
        return kind, [
            InvestorType(pi=_number(t, "pi", f"population.types[{i}]"),
                         n=_integer(t, "n", f"population.types[{i}]", None),
                         rule=build_rule(t.get("rule", {}), doc, f"population.types[{i}].rule"),
                         asset=asset)
            for i, t in enumerate(types)
        ]
    groups = section.get("groups", [])
    return kind, [
        HoldingGroup(n=_integer(g, "n", f"population.groups[{i}]", None),
                     rule=build_rule(g.get("rule", {}), doc, f"population.groups[{i}].rule"),
                     asset=asset)
        for i, g in enumerate(groups)
    ]


def build_sim_config(doc, seed=None):
    section = doc.get("sim", {})
    defaults = SimConfig()
    horizon = section.get("horizon_years")
    return SimConfig(
        seed=seed if seed is not None else _integer(section, "seed", "sim", defaults.seed),
        dt=_number(section, "dt", "sim", defaults.dt),
        n_episodes=_integer(section, "n_episodes", "sim", defaults.n_episodes),
        horizon_years=None if horizon is None else _number(section, "horizon_years", "sim"),
        n_accounts=_integer(section, "n_accounts", "sim", defaults.n_accounts),
        antithetic=bool(section.get("antithetic", defaults.antithetic)),
        bridge=bool(section.get("bridge", defaults.bridge)),
        batches=_integer(section, "batches", "sim", defaults.batches),
        block_size=_integer(section, "block_size", "sim", defaults.block_size),
        chunk_steps=_integer(section, "chunk_steps", "sim", defaults.chunk_steps),
        workers=_integer(section, "workers", "sim", defaults.workers),
        keep_ledger=bool(section.get("ledger", defaults.keep_ledger)),
    )
