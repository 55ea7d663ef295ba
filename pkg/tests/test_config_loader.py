import json

import pytest

import config_loader
from episode_stats import PoissonRule, ThresholdRule
from model_params import ModelError

BASE = {
    "asset": {"mu": 0.09, "sigma": 0.30},
    "costs": {"k_s": 0.01, "k_p": 0.01, "kappa": "sale"},
    "utility": {"family": "scaled-tk", "alpha_g": 0.5, "alpha_l": 0.5, "lambda": 2.5, "beta": 0.3, "delta": 0.05},
}


def parse_error(text):
    with pytest.raises(ModelError) as err:
        config_loader.parse_config(text)
    assert err.value.code == "CONFIG_PARSE"
    return err.value.message


def test_unknown_key_reports_its_location():
    assert "utility.lamda" in parse_error('{"utility": {"lamda": 2.0}}')
    assert "population.groups[1].rule.thta" in parse_error(
        '{"population": {"groups": [{"n": 4, "rule": {"rho": 1}}, {"n": 4, "rule": {"thta": 0.8}}]}}')
    assert "colour" in parse_error('{"colour": 1}')


def test_malformed_json_reports_line_and_column():
    message = parse_error('{\n  "asset": {"mu": 0.09,}\n}')
    assert "line 2" in message
    assert "column" in message


def test_result_section_is_ignored():
    doc = dict(BASE, result={"anything": [1, 2, {"nested": True}]})
    parsed = config_loader.parse_config(json.dumps(doc))
    assert config_loader.build_asset(parsed).mu == 0.09


def test_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(BASE), encoding="utf-8")
    doc = config_loader.load_config(path, ["utility.lambda=2.56", "sim.seed=7", "population.kind=holdings"])
    assert config_loader.build_utility(doc).lam == 2.56
    assert doc["sim"]["seed"] == 7
    assert doc["population"]["kind"] == "holdings"
    assert BASE["utility"]["lambda"] == 2.5


def test_override_errors(tmp_path):
    with pytest.raises(ModelError) as err:
        config_loader.load_config(None, ["utility.lambda"])
    assert err.value.code == "CONFIG_PARSE"
    with pytest.raises(ModelError) as err:
        config_loader.load_config(None, ["utility.lamda=2"])
    assert "utility.lamda" in err.value.message
    with pytest.raises(ModelError) as err:
        config_loader.load_config(tmp_path / "missing.json")
    assert err.value.code == "CONFIG_PARSE"


def test_missing_section_and_bad_numbers():
    with pytest.raises(ModelError) as err:
        config_loader.build_asset({})
    assert err.value.code == "CONFIG_PARSE"
    with pytest.raises(ModelError) as err:
        config_loader.build_asset({"asset": {"mu": "high", "sigma": 0.3}})
    assert "asset.mu" in err.value.message


@pytest.mark.parametrize("kappa, expected", [("K", 0.99 / 1.01), ("one", 1.0), ("sale", 0.99), (0.985, 0.985)])
def test_costs_kappa(kappa, expected):
    doc = {"costs": {"k_s": 0.01, "k_p": 0.01, "kappa": kappa}}
    assert config_loader.build_costs(doc).kappa == pytest.approx(expected)


def test_costs_default_to_zero():
    assert config_loader.build_costs({}).is_costless


def test_build_rule_variants():
    assert config_loader.build_rule({"theta": 0.772, "theta_big": 1.277}, BASE) == ThresholdRule(0.772, 1.277)
    assert config_loader.build_rule({"rho": 1.16}, BASE) == PoissonRule(1.16)
    fitted = config_loader.build_rule({"calibrate": {"target": "loss", "value": 0.772}}, BASE)
    assert fitted.rho == pytest.approx(0.3634, abs=0.001)
    optimal = config_loader.build_rule({"optimal": True}, BASE)
    assert optimal.theta == pytest.approx(0.183, abs=0.002)
    assert optimal.theta_big == pytest.approx(1.037, abs=0.002)


def test_optimal_gains_only_rule_has_zero_loss_threshold():
    doc = json.loads(json.dumps(BASE))
    doc["utility"]["lambda"] = 3.0
    assert config_loader.build_rule({"optimal": True}, doc).theta == 0.0


def test_build_population():
    doc = dict(BASE, population={"kind": "investors", "types": [
        {"pi": 0.5, "n": 8, "rule": {"theta": 0.772, "theta_big": 1.277}},
        {"pi": 0.5, "n": 8, "rule": {"rho": 1.5}},
    ]})
    kind, members = config_loader.build_population(config_loader.validate(doc))
    assert kind == "investors"
    assert [m.n for m in members] == [8, 8]
    assert isinstance(members[1].rule, PoissonRule)

    doc = dict(BASE, population={"kind": "representative", "mix": {"n_bar": 4.1, "sigma_n": 4.0}})
    kind, mix = config_loader.build_population(doc)
    assert mix.multiplier == pytest.approx(4.1 + 16 / 4.1)

    with pytest.raises(ModelError):
        config_loader.build_population(dict(BASE, population={"kind": "households"}))


def test_build_sim_config():
    cfg = config_loader.build_sim_config({})
    assert cfg.bridge and cfg.seed == 1
    doc = {"sim": {"seed": 3, "dt": 0.001, "bridge": False, "n_episodes": 5000, "ledger": "episodes.csv"}}
    cfg = config_loader.build_sim_config(doc)
    assert (cfg.seed, cfg.dt, cfg.bridge, cfg.n_episodes, cfg.keep_ledger) == (3, 0.001, False, 5000, True)
    assert config_loader.build_sim_config(doc, seed=11).seed == 11
    with pytest.raises(ModelError) as err:
        config_loader.build_sim_config({"sim": {"n_episodes": 1e5}})
    assert "sim.n_episodes" in err.value.message
