import json

import pytest

from relativistic_zk.config import (PRESETS, AdversaryConfig, AdversaryMode, ConfigError, Endpoints, ProtocolConfig,
                                    SessionSeeds, SimulationSettings, config_from_dict, env_log_level, load_config)


@pytest.mark.parametrize("text, expected", [
    ("honest", AdversaryConfig()),
    ("cheat_fixed_fail(2)", AdversaryConfig(AdversaryMode.CHEAT_FIXED_FAIL, fail_challenge=2)),
    ("cheat_rotating", AdversaryConfig(AdversaryMode.CHEAT_ROTATING)),
    ("abort_rate(0.25)", AdversaryConfig(AdversaryMode.ABORT_RATE, abort_prob=0.25)),
    (" spooky_relay ", AdversaryConfig(AdversaryMode.SPOOKY_RELAY)),
])
def test_parse_adversary(text, expected):
    assert AdversaryConfig.parse(text) == expected


def test_abort_rate_defaults_to_one_third():
    assert AdversaryConfig.parse("abort_rate").abort_prob == pytest.approx(1 / 3)
    assert AdversaryConfig.parse("abort_rate(0.5)").describe() == "abort_rate(0.5)"


@pytest.mark.parametrize("text", ["", "sneaky", "cheat_fixed_fail(4)", "cheat_fixed_fail", "abort_rate(2)",
                                  "abort_rate(x)", "honest(1)", "cheat_fixed_fail(1.5)"])
def test_parse_adversary_errors(text):
    with pytest.raises(ConfigError):
        AdversaryConfig.parse(text)


def test_mode_arguments_are_exclusive():
    with pytest.raises(ConfigError):
        AdversaryConfig(AdversaryMode.HONEST, fail_challenge=1)
    with pytest.raises(ConfigError):
        AdversaryConfig(AdversaryMode.CHEAT_ROTATING, abort_prob=0.1)


def test_defaults_are_the_published_block():
    config = ProtocolConfig()
    assert (config.n, config.k, config.w, config.q_exponent, config.R) == (1704, 769, 216, 23209, 340)
    assert config.allowed_losses == 22
    assert config.preset is PRESETS["scenario1"]


@pytest.mark.parametrize("changes", [
    {"k": 0}, {"k": 1704}, {"w": 0}, {"R": 0}, {"lam": 1.0}, {"role": "p3"},
])
def test_protocol_config_validation(changes):
    with pytest.raises(ConfigError):
        ProtocolConfig(**changes)


def test_simulation_settings_validation():
    with pytest.raises(ConfigError):
        SimulationSettings(drop_prob=1.0)
    with pytest.raises(ConfigError):
        SimulationSettings(jitter_ns=-5)


def test_field_params_for_config():
    assert ProtocolConfig(n=16, k=8, w=3, q_exponent=None).field_params().q_exponent == 61
    with pytest.raises(ConfigError):
        ProtocolConfig(n=16, k=8, w=3, q_exponent=31).field_params()


def test_seeds_from_master_are_stable():
    a, b = SessionSeeds.from_master("abc"), SessionSeeds.from_master("abc")
    assert a == b
    assert len({a.prover_pair, a.verifier_pair, a.harness}) == 3
    assert SessionSeeds.fresh() != SessionSeeds.fresh()


def test_endpoints():
    endpoints = Endpoints(p1="10.0.0.1:9000", v1=":9001")
    assert endpoints.address("p1") == ("10.0.0.1", 9000)
    assert endpoints.address("v1") == ("127.0.0.1", 9001)
    with pytest.raises(ConfigError):
        endpoints.address("p9")
    with pytest.raises(ConfigError):
        Endpoints(p2="host:port").address("p2")


def test_config_from_dict_round_trips_the_echo():
    original = ProtocolConfig(n=16, k=8, w=3, q_exponent=None, R=12, lam=0.25, seeds=SessionSeeds.from_master("e"),
                              adversary=AdversaryConfig.parse("cheat_fixed_fail(1)"))
    rebuilt = config_from_dict(original.to_dict())
    assert rebuilt.seeds == original.seeds
    assert rebuilt.adversary == original.adversary
    assert (rebuilt.n, rebuilt.q_exponent, rebuilt.R, rebuilt.lam) == (16, None, 12, 0.25)
    assert rebuilt.preset == original.preset


def test_load_config(tmp_path):
    path = tmp_path / "session.json"
    path.write_text(json.dumps({
        "preset": "scenario2", "n": 16, "k": 8, "w": 3, "q_exponent": None, "R": 10,
        "seeds": {"prover_pair": "00ff", "verifier_pair": "0102"},
        "simulation": {"drop_prob": 0.01, "delay_overrides": {"3": 500}},
    }))
    config = load_config(path)
    assert config.preset.name == "scenario2"
    assert config.seeds.prover_pair == b"\x00\xff"
    assert config.simulation.delay_overrides == {3: 500}


def test_harness_seed_follows_the_pair_seeds():
    block = {"seeds": {"prover_pair": "aa", "verifier_pair": "bb"}}
    first, second = config_from_dict(block).seeds, config_from_dict(dict(block)).seeds
    assert first.harness == second.harness
    assert not first.ephemeral and ProtocolConfig().seeds.ephemeral
    explicit = config_from_dict({"seeds": {"prover_pair": "aa", "verifier_pair": "bb", "harness": "cc"}})
    assert explicit.seeds.harness == b"\xcc"


def test_custom_preset():
    config = config_from_dict({"preset": {"D_km": 30, "delta_T_ns": 500_000, "T_shift_ns": 50_000}})
    assert config.preset.name == "custom" and config.D_km == 30


@pytest.mark.parametrize("body", [
    "not json",
    "[1, 2]",
    json.dumps({"preset": "scenario9"}),
    json.dumps({"seeds": {"prover_pair": "00"}}),
    json.dumps({"n": "many"}),
    json.dumps({"preset": {"D_km": 30}}),
])
def test_load_config_errors(tmp_path, body):
    path = tmp_path / "bad.json"
    path.write_text(body)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_env_log_level(monkeypatch):
    monkeypatch.setenv("RELZK_LOG_LEVEL", "debug")
    assert env_log_level() == "DEBUG"
    monkeypatch.delenv("RELZK_LOG_LEVEL")
    assert env_log_level() == "INFO"
