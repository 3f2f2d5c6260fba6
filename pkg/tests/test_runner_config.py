import json

import pytest

from argument_corpus import JointWeights
from runner_config import RunConfig, apply_layer, build_config, env_layer


def test_defaults():
    config = build_config({}, environ={})
    assert config.method == "ilp" and config.k == 10 and config.jobs == 1
    assert config.weights == JointWeights()
    assert config.methods == ("separate", "mst", "ilp")


def test_environment_layer():
    environ = {"ARGMINE_SEED": "7", "ARGMINE_WEIGHTS": "0.1,0.2,0.3,0.4", "ARGMINE_BETA": "0.3", "OTHER": "x"}
    assert env_layer(environ) == {"seed": "7", "weights": "0.1,0.2,0.3,0.4", "beta": "0.3"}
    config = build_config({}, environ=environ)
    assert config.seed == 7
    assert (config.weights.w1, config.weights.w4, config.weights.beta) == (0.1, 0.4, 0.3)
    assert config.weights.v == 0.5


def test_later_layers_win(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"seed": 3, "k": 5, "weights": [0.4, 0.2, 0.2, 0.2], "methods": ["separate", "ilp"]}))
    config = build_config({"seed": 11, "k": None}, str(path), environ={"ARGMINE_SEED": "7", "ARGMINE_JOBS": "4"})
    assert config.seed == 11
    assert config.k == 5
    assert config.jobs == 4
    assert config.methods == ("separate", "ilp")
    assert config.weights.w1 == 0.4


def test_cli_method_list_string():
    config = build_config({"methods": "separate, mst"}, environ={})
    assert config.methods == ("separate", "mst")


def test_unknown_keys_are_ignored(caplog):
    config = apply_layer(RunConfig(), {"colour": "blue", "quiet": "yes"}, "test")
    assert config.quiet is True
    assert "colour" in caplog.text


@pytest.mark.parametrize("values", [
    {"method": "crf"},
    {"methods": "ilp,crf"},
    {"k": 0},
    {"jobs": 0},
    {"kind": "tweets"},
    {"variant": "mod4"},
    {"kind": "microtext", "variant": "mod2"},
    {"log_level": "LOUD"},
    {"weights": "0.5,0.5,0.5"},
    {"weights": "1.5,0,0,0"},
    {"v": -0.1},
])
def test_invalid_settings(values):
    with pytest.raises(ValueError):
        build_config(values, environ={})


def test_config_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        build_config({}, str(tmp_path / "missing.json"), environ={})
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")
    with pytest.raises(ValueError):
        build_config({}, str(path), environ={})


def test_to_dict_is_json_ready():
    data = build_config({"weights": "0.1,0.2,0.3,0.4"}, environ={}).to_dict()
    assert json.loads(json.dumps(data))["weights"]["w3"] == 0.3
    assert data["methods"] == ["separate", "mst", "ilp"]
