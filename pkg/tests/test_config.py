import pytest

from gaitevo.config import (SimSettings, config_hash, format_sim_settings, load_sim_settings,
                            parse_sim_settings, save_sim_settings)
from gaitevo.errors import ConfigurationError


def test_defaults_round_trip(tmp_path):
    s = SimSettings()
    path = tmp_path / "sim.ini"
    save_sim_settings(s, path)
    assert load_sim_settings(path) == s
    assert parse_sim_settings(format_sim_settings(s)).digest() == s.digest()


def test_partial_file():
    s = parse_sim_settings("""
[robot]
mass = 7.5
segments = 0.1, 0.2, 0.2
hips = -0.1, 0.2, 0; 0.1, 0.2, 0; -0.1, -0.2, 0; 0.1, -0.2, 0   # rectangle
[evaluation]
duration = 8
start_at_target = yes
""")
    assert s.robot.mass == 7.5
    assert s.robot.segments == (0.1, 0.2, 0.2)
    assert s.robot.hips[3] == (0.1, -0.2, 0.0)
    assert s.evaluation.duration == 8.0
    assert s.evaluation.start_at_target is True
    assert s.ground.stiffness == 5000.0


@pytest.mark.parametrize("text", [
    "[robot]\nmas = 5\n",
    "[ground]\nfriction = slippery\n",
    "[robot]\nmass = -1\n",
    "[evaluation]\nstart_at_target = maybe\n",
    "not an ini file",
])
def test_errors(text):
    with pytest.raises(ConfigurationError):
        parse_sim_settings(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_sim_settings(tmp_path / "nope.ini")


def test_default_when_no_path():
    assert load_sim_settings(None) == SimSettings()


def test_hash_sensitive_and_stable():
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    assert len(SimSettings().digest()) == 16
