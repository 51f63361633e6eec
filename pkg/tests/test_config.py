from pathlib import Path

import numpy as np
import pytest

from hiord.config import ConfigError, load_config, parse_config, scenario_from_dict
from hiord.engine import simulate
from hiord.gains import is_hurwitz, is_schur
from hiord.lti import char_poly
from hiord.scenarios import example1_scenario
from hiord.switching import DiscreteSwitchingSignal, discrete_verify_ujqsc, verify_ujqsc

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

BASE = """
kind = "state-feedback"
n_agents = 3
order = 2
duration = 1.0
dt = 0.01

[gains]
a = [1]

[[graphs]]
edges = ["2 <- 1", "3 <- 2"]

[initial]
x = [[1, 0], [0, 0], [-1, 0]]
"""


def write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_example1_config_matches_builtin():
    sc = load_config(CONFIGS / "example1.toml")
    ref = example1_scenario()
    np.testing.assert_allclose(sc.x0, ref.x0, rtol=1e-15)
    assert sc.signal.graphs == ref.signal.graphs
    assert sc.signal.slot == ref.signal.slot
    assert verify_ujqsc(sc.signal, parse_config((CONFIGS / "example1.toml").read_text())["window"])


def test_balanced_rings_config():
    sc = load_config(CONFIGS / "balanced_rings.toml")
    assert sc.n_agents == 5 and sc.m == 3
    assert sc.signal.cycle == (0, 1)


def test_discrete_config_places_observer():
    sc = load_config(CONFIGS / "discrete_ring.toml")
    assert isinstance(sc.signal, DiscreteSwitchingSignal)
    C = np.array([[1.0, 0, 0, 0]])
    A = np.eye(4, k=1)
    assert is_schur(char_poly(A + sc.gains.K6[:, None] @ C))
    assert discrete_verify_ujqsc(sc.signal, 3)
    a, b = load_config(CONFIGS / "discrete_ring.toml"), load_config(CONFIGS / "discrete_ring.toml")
    assert np.array_equal(a.x0, b.x0)
    assert np.abs(sc.x0).max() <= 5


def test_minimal_config(tmp_path):
    sc = load_config(write(tmp_path, BASE))
    assert sc.kind == "state-feedback"
    assert sc.signal.graphs[0].edges == {(1, 0): 1.0, (2, 1): 1.0}
    assert simulate(sc).n_samples == 101


def test_output_feedback_default_observer(tmp_path):
    text = BASE.replace('kind = "state-feedback"', 'kind = "output-feedback"')
    sc = load_config(write(tmp_path, text))
    C = np.array([[1.0, 0.0]])
    p = char_poly(np.eye(2, k=1) + sc.gains.K3[:, None] @ C)
    assert is_hurwitz(p)
    np.testing.assert_allclose(p.coeffs, (4.0, 4.0), atol=1e-12)
    assert np.all(sc.s0 == 0)


def test_observer_poles_option(tmp_path):
    text = BASE.replace('kind = "state-feedback"', 'kind = "output-feedback"').replace(
        "a = [1]", "a = [1]\nobserver_poles = [-1, -3]")
    sc = load_config(write(tmp_path, text))
    p = char_poly(np.eye(2, k=1) + sc.gains.K3[:, None] @ np.array([[1.0, 0.0]]))
    np.testing.assert_allclose(p.coeffs, (3.0, 4.0), atol=1e-12)


def test_explicit_schedule(tmp_path):
    text = BASE + """
[[graphs]]
edges = ["1 <- 3"]

[schedule]
explicit = { times = [0, 0.25], indices = [2, 1] }
"""
    sc = load_config(write(tmp_path, text))
    assert sc.signal.index_at(0.1) == 1 and sc.signal.index_at(0.3) == 0
    assert sc.signal.horizon == 1.0


def test_seeded_uniform_initials(tmp_path):
    text = BASE.replace("x = [[1, 0], [0, 0], [-1, 0]]", "seed = 3\nuniform = [-2, 2]")
    a = load_config(write(tmp_path, text))
    b = load_config(write(tmp_path, text), {"seed": 4})
    assert np.abs(a.x0).max() <= 2
    assert not np.array_equal(a.x0, b.x0)


def test_gain_override(tmp_path):
    sc = load_config(write(tmp_path, BASE), {"a": [2.0]})
    assert sc.gains.a.tolist() == [2.0]


def test_toml_syntax_error_has_location(tmp_path):
    text = BASE.replace("order = 2", "order = = 2")
    with pytest.raises(ConfigError) as exc:
        load_config(write(tmp_path, text))
    assert exc.value.line == 4
    assert exc.value.col is not None
    assert "line 4" in str(exc.value)


def test_bad_edge_literal_has_location(tmp_path):
    text = BASE.replace('"3 <- 2"', '"3 -> 2"')
    with pytest.raises(ConfigError) as exc:
        load_config(write(tmp_path, text))
    assert exc.value.line == 12
    assert exc.value.col == text.splitlines()[11].index('"3 -> 2"') + 2


def test_edge_out_of_range(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, BASE.replace('"3 <- 2"', '"7 <- 2"')))


@pytest.mark.parametrize("old,new", [
    ("n_agents = 3\n", ""),
    ("a = [1]", "b = [1]"),
    ("x = [[1, 0], [0, 0], [-1, 0]]", "x = [[1, 0], [0, 0]]"),
    ("x = [[1, 0], [0, 0], [-1, 0]]", 'x = "zero"'),
    ("duration = 1.0", "duration = -1.0"),
    ("dt = 0.01", "dt = 0.0"),
])
def test_invalid_configs(tmp_path, old, new):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, BASE.replace(old, new)))


def test_schedule_needs_one_rule(tmp_path):
    text = BASE + '[schedule]\nperiodic = { slot = 0.1 }\nexplicit = { times = [0], indices = [1] }\n'
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, BASE + "[schedule]\nperiodic = { slot = 0.1, cycle = [4] }\n"))


def test_dt_longer_than_dwell_rejected(tmp_path):
    text = BASE.replace("dt = 0.01", "dt = 0.5") + """
[[graphs]]
edges = ["1 <- 3"]

[schedule]
periodic = { slot = 0.1 }
"""
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text.replace("[schedule]\nperiodic = { slot = 0.1 }", "")))


def test_scenario_from_dict_without_text():
    data = parse_config(BASE)
    sc = scenario_from_dict(data)
    assert sc.n_agents == 3
