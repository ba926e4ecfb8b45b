import json

import pytest

from ymflow import cli
from ymflow import config as cm

BASE = {
    "name": "t",
    "geometry": "FourManifold",
    "grid": {"shape": [4, 4, 4, 4]},
    "initial": {"ansatz": "random", "seed": 1},
    "duration": {"steps": 2},
}


def _cfg(**over):
    obj = json.loads(json.dumps(BASE))
    for dotted, v in over.items():
        sec, _, key = dotted.partition("__")
        if key:
            obj.setdefault(sec, {})[key] = v
        else:
            obj[sec] = v
    return obj


def test_defaults_filled_in():
    cfg = cm.parse_config(_cfg())
    assert cfg.periods == (1.0,) * 4 and cfg.method == "rk4" and cfg.every == 1
    assert cfg.n == 4 and cfg.spec.label == "FourManifold"


@pytest.mark.parametrize("name", cli.list_scenarios())
def test_shipped_scenarios_parse(name):
    cfg = cm.load_config(cli.scenario_path(name))
    assert cfg.name == name


def test_unknown_key_reports_its_line(tmp_path):
    text = '{\n  "name": "x",\n  "grid": {"shape": [4,4,4,4]},\n  "duraton": {"steps": 1}\n}\n'
    p = tmp_path / "c.json"
    p.write_text(text)
    with pytest.raises(cm.ConfigError) as ei:
        cm.load_config(p)
    assert ei.value.line == 4 and "duraton" in str(ei.value)


def test_invalid_json_reports_line(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{\n  "name": "x",\n  "grid": \n}\n')
    with pytest.raises(cm.ConfigError) as ei:
        cm.load_config(p)
    assert ei.value.line == 4


@pytest.mark.parametrize("over", [
    {"duration": {}},
    {"duration": {"steps": 2, "t_end": 0.1}},
    {"duration": {"steps": 0}},
    {"grid": {"shape": [3, 4, 4, 4]}},
    {"grid": {"shape": [4, 4, 4, 4], "periods": [1, 1]}},
    {"geometry": "G2"},
    {"flow": "k7"},
    {"initial": {"ansatz": "nope"}},
    {"initial": {"seed": -1}},
    {"integrator": {"method": "leapfrog"}},
    {"monitor": {"beta": 5}},
    {"monitor": {"cutoff": {"center": [0.5] * 4, "radius": 0.75}}},
    {"monitor": {"probes": [{"x": [0.5], "R": 0.1}]}},
    {"output": {"csv": "a/b.csv"}},
    {"output": {"report": None}},
])
def test_invalid_values_rejected(over):
    obj = _cfg()
    obj.update(over)
    with pytest.raises(cm.ConfigError):
        cm.parse_config(obj)


@pytest.mark.parametrize("mono,ok", [
    ({"x": [0.5] * 4, "R1": 0.2, "R2": 0.1, "t1": 0, "t2": "end"}, True),
    ({"x": [0.5] * 4, "R1": 0.2, "R2": 0.1, "t1": 0, "t2": 0.01}, True),
    ({"x": [0.5] * 4, "R1": 0.1, "R2": 0.2, "t1": 0, "t2": 0.01}, False),
    ({"x": [0.5] * 4, "R1": 2.0, "R2": 0.2, "t1": 0, "t2": 0.01}, False),
    ({"x": [0.5] * 4, "R1": 0.2, "R2": 0.1, "t1": 0.02, "t2": 0.01}, False),
    ({"x": [0.5] * 4, "R1": 0.2, "R2": 0.1, "t1": -1, "t2": 0.01}, False),
    ({"x": [0.5] * 4, "R1": 0.2, "R2": 0.1, "t1": 0}, False),
])
def test_monotonicity_block(mono, ok):
    obj = _cfg(monitor__monotonicity=mono)
    if ok:
        assert cm.parse_config(obj).monotonicity["R1"] == 0.2
    else:
        with pytest.raises(cm.ConfigError):
            cm.parse_config(obj)


def test_reduced_flow_dimension_checked():
    obj = _cfg(flow="cy3")
    obj["geometry"] = None
    with pytest.raises(cm.ConfigError):
        cm.parse_config(obj)
    obj["grid"] = {"shape": [4] * 6}
    assert cm.parse_config(obj).flow == "cy3"


def test_keys_help_lists_every_key():
    text = cm.keys_help()
    for key in cm.CONFIG_KEYS:
        assert key in text
