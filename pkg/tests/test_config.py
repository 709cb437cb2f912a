"""Run-configuration parsing and validation."""
import json

import pytest

from fdtlab import ConfigError
from fdtlab.config import CONFIG_VERSION, load_config, parse_config


def _base(**extra):
    doc = {"version": CONFIG_VERSION,
           "model": {"kind": "ring", "sites": 6},
           "tau": [0.25]}
    doc.update(extra)
    return doc


def test_minimal_config_defaults():
    cfg = parse_config(_base())
    assert cfg.tau == (0.25,)
    assert cfg.frameworks == ("strobo", "nhh")
    assert cfg.n_max == 4000
    assert cfg.t_grid == {"stop": 10.0, "count": 400}
    assert cfg.initial["kind"] == "site"
    assert cfg.grid is None


def test_unknown_top_level_key():
    with pytest.raises(ConfigError, match="taus"):
        parse_config(_base(taus=[0.1]))


def test_unknown_nested_key():
    doc = _base()
    doc["model"]["size"] = 6
    with pytest.raises(ConfigError, match="model.size"):
        parse_config(doc)


def test_version_mismatch():
    doc = _base()
    doc["version"] = CONFIG_VERSION + 1
    with pytest.raises(ConfigError, match="version"):
        parse_config(doc)


def test_tau_must_be_positive_nonempty():
    with pytest.raises(ConfigError, match="tau"):
        parse_config(_base(tau=[]))
    with pytest.raises(ConfigError, match="tau"):
        parse_config(_base(tau=[-0.1]))
    with pytest.raises(ConfigError, match="tau"):
        parse_config(_base(tau="0.1"))


def test_model_kind_validation():
    doc = _base()
    doc["model"] = {"kind": "hexagon"}
    with pytest.raises(ConfigError, match="kind"):
        parse_config(doc)
    doc["model"] = {"kind": "ring", "sites": 1}
    with pytest.raises(ConfigError, match="sites"):
        parse_config(doc)
    doc["model"] = {"kind": "gue", "dim": 1}
    with pytest.raises(ConfigError, match="dim"):
        parse_config(doc)
    doc["model"] = {"kind": "file"}
    with pytest.raises(ConfigError, match="path"):
        parse_config(doc)


def test_initial_state_validation():
    doc = _base(initial={"kind": "perturbed", "epsilon": 1.5})
    with pytest.raises(ConfigError, match="epsilon"):
        parse_config(doc)
    doc = _base(initial={"kind": "vector"})
    with pytest.raises(ConfigError, match="real"):
        parse_config(doc)
    doc = _base(initial={"kind": "ghost"})
    with pytest.raises(ConfigError, match="kind"):
        parse_config(doc)


def test_framework_and_mode_validation():
    with pytest.raises(ConfigError, match="framework"):
        parse_config(_base(frameworks=["strobo", "exact"]))
    with pytest.raises(ConfigError, match="framework"):
        parse_config(_base(frameworks=[]))
    with pytest.raises(ConfigError, match="mode"):
        parse_config(_base(modes=["sideways"]))


def test_numeric_range_validation():
    with pytest.raises(ConfigError, match="epsilon"):
        parse_config(_base(epsilon=[2.0]))
    with pytest.raises(ConfigError, match="xi"):
        parse_config(_base(xi=[-1]))
    with pytest.raises(ConfigError, match="n_max"):
        parse_config(_base(n_max=0))
    with pytest.raises(ConfigError, match="t_grid"):
        parse_config(_base(t_grid={"stop": 10.0, "count": 1}))
    with pytest.raises(ConfigError, match="grid"):
        parse_config(_base(grid={"nx": 1, "ny": 5}))


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(_base(out_dir="results")))
    cfg = load_config(str(path))
    assert cfg.out_dir == "results"
    assert cfg.model["kind"] == "ring"


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(str(bad))
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="object"):
        load_config(str(arr))
