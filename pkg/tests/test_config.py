import json
from importlib import resources

import numpy as np
import pytest

from apnn.config import load_config, parse_config
from apnn.errors import ConfigError, MissingInputError

MINIMAL = """
[problem]
id = "landau"
eps = 0.01

[method]
name = "mc"
"""


def _shipped():
    return sorted(p for p in resources.files("apnn").joinpath("configs").iterdir() if p.name.endswith(".toml"))


def test_minimal_config_gets_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.nets.hidden == [128] * 5 and cfg.quadrature.n == 32 and cfg.batches.n_domain == 512
    assert cfg.build_penalties().residual_kinetic == 500.0
    assert cfg.reference_kind() == "kinetic"
    assert cfg.build_problem().scale.eps0 == 0.01
    ns = cfg.build_networks()
    assert ns.names == ("rho", "f", "phi")
    assert cfg.build_rule().n == 32


def test_reference_kind_auto():
    assert parse_config('[problem]\nid = "uq"\n[method]\nname = "mm"\n').reference_kind() == "limit"
    assert parse_config('[problem]\nid = "landau"\neps = 0.0\n[method]\nname = "mm"\n').reference_kind() == "limit"
    cfg = parse_config('[problem]\nid = "uq"\n[method]\nname = "mm"\n[reference]\nkind = "kinetic"\n')
    assert cfg.reference_kind() == "kinetic"


def test_unknown_keys_are_errors_with_positions():
    text = MINIMAL + "\n[penalties]\nresidul = 3.0\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text, source="run.toml")
    assert "run.toml:10:1: penalties.residul" in str(err.value)
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL + "\n[training]\nlearning_rat = 1.0\n", source="run.toml")
    assert "run.toml:10:1: training.learning_rat" in str(err.value)
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL + "\n[solver]\nx = 1\n")
    assert "solver" in str(err.value)


def test_invalid_values_are_reported():
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL.replace('"mc"', '"dnn"'))
    assert "method.name" in str(err.value)
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[nets]\nhidden = []\n")
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[training]\nbeta1 = 1.5\n")


def test_malformed_toml_reports_line_and_column():
    with pytest.raises(ConfigError) as err:
        parse_config('[problem]\nid = "landau\n', source="bad.toml")
    assert "bad.toml:2:" in str(err.value)


def test_seed_override_and_json_round_trip(tmp_path):
    cfg = parse_config(MINIMAL).with_seed(7)
    assert cfg.training.seed == 7 and cfg.nets.seed == 7
    (tmp_path / "config.json").write_text(json.dumps(cfg.model_dump()))
    (tmp_path / "manifest.json").write_text(json.dumps({"config": cfg.model_dump(), "seeds": {}}))
    assert load_config(tmp_path / "config.json") == cfg
    assert load_config(str(tmp_path / "manifest.json")) == cfg
    a = cfg.build_networks().nets["f"].weights[0]
    b = load_config(tmp_path / "config.json").build_networks().nets["f"].weights[0]
    assert np.array_equal(a, b)


def test_missing_file():
    with pytest.raises(MissingInputError):
        load_config("/nonexistent/run.toml")


def test_float32_and_raw_coordinates():
    cfg = parse_config(MINIMAL + '\n[nets]\ndtype = "float32"\nfourier_modes = 0\nhidden = [4]\n')
    ns = cfg.build_networks()
    assert ns.nets["rho"].weights[0].dtype == np.float32
    assert ns.inputs.features is None


@pytest.mark.parametrize("path", _shipped(), ids=lambda p: p.name)
def test_shipped_configs_load(path):
    cfg = parse_config(path.read_text(), source=path.name)
    cfg.build_penalties()
    assert cfg.build_problem().id == cfg.problem.id


def test_every_acceptance_regime_has_a_shipped_config():
    names = {p.name for p in _shipped()}
    for n in ("landau_mm_eps1.toml", "landau_mm_eps0.01.toml", "landau_pinn_eps0.01.toml",
              "landau_mc_eps0.01.toml", "bump_on_tail_mc_eps0.001.toml", "quick.toml"):
        assert n in names
