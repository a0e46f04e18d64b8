import pytest

from capssc.config import ENV_VAR, ConfigError, RunConfig, load_config, write_config


def test_defaults_are_the_reference_run():
    cfg = load_config()
    assert (cfg.epsilon, cfg.eta, cfg.a_exponent, cfg.n, cfg.cfl) == (0.1, 1e-2, 5.0, 512, 0.5)
    assert cfg.spacing == 2 / 512 and cfg.T_horizon is None


def test_file_then_overrides(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[run]\nepsilon = 0.2\nT_horizon = 3.5\n[grid]\nn = 64\n[profile]\nblend_width = auto\n")
    cfg = load_config(p, {"n": "128", "run_id": "x"})
    assert cfg.epsilon == 0.2 and cfg.T_horizon == 3.5 and cfg.n == 128 and cfg.run_id == "x"
    assert cfg.blend_width is None


def test_environment_variable_names_the_default_file(tmp_path, monkeypatch):
    p = tmp_path / "env.ini"
    p.write_text("[grid]\nn = 96\n")
    monkeypatch.setenv(ENV_VAR, str(p))
    assert load_config().n == 96
    assert load_config(None, {"n": 32}).n == 32


def test_round_trip(tmp_path):
    cfg = RunConfig(epsilon=0.05, n=64, t_end=2.0, run_id="rt")
    write_config(cfg, tmp_path / "rt.ini")
    assert load_config(tmp_path / "rt.ini") == cfg


@pytest.mark.parametrize("text", [
    "[run]\nbogus = 1\n",
    "[nowhere]\nn = 3\n",
    "[grid]\nn = many\n",
    "[run]\neta = 2\n",
    "[run]\nsigma = 2\n",
    "[grid]\nradius = 3\n",
    "[run]\ncfl = 0.9\n",
    "[run]\na_exponent = 1\n",
])
def test_bad_files_are_refused(tmp_path, text):
    p = tmp_path / "bad.ini"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_config(p)


def test_missing_file_and_unknown_override(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")
    with pytest.raises(ConfigError):
        load_config(None, {"colour": "red"})
