import pytest
from hypothesis import given
from hypothesis import strategies as st

from wickcgl.harness.config import (EXPERIMENTS, ConfigError, RunConfig, default_config, load_config,
                                    parse_observable)


@pytest.mark.parametrize("experiment", EXPERIMENTS)
def test_defaults_round_trip_through_toml(experiment):
    cfg = default_config(experiment, seed=3)
    again = RunConfig.from_toml(cfg.to_toml())
    assert again == cfg
    assert again.to_toml() == cfg.to_toml()


@given(mu=st.floats(0.1, 10.0), N=st.integers(1, 64), seed=st.integers(0, 2**62),
       lam=st.floats(0.0, 100.0), renorm=st.sampled_from(["stationary", "time", "none"]))
def test_round_trip_property(mu, N, seed, lam, renorm):
    cfg = RunConfig.from_dict({"experiment": "coupling", "seed": seed,
                               "model": {"mu": mu, "lambda": lam, "renorm": renorm}, "grid": {"N": N}})
    assert RunConfig.from_toml(cfg.to_toml()) == cfg
    assert cfg.params().lam == lam


def test_lambda_key_is_renamed():
    cfg = RunConfig.from_toml('[model]\nlambda = 5\n')
    assert cfg.model.lam == 5.0
    assert "lambda" in cfg.to_dict()["model"]
    with pytest.raises(ConfigError):
        RunConfig.from_toml('[model]\nlam = 5\n')


@pytest.mark.parametrize("text", [
    'experimnt = "verify"\n',
    '[modle]\nmu = 1.0\n',
    '[grid]\nN = 8\nNN = 3\n',
    '[run]\nstep = "fast"\n',
    '[grid]\nN = 8.5\n',
    'model = 3\n',
    '[model]\nnu = [1.0]\n',
    '[model]\nnu = [-1.0, 0.0]\n',
    '[model]\nrenorm = "magic"\n',
    '[run]\nhorizon = 1.0\nstep = 0.3\n',
    '[run]\nburn_in = 1.0\n',
    '[run]\nobservables = ["energy"]\n',
    '[grid]\nN = 4\n[run]\nobservables = ["mode(5,0)"]\n',
    '[grid]\npad = 1\n',
    '[init]\nkind = "smooth"\n',
    '[coupling]\nlambdas = []\n',
    '[regularity]\norders = [[0, 0]]\n',
    '[norms]\np = [0]\n',
    'seed = -1\n',
    'experiment = "other"\n',
    'this is not toml',
])
def test_invalid_configs_raise(text):
    with pytest.raises(ConfigError):
        RunConfig.from_toml(text)


def test_base_config_is_overlaid(tmp_path):
    base = default_config("coupling")
    path = tmp_path / "c.toml"
    path.write_text('experiment = "coupling"\n[run]\nensemble = 3\n')
    cfg = load_config(path, base=base)
    assert cfg.run.ensemble == 3
    assert cfg.run.step == base.run.step
    assert cfg.model.tau == [1.0, 0.0]


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/config.toml")


def test_derived_quantities():
    cfg = RunConfig.from_toml('[run]\nhorizon = 2.0\nstep = 0.01\n[model]\nnu = [1.0, 0.5]\n')
    assert cfg.n_steps == 200
    assert cfg.params().nu == 1 + 0.5j
    assert cfg.grid_spec(32).N == 32


def test_parse_observable():
    assert parse_observable("mode(1,-2)") == ("mode", (1, -2))
    assert parse_observable("l2") == ("l2", None)
    with pytest.raises(ConfigError):
        parse_observable("mode(1)")
