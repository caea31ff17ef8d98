from pathlib import Path

import pytest
import yaml

from agenet import config, delays, intensity, laws
from agenet.config import ConfigError

MINIMAL = """\
model: {alpha: 1.0, epsilon: 0.2, horizon: 1.0}
g0: {kind: uniform, lo: 0.0, hi: 1.0}
m0: {kind: dirac, value: 1.0}
intensity: {family: pure_power, xi: 1.0}
"""

SHIPPED = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))


class TestParse:
    def test_minimal_defaults(self):
        cfg = config.parse(MINIMAL)
        n = cfg.network
        assert n.n_neurons == 100 and n.delay == delays.Dirac(0.0) and cfg.seed == 0
        assert n.intensity == intensity.IntensityModel(intensity.PurePower(1.0))
        assert cfg.grid.dx == 1e-3 and cfg.chaos["n_list"] == [50, 200, 800, 3200]

    @pytest.mark.parametrize("path", SHIPPED, ids=[p.stem for p in SHIPPED])
    def test_round_trip(self, path):
        cfg = config.load(path)
        again = config.parse(yaml.safe_dump(cfg.to_dict()))
        assert again.to_dict() == cfg.to_dict()
        assert again.network == cfg.network and again.grid == cfg.grid

    def test_missing_family_named_with_line(self):
        text = MINIMAL.replace("{family: pure_power, xi: 1.0}", "\n  xi: 1.0")
        with pytest.raises(ConfigError, match=r"<config>:4: missing required key 'intensity.family'"):
            config.parse(text)

    def test_missing_section(self):
        with pytest.raises(ConfigError, match="'intensity'"):
            config.parse("\n".join(MINIMAL.splitlines()[:3]))

    def test_missing_model_key(self):
        with pytest.raises(ConfigError, match="model.horizon"):
            config.parse(MINIMAL.replace(", horizon: 1.0", ""))

    def test_unknown_keys(self):
        with pytest.raises(ConfigError, match=r":5: unknown top-level key 'extra'"):
            config.parse(MINIMAL + "extra: 1\n")
        with pytest.raises(ConfigError, match="network.bogus"):
            config.parse(MINIMAL + "network: {bogus: 3}\n")

    def test_syntax_error_line(self):
        with pytest.raises(ConfigError, match=r":2: YAML syntax error"):
            config.parse("model: {alpha: 1.0\ng0: [\n")

    def test_bad_values(self):
        with pytest.raises(ConfigError, match="alpha"):
            config.parse(MINIMAL.replace("alpha: 1.0", "alpha: -1.0"))
        with pytest.raises(ConfigError, match="seed"):
            config.parse(MINIMAL + "seed: -4\n")
        with pytest.raises(ConfigError, match=r"g0"):
            config.parse(MINIMAL.replace("hi: 1.0", "hi: 0.0"))

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            config.load(tmp_path / "missing.yaml")

    def test_seed_override(self):
        cfg = config.parse(MINIMAL).with_seed(2**64 - 1)
        assert cfg.seed == cfg.network.seed == 2**64 - 1

    def test_laws_parsed(self):
        cfg = config.parse(MINIMAL.replace("{kind: dirac, value: 1.0}", "{kind: discrete, values: [0.5, 1.0], weights: [0.5, 0.5]}"))
        assert cfg.network.m0 == laws.Discrete((0.5, 1.0), (0.5, 0.5))
