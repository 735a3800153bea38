import json
import logging

import pytest

from models.errors import ConfigError, IoFailure
from models.utils.config import Config, config_from_dict, configure_logging, load_config


class TestConfig:
    def test_defaults(self):
        config = load_config()
        assert config.pipeline.w == 5
        assert config.pipeline.Q == 2000
        assert config.pipeline.stft.frame_ms == 20.0
        assert config.pipeline.svm.kernel.degree == 3
        assert config.em.num_components == 15
        assert config.keep == 10
        assert config.seed == 42

    def test_json_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"pipeline": {"Q": 500, "w": 3}, "em": {"num_components": 20}, "seed": 7}))
        config = load_config(str(path))
        assert config.pipeline.Q == 500
        assert config.pipeline.w == 3
        assert config.em.num_components == 20
        assert config.em.seed == 7

    def test_toml_file(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text('keep = 8\n[stft]\nfft_size = 2048\nwindow = "hamming"\n[svm]\nC = 10.0\n')
        config = load_config(str(path))
        assert config.keep == 8
        assert config.pipeline.stft.fft_size == 2048
        assert config.pipeline.stft.window_kind == "hamming"
        assert config.pipeline.svm.C == 10.0

    def test_unknown_key_named(self):
        with pytest.raises(ConfigError, match="pipeline.window_size"):
            config_from_dict({"pipeline": {"window_size": 5}})

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="plots"):
            config_from_dict({"plots": {}})

    def test_invalid_value(self):
        with pytest.raises(ConfigError):
            config_from_dict({"pipeline": {"median_len": 4}})

    def test_keep_above_components(self):
        with pytest.raises(ConfigError):
            config_from_dict({"keep": 20})

    def test_overrides(self):
        config = Config().with_overrides(Q=100, num_components=20, keep=12, seed=3, w=None)
        assert config.pipeline.Q == 100
        assert config.em.num_components == 20
        assert config.keep == 12
        assert config.em.seed == 3
        assert config.pipeline.w == 5

    def test_unknown_override(self):
        with pytest.raises(ConfigError):
            Config().with_overrides(bogus=1)

    def test_round_trip_through_dict(self):
        config = Config().with_overrides(Q=321, C=4.0)
        assert config_from_dict(config.to_dict()) == config

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoFailure):
            load_config(str(tmp_path / "none.json"))


class TestLogging:
    def test_env_level(self, monkeypatch):
        monkeypatch.setenv("DIRSEG_LOG", "debug")
        assert configure_logging() == logging.DEBUG

    def test_explicit_level(self):
        assert configure_logging("info") == logging.INFO

    def test_unknown_level_falls_back(self, monkeypatch):
        monkeypatch.delenv("DIRSEG_LOG", raising=False)
        assert configure_logging("chatty") == logging.WARNING
