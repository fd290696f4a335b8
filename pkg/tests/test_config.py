"""
Configuration loading tests
"""

from pathlib import Path

import pytest

from qkdlink.exceptions import ConfigError
from qkdlink.utils.config import ENV_ALARM_WEBHOOK, ExperimentConfig, parse_config_text, parse_endpoint


SAMPLE = """
# operating point
channel_loss_db = 9.6
frame_size = 2e5        # scientific notation for counts
compensation = off
code_dir = none
eps_pa = 1e-11
"""


class TestParsing:

    def test_values_coerced(self):
        config = ExperimentConfig.from_text(SAMPLE, env={})
        assert config.channel_loss_db == 9.6
        assert config.frame_size == 200_000
        assert config.compensation is False
        assert config.code_dir is None
        assert config.eps_pa == 1e-11

    def test_comments_and_blank_lines(self):
        assert parse_config_text("\n# only a comment\nseed = 4 # trailing\n") == {"seed": "4"}

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config_text("seed = 1\nframe_size 10\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("seed = 1\nseed = 2\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="frame_sise"):
            ExperimentConfig.from_text("frame_sise = 10\n", env={})

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="frame_size"):
            ExperimentConfig.from_text("frame_size = many\n", env={})

    def test_out_of_range_reported_as_config_error(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text("misalignment_qber = 1.5\n", env={})

    def test_overspent_budget_reported(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text("eps_total = 1e-12\n", env={})

    def test_bad_policy(self):
        with pytest.raises(ConfigError, match="discard_policy"):
            ExperimentConfig(discard_policy="keep")

    def test_missing_referenced_file(self, tmp_path):
        with pytest.raises(ConfigError, match="bootstrap_key_path"):
            ExperimentConfig(bootstrap_key_path=tmp_path / "absent.bin")

    def test_missing_config_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            ExperimentConfig.from_file(tmp_path / "absent.conf")

    def test_from_file(self, tmp_path):
        path = tmp_path / "link.conf"
        path.write_text("frames = 3\nout_dir = results\n")
        config = ExperimentConfig.from_file(path, env={})
        assert config.frames == 3
        assert config.out_dir == Path("results")


class TestEnvironment:

    def test_webhook_from_env(self):
        config = ExperimentConfig.from_text("", env={ENV_ALARM_WEBHOOK: "http://alarm.local/hook"})
        assert config.alarm_webhook_url == "http://alarm.local/hook"

    def test_env_overrides_file(self):
        text = "alarm_webhook_url = http://file.local/hook\n"
        config = ExperimentConfig.from_text(text, env={ENV_ALARM_WEBHOOK: "http://env.local/hook"})
        assert config.alarm_webhook_url == "http://env.local/hook"


class TestDigest:

    def test_local_keys_ignored(self):
        a = ExperimentConfig(alice_seed=3, out_dir=Path("a"), jobs=1)
        b = ExperimentConfig(alice_seed=99, out_dir=Path("b"), jobs=8)
        assert a.digest() == b.digest()

    def test_shared_keys_change_digest(self):
        assert ExperimentConfig(seed=1).digest() != ExperimentConfig(seed=2).digest()
        assert ExperimentConfig().digest() != ExperimentConfig(frame_size=100_000).digest()

    def test_canonical_text_loads_back(self):
        config = ExperimentConfig(frame_size=50_000, compensation=False)
        assert ExperimentConfig.from_text(config.canonical_text(), env={}) == config

    def test_replace(self):
        config = ExperimentConfig().replace(frames=1)
        assert config.frames == 1


class TestDerived:

    def test_system_params_follow_fields(self):
        params = ExperimentConfig(channel_loss_db=12.0, dark_count_hz=0.0).system_params()
        assert params.channel_loss_db == 12.0
        assert params.dark_count_hz == 0.0

    def test_pulse_count(self):
        config = ExperimentConfig(duration_s=0.5)
        assert config.n_pulses == round(0.5 * config.source_rate_hz)

    def test_endpoint(self):
        assert parse_endpoint("10.0.0.2:7700") == ("10.0.0.2", 7700)
        assert ExperimentConfig().host_port() == ("127.0.0.1", 7700)
        for bad in ("localhost", ":80", "host:0", "host:http"):
            with pytest.raises(ConfigError):
                parse_endpoint(bad)
