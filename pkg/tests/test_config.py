from pathlib import Path

import pytest

from common.errors import ConfigError
from config import (
    RunConfig,
    apply_overrides,
    config_hash,
    get_settings,
    load_run_config,
    validate_run_config,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_defaults_without_a_file():
    assert load_run_config() == RunConfig()


@pytest.mark.parametrize("name", ["desk.yaml", "full.yaml"])
def test_shipped_configs_load(name):
    config = load_run_config(CONFIGS / name)
    assert config.extraction.patch_size % 16 == 0


def test_unknown_key_reports_its_path():
    with pytest.raises(ConfigError) as info:
        validate_run_config({"train": {"bogus": 1}})
    assert info.value.key_path == "train.bogus"


def test_out_of_range_value_reports_its_path():
    with pytest.raises(ConfigError) as info:
        validate_run_config({"train": {"alpha": 1.5}})
    assert info.value.key_path == "train.alpha"


def test_invalid_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("train: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_non_mapping_yaml(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(path)


def test_hash_is_stable_and_tracks_overrides():
    base = RunConfig()
    assert config_hash(base) == config_hash(RunConfig())
    changed = apply_overrides(base, {"train.alpha": 0.25})
    assert changed.train.alpha == 0.25
    assert config_hash(changed) != config_hash(base)


def test_none_overrides_are_skipped():
    base = RunConfig()
    assert apply_overrides(base, {"train.alpha": None, "seed": None}) == base


def test_override_into_a_missing_section():
    with pytest.raises(ConfigError) as info:
        apply_overrides(RunConfig(), {"nowhere.alpha": 0.1})
    assert info.value.key_path == "nowhere.alpha"


def test_settings_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("LUPISEG_RUNS_DIR", str(tmp_path))
    monkeypatch.setenv("LUPISEG_WORKERS", "3")
    monkeypatch.delenv("LUPISEG_DATABASE_URL", raising=False)
    settings = get_settings()
    assert settings.workers == 3
    assert settings.database_url.endswith("lupiseg.db")


@pytest.mark.parametrize("value", ["zero", "0"])
def test_bad_worker_count(monkeypatch, value):
    monkeypatch.setenv("LUPISEG_WORKERS", value)
    with pytest.raises(ConfigError):
        get_settings()
