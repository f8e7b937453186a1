"""
LupiSeg Configuration

Environment settings (config.settings) and YAML run configs
(config.run_config).
"""
from .settings import Settings, get_settings
from .run_config import (
    RunConfig,
    SplitConfig,
    PathsConfig,
    load_run_config,
    validate_run_config,
    apply_overrides,
    config_hash,
    canonical_json,
    log_resolved,
    dump_run_config,
)

__all__ = [
    "Settings",
    "get_settings",
    "RunConfig",
    "SplitConfig",
    "PathsConfig",
    "load_run_config",
    "validate_run_config",
    "apply_overrides",
    "config_hash",
    "canonical_json",
    "log_resolved",
    "dump_run_config",
]
