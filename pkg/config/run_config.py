"""
Run Configuration

A RunConfig is one YAML file with a section per stage. Every section
rejects unknown keys; the first invalid key is reported as a dotted path
(e.g. "train.alpha") through ConfigError.

Example (configs/desk.yaml):

    seed: 7
    synthetic:
      patient_count: 10
    extraction:
      patch_size: 64
      h_ppi: 8
      nh_ppi: 8
    train:
      epochs: 3
      max_steps: 200

The config hash is the SHA-256 of the canonical JSON of the resolved
config; run directories and ledger rows are keyed by it.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from common.errors import ConfigError
from evaluation.experiment import ExperimentMapConfig
from patches import ExtractionParams
from synthetic import SyntheticSceneSpec
from training import TrainConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class SplitConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    train_patient_count: int = Field(8, ge=1)
    fold_count: int = Field(4, ge=1)
    shuffle: bool = False


class PathsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    scenes: str = "data/scenes"
    archive: str = "data/archive"


class RunConfig(BaseModel):
    """Everything a command needs besides its flags."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = 0
    paths: PathsConfig = PathsConfig()
    synthetic: SyntheticSceneSpec = SyntheticSceneSpec()
    extraction: ExtractionParams = ExtractionParams(patch_size=64)
    split: SplitConfig = SplitConfig()
    train: TrainConfig = TrainConfig()
    experiment: ExperimentMapConfig = ExperimentMapConfig()


def _key_path(error: Mapping[str, Any]) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "<root>"


def validate_run_config(data: Mapping[str, Any]) -> RunConfig:
    """
    Raises:
        ConfigError: first validation failure, with its key path
    """
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(first.get("msg", "invalid value"), key_path=_key_path(first)) from exc


def load_run_config(path: Optional[PathLike] = None) -> RunConfig:
    """
    Parse a YAML RunConfig; no path means all defaults.

    Raises:
        FileNotFoundError: path does not exist
        ConfigError: invalid YAML or invalid values
    """
    if path is None:
        return RunConfig()
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", key_path=str(path)) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", key_path=str(path))
    return validate_run_config(data)


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """
    Return a copy with dotted-path overrides applied ("train.alpha": 0.4).
    None values are skipped so unset CLI flags leave the file alone.
    """
    data = config.model_dump(mode="json")
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ConfigError("unknown section", key_path=dotted)
            node = node[part]
        node[parts[-1]] = value
    return validate_run_config(data)


def canonical_json(config: RunConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def log_resolved(config: RunConfig, command: str) -> str:
    """Log the resolved config with its hash; returns the hash."""
    digest = config_hash(config)
    logger.info("Resolved config", extra={"command": command, "config_hash": digest,
                                          "config": config.model_dump(mode="json")})
    return digest


def dump_run_config(config: RunConfig) -> Dict[str, Any]:
    return config.model_dump(mode="json")
