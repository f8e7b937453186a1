"""
Artifact Service

Owns run directories and the files written into them. A run directory is

    <runs_dir>/<config-hash[:12]>-<UTC timestamp>/

and holds config.yaml, checkpoints/, histories, metrics and reports. JSON
artifacts are written with sorted keys so equal content gives equal bytes.
"""
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from config.run_config import RunConfig, config_hash, dump_run_config
from config.settings import get_settings
from training import TrainedModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ArtifactService:
    """Creates run directories and writes artifacts into them."""

    def create_run_dir(
        self,
        digest: str,
        runs_dir: Optional[PathLike] = None,
        now: Optional[datetime] = None,
    ) -> Path:
        root = Path(runs_dir) if runs_dir is not None else get_settings().runs_dir
        stamp = (now or datetime.now(timezone.utc)).strftime("%Y%m%dT%H%M%SZ")
        run_dir = root / f"{digest[:12]}-{stamp}"
        suffix = 1
        while run_dir.exists():
            suffix += 1
            run_dir = root / f"{digest[:12]}-{stamp}-{suffix}"
        run_dir.mkdir(parents=True)
        logger.info("Run directory created", extra={"run_dir": str(run_dir)})
        return run_dir

    def write_json(self, run_dir: PathLike, name: str, payload: Any) -> Path:
        path = Path(run_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    def write_config(self, run_dir: PathLike, config: RunConfig) -> Path:
        path = Path(run_dir) / "config.yaml"
        payload = {"config_hash": config_hash(config), **dump_run_config(config)}
        path.write_text(yaml.safe_dump(payload, sort_keys=True), encoding="utf-8")
        return path

    def checkpoint_path(self, run_dir: PathLike, label: str) -> Path:
        path = Path(run_dir) / "checkpoints" / f"{label}.ckpt"
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_history(self, run_dir: PathLike, trained: TrainedModel) -> Path:
        """Per-epoch history without wall times, so reruns give identical files."""
        history: Dict[str, Any] = {
            "model_label": trained.label,
            "train_config": trained.config.model_dump(mode="json"),
            "epochs": [record.model_dump(exclude={"wall_time"}) for record in trained.history],
        }
        return self.write_json(run_dir, f"history-{trained.label}.json", history)


# Global instance
artifact_service = ArtifactService()
