"""Configuration helpers for the experiment harness."""
from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import load_dotenv

from .models.schemas import ExperimentConfig

logger = logging.getLogger(__name__)

# 環境變數 -> 設定欄位
_ENV_FIELDS = {
    "BOE_MASTER_SEED": ("master_seed", int),
    "BOE_OUTPUT_DIR": ("output_dir", str),
    "BOE_WORKERS": ("workers", int),
}


def read_config_file(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    # manifest.json 也可直接當作設定檔
    if "config" in data and "code_version" in data:
        data = data["config"]
    if not isinstance(data, dict):
        raise ValueError(f"config file must hold a JSON object: {path}")
    return data


def _env_overrides() -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for name, (key, cast) in _ENV_FIELDS.items():
        raw = os.getenv(name)
        if raw:
            try:
                overrides[key] = cast(raw)
            except ValueError:
                raise ValueError(f"{name} must be {cast.__name__}, got {raw!r}") from None
    return overrides


def _merge(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """Resolve defaults < config file < environment (.env) < explicit overrides.

    `overrides` may nest, e.g. {"learner": {"mu": 0.1}}; None values are ignored.
    """
    load_dotenv()

    data: Dict[str, Any] = ExperimentConfig().model_dump(mode="json")
    if path is not None:
        data = _merge(data, read_config_file(path))
        logger.info(f"✅ 已載入設定檔 | path={path}")
    data = _merge(data, _env_overrides())
    if overrides:
        data = _merge(data, overrides)
    return ExperimentConfig.model_validate(data)
