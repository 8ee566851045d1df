"""Sweep output files: CSV tables, manifest and optional per-dyad artifacts.

Layout of an output directory:
    curves.csv      alpha, beta, episode, fairness_mean, fairness_std
    heatmap.csv     alpha, beta, final_fairness_mean, late_window_fairness_mean, ...
    summary.csv     one row per dyad
    manifest.json   resolved config + code version
    dyads/          per-dyad episode logs (write_dyad_logs)
    qtables/        final Q tables (dump_q_tables)

Everything is written to a staging directory first and moved into place only
once every file exists, so a failed run leaves no partial outputs behind.
"""
from __future__ import annotations

import json
import logging
import shutil
import tempfile
from pathlib import Path
from typing import List

import pandas as pd

from .. import __version__
from ..models.schemas import ExperimentConfig
from ..utils.formatting import CSV_FLOAT_FORMAT, cell_label
from .harness import SweepResult

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

# 目錄中由本模組管理的項目；重新輸出時整批替換
MANAGED_ENTRIES = ("curves.csv", "heatmap.csv", "summary.csv", MANIFEST_NAME, "dyads", "qtables")


class OutputWriteError(OSError):
    """Raised when an output file cannot be written; `path` names the offender."""

    def __init__(self, path: Path, reason: str):
        super().__init__(f"failed to write {path}: {reason}")
        self.path = path


# ==================== Manifest ====================

def manifest_payload(cfg: ExperimentConfig) -> dict:
    return {
        "code_version": __version__,
        "config": cfg.model_dump(mode="json"),
    }


def load_manifest(path: Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        logger.error(f"❌ manifest 不存在 | path={path}")
        raise
    except json.JSONDecodeError as exc:
        raise ValueError(f"manifest is not valid JSON: {path} ({exc})") from exc

    if "config" not in data:
        raise ValueError(f"manifest has no 'config' block: {path}")
    if data.get("code_version") != __version__:
        logger.warning(
            f"⚠️ manifest 版本不同 | manifest={data.get('code_version')} | current={__version__}"
        )
    return ExperimentConfig.model_validate(data["config"])


# ==================== 寫檔 ====================

def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", float_format=CSV_FLOAT_FORMAT)


def _stage(result: SweepResult, staging: Path) -> List[Path]:
    written = []
    staging.mkdir(parents=True, exist_ok=True)

    def write(frame: pd.DataFrame, relative: str) -> None:
        path = staging / relative
        _write_csv(frame, path)
        written.append(Path(relative))

    write(result.curves(), "curves.csv")
    write(result.heatmap(), "heatmap.csv")
    write(result.dyads, "summary.csv")

    for (alpha, beta, dyad), frame in sorted(result.episode_logs.items()):
        write(frame, f"dyads/{cell_label(alpha, beta)}_dyad{dyad:04d}.csv")
    for (alpha, beta, dyad), (q_a, q_b) in sorted(result.q_tables.items()):
        write(q_a, f"qtables/{cell_label(alpha, beta)}_dyad{dyad:04d}_a.csv")
        write(q_b, f"qtables/{cell_label(alpha, beta)}_dyad{dyad:04d}_b.csv")

    with open(staging / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest_payload(result.config), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    written.append(Path(MANIFEST_NAME))
    return written


def _retire(directory: Path, holding: Path, retired: List[str]) -> None:
    """Move managed entries of a previous run out of `directory`, recording each one."""
    for name in MANAGED_ENTRIES:
        if (directory / name).exists():
            shutil.move(str(directory / name), str(holding / name))
            retired.append(name)


def _restore(directory: Path, holding: Path, retired: List[str]) -> None:
    for name in MANAGED_ENTRIES:
        path = directory / name
        if path.is_dir():
            shutil.rmtree(path, ignore_errors=True)
        else:
            path.unlink(missing_ok=True)
    for name in retired:
        shutil.move(str(holding / name), str(directory / name))


def emit_outputs(result: SweepResult, directory: Path) -> List[Path]:
    """Write all outputs of a sweep into `directory`; returns the written paths.

    Outputs of an earlier run in the same directory are replaced as a whole, so
    the directory never mixes files from two configs. Unrelated files are kept.
    """
    directory = Path(directory)
    if result.records.empty or result.dyads.empty:
        raise ValueError("sweep result is empty; nothing to write")

    try:
        directory.parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=f".{directory.name}.", dir=directory.parent))
    except OSError as exc:
        logger.error(f"❌ 無法建立輸出目錄 | path={directory} | error={exc}")
        raise OutputWriteError(directory, str(exc)) from exc

    moved: List[Path] = []
    created_dir = not directory.exists()
    holding = staging / ".previous"
    retired: List[str] = []
    try:
        try:
            written = _stage(result, staging / "new")
        except OSError as exc:
            path = Path(exc.filename) if exc.filename else staging
            logger.error(f"❌ 寫入失敗 | path={path} | error={exc}")
            raise OutputWriteError(path, str(exc)) from exc

        try:
            directory.mkdir(parents=True, exist_ok=True)
            holding.mkdir()
            _retire(directory, holding, retired)
            for relative in written:
                target = directory / relative
                target.parent.mkdir(parents=True, exist_ok=True)
                shutil.move(str(staging / "new" / relative), str(target))
                moved.append(target)
        except OSError as exc:
            logger.error(f"❌ 移動輸出失敗 | path={directory} | error={exc}")
            if created_dir:
                shutil.rmtree(directory, ignore_errors=True)
            else:
                _restore(directory, holding, retired)
            raise OutputWriteError(directory, str(exc)) from exc
    finally:
        shutil.rmtree(staging, ignore_errors=True)

    if retired:
        logger.info(f"🔄 已替換先前的輸出 | path={directory} | entries={len(retired)}")
    logger.info(f"✅ 輸出完成 | path={directory} | files={len(moved)}")
    return moved
