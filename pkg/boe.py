"""
Battle of the Exes 實驗指令

    python boe.py run    --condition ballistic --alpha 0.5 --beta 0
    python boe.py sweep  --alpha-grid 0:1:0.1 --beta-grid 0:1:0.1
    python boe.py replay results/manifest.json --out results_replay
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from src.config import load_config
from src.services import harness, outputs
from src.utils.formatting import parse_grid

load_dotenv()

logger = logging.getLogger("boe")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file (manifest.json also works)")
    parser.add_argument("--condition", choices=["ballistic", "dynamic"])
    parser.add_argument("--episodes", type=int)
    parser.add_argument("--dyads", type=int)
    parser.add_argument("--mu", type=float, help="learning rate")
    parser.add_argument("--gamma", type=float, help="discount factor")
    parser.add_argument("--eps-end", type=int, help="episode where epsilon reaches 0")
    parser.add_argument("--seed", type=int, help="master seed (u64)")
    parser.add_argument("--y-bins", type=int)
    parser.add_argument("--max-ticks", type=int)
    parser.add_argument("--chain-episodes", action="store_true", default=None)
    parser.add_argument("--sample-every", type=int)
    parser.add_argument("--late-window", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--dyad-logs", action="store_true", default=None)
    parser.add_argument("--dump-q", action="store_true", default=None)
    parser.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boe", description="Battle of the Exes Q-learning experiments")
    parser.add_argument("--log-level", default=os.getenv("BOE_LOG_LEVEL", "INFO"))
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single (alpha, beta) cell")
    _add_common(run)
    run.add_argument("--alpha", type=float, help="default 0 unless --config sets it")
    run.add_argument("--beta", type=float, help="default 0 unless --config sets it")

    sweep = sub.add_parser("sweep", help="(alpha, beta) grid")
    _add_common(sweep)
    sweep.add_argument("--alpha-grid", type=parse_grid, help="start:stop:step")
    sweep.add_argument("--beta-grid", type=parse_grid, help="start:stop:step")
    sweep.add_argument(
        "--all-pairs", action="store_true", help="also run cells with alpha < beta"
    )

    replay = sub.add_parser("replay", help="re-run from an emitted manifest")
    replay.add_argument("manifest", type=Path)
    replay.add_argument("--out", type=Path)
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Map CLI flags onto (possibly nested) config keys; unset flags are None."""
    get = vars(args).get
    overrides: Dict[str, Any] = {
        "condition": get("condition"),
        "episodes": get("episodes"),
        "dyads": get("dyads"),
        "master_seed": get("seed"),
        "y_bins": get("y_bins"),
        "chain_episodes": get("chain_episodes"),
        "sample_every": get("sample_every"),
        "late_window": get("late_window"),
        "workers": get("workers"),
        "write_dyad_logs": get("dyad_logs"),
        "dump_q_tables": get("dump_q"),
        "output_dir": str(args.out) if get("out") else None,
        "learner": {"mu": get("mu"), "gamma": get("gamma"), "eps_end_episode": get("eps_end")},
        "game": {"max_ticks": get("max_ticks")},
    }
    if args.command == "run":
        # 未指定時預設 0；有設定檔則沿用檔案內的值
        fallback = None if get("config") else 0.0
        alpha: Optional[float] = get("alpha")
        beta: Optional[float] = get("beta")
        alpha = fallback if alpha is None else alpha
        beta = fallback if beta is None else beta
        overrides["alpha_values"] = [alpha] if alpha is not None else None
        overrides["beta_values"] = [beta] if beta is not None else None
        overrides["loss_averse_only"] = False
    elif args.command == "sweep":
        overrides["alpha_values"] = get("alpha_grid")
        overrides["beta_values"] = get("beta_grid")
        if get("all_pairs"):
            overrides["loss_averse_only"] = False
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        if args.command == "replay":
            target = harness.replay(args.manifest, args.out)
            logger.info(f"✅ 重跑完成 | out={target}")
            return 0

        cfg = load_config(args.config, overrides_from_args(args))
        if args.command == "run" and (len(cfg.alpha_values) != 1 or len(cfg.beta_values) != 1):
            raise ValueError("run takes exactly one alpha and one beta; use sweep for grids")
        result = harness.run_sweep(cfg)
        outputs.emit_outputs(result, Path(cfg.output_dir))
        logger.info(f"✅ 實驗完成 | out={cfg.output_dir}")
        return 0
    except KeyboardInterrupt:
        logger.info("⚠️ 收到停止信號，已中止")
        return 1
    except Exception as exc:
        logger.error(f"❌ 執行失敗: {exc}", exc_info=logging.getLogger().isEnabledFor(logging.DEBUG))
        return 1


if __name__ == "__main__":
    sys.exit(main())
