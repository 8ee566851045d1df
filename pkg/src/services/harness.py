"""Dyad simulation, (alpha, beta) sweeps and aggregation."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..models.schemas import Condition, ExperimentConfig, UtilityParams
from ..utils.seeding import dyad_rng
from . import agent, metrics, social
from .agent import QTable
from .env import AgentResult, EpisodeOutcome, dynamic_reset, dynamic_step, resolve_ballistic
from .metrics import FairnessTracker, SessionOutcome

logger = logging.getLogger(__name__)

CellKey = Tuple[float, float, int]


# ==================== 數據類定義 ====================

@dataclass
class EpisodeLog:
    """Column arrays, one entry per episode."""

    result_a: np.ndarray
    result_b: np.ndarray
    reward_a: np.ndarray
    reward_b: np.ndarray
    utility_a: np.ndarray
    utility_b: np.ndarray
    ticks: np.ndarray
    timed_out: np.ndarray

    @classmethod
    def empty(cls, episodes: int) -> "EpisodeLog":
        return cls(
            result_a=np.zeros(episodes, dtype=np.int8),
            result_b=np.zeros(episodes, dtype=np.int8),
            reward_a=np.zeros(episodes),
            reward_b=np.zeros(episodes),
            utility_a=np.zeros(episodes),
            utility_b=np.zeros(episodes),
            ticks=np.zeros(episodes, dtype=np.int64),
            timed_out=np.zeros(episodes, dtype=bool),
        )

    def __len__(self) -> int:
        return len(self.result_a)

    def store(self, episode: int, outcome: EpisodeOutcome, u_a: float, u_b: float) -> None:
        self.result_a[episode] = outcome.result_a
        self.result_b[episode] = outcome.result_b
        self.reward_a[episode] = outcome.reward_a
        self.reward_b[episode] = outcome.reward_b
        self.utility_a[episode] = u_a
        self.utility_b[episode] = u_b
        self.ticks[episode] = outcome.ticks
        self.timed_out[episode] = outcome.timed_out

    def outcome(self, episode: int) -> EpisodeOutcome:
        return EpisodeOutcome(
            result_a=AgentResult(int(self.result_a[episode])),
            result_b=AgentResult(int(self.result_b[episode])),
            reward_a=float(self.reward_a[episode]),
            reward_b=float(self.reward_b[episode]),
            ticks=int(self.ticks[episode]),
            timed_out=bool(self.timed_out[episode]),
        )

    def outcomes(self, start: int = 0) -> List[EpisodeOutcome]:
        return [self.outcome(i) for i in range(start, len(self))]

    def to_frame(self, fairness: np.ndarray) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "episode": np.arange(1, len(self) + 1),
                "result_a": [AgentResult(int(r)).name.lower() for r in self.result_a],
                "result_b": [AgentResult(int(r)).name.lower() for r in self.result_b],
                "reward_a": self.reward_a,
                "reward_b": self.reward_b,
                "utility_a": self.utility_a,
                "utility_b": self.utility_b,
                "ticks": self.ticks,
                "timed_out": self.timed_out.astype(int),
                "fairness": fairness,
            }
        )


@dataclass
class DyadResult:
    alpha: float
    beta: float
    dyad_index: int
    fairness: np.ndarray  # F^t, t = 1..T
    log: EpisodeLog
    q_a: QTable
    q_b: QTable

    def session_outcome(self, cfg: ExperimentConfig) -> SessionOutcome:
        window = cfg.effective_late_window
        return metrics.classify_session(
            self.log.outcomes(start=len(self.log) - window), window, cfg.thresholds
        )


@dataclass
class DyadSummary:
    """Reduced per-dyad output shipped back from workers."""

    alpha: float
    beta: float
    dyad_index: int
    sample_episodes: np.ndarray
    sample_fairness: np.ndarray
    sample_high_a: np.ndarray
    sample_high_b: np.ndarray
    sample_ties: np.ndarray
    sample_timeouts: np.ndarray
    sample_mean_ticks: np.ndarray
    final_fairness: float
    late_window_fairness: float
    session_outcome: SessionOutcome
    tie_fraction: float
    timeout_fraction: float
    early_mean_ticks: float
    late_mean_ticks: float
    log_frame: Optional[pd.DataFrame] = None
    q_frames: Optional[Tuple[pd.DataFrame, pd.DataFrame]] = None

    @property
    def key(self) -> CellKey:
        return (self.alpha, self.beta, self.dyad_index)


@dataclass
class SweepResult:
    config: ExperimentConfig
    records: pd.DataFrame
    dyads: pd.DataFrame
    episode_logs: Dict[CellKey, pd.DataFrame] = field(default_factory=dict)
    q_tables: Dict[CellKey, Tuple[pd.DataFrame, pd.DataFrame]] = field(default_factory=dict)

    def curves(self) -> pd.DataFrame:
        """Mean and std (across dyads) of cumulative fairness per sample point."""
        grouped = self.records.groupby(["alpha", "beta", "episode"], sort=True)["fairness"]
        curves = grouped.agg(fairness_mean="mean", fairness_std=lambda s: s.std(ddof=0))
        return curves.reset_index()

    def heatmap(self) -> pd.DataFrame:
        grouped = self.dyads.groupby(["alpha", "beta"], sort=True)
        heat = grouped.agg(
            final_fairness_mean=("final_fairness", "mean"),
            late_window_fairness_mean=("late_window_fairness", "mean"),
            final_fairness_std=("final_fairness", lambda s: s.std(ddof=0)),
            turn_taking_fraction=(
                "session_outcome", lambda s: (s == SessionOutcome.TURN_TAKING.value).mean()
            ),
            dominant_fraction=(
                "session_outcome",
                lambda s: s.isin(
                    [SessionOutcome.DOMINANT_A.value, SessionOutcome.DOMINANT_B.value]
                ).mean(),
            ),
            unconverged_fraction=(
                "session_outcome", lambda s: (s == SessionOutcome.UNCONVERGED.value).mean()
            ),
            tie_fraction=("tie_fraction", "mean"),
            timeout_fraction=("timeout_fraction", "mean"),
            early_mean_ticks=("early_mean_ticks", "mean"),
            late_mean_ticks=("late_mean_ticks", "mean"),
        )
        return heat.reset_index()


# ==================== 單一 dyad 模擬 ====================

def _initial_tables(
    cfg: ExperimentConfig, initial_tables: Optional[Tuple[QTable, QTable]]
) -> Tuple[QTable, QTable]:
    if cfg.condition == Condition.BALLISTIC:
        state_count = agent.ballistic_state_count()
    else:
        state_count = agent.dynamic_state_count(cfg.y_bins)
    if initial_tables is None:
        return QTable(state_count), QTable(state_count)
    q_a, q_b = (table.copy() for table in initial_tables)
    for table in (q_a, q_b):
        if table.state_count != state_count:
            raise ValueError(
                f"initial Q table has {table.state_count} states, expected {state_count}"
            )
    return q_a, q_b


def _ballistic_episodes(
    cfg: ExperimentConfig,
    utility_params: UtilityParams,
    q_a: QTable,
    q_b: QTable,
    rng: np.random.Generator,
) -> Iterator[Tuple[int, EpisodeOutcome, Tuple[float, float]]]:
    learner = cfg.learner
    terminal = not cfg.chain_episodes
    prev_a = prev_b = AgentResult.TIE
    refs = social.RewardReference()

    for episode in range(cfg.episodes):
        epsilon = agent.epsilon_at(learner, episode)
        s_a = agent.encode_ballistic(prev_a)
        s_b = agent.encode_ballistic(prev_b)
        act_a = agent.select_action(q_a, s_a, epsilon, rng)
        act_b = agent.select_action(q_b, s_b, epsilon, rng)

        outcome = resolve_ballistic(cfg.game, act_a, act_b)
        u_a, u_b = social.perceive(
            outcome, refs, utility_params, include_current=cfg.reference_includes_current
        )

        agent.q_update(q_a, s_a, act_a, u_a, agent.encode_ballistic(outcome.result_a), terminal, learner)
        agent.q_update(q_b, s_b, act_b, u_b, agent.encode_ballistic(outcome.result_b), terminal, learner)

        prev_a, prev_b = outcome.result_a, outcome.result_b
        yield episode, outcome, (u_a, u_b)


def _dynamic_episodes(
    cfg: ExperimentConfig,
    utility_params: UtilityParams,
    q_a: QTable,
    q_b: QTable,
    rng: np.random.Generator,
) -> Iterator[Tuple[int, EpisodeOutcome, Tuple[float, float]]]:
    learner = cfg.learner
    game = cfg.game
    terminal = not cfg.chain_episodes
    prev_a = prev_b = AgentResult.TIE
    refs = social.RewardReference()

    def encode(prev: AgentResult, y_self: float, y_other: float) -> int:
        return agent.encode_dynamic(prev, y_self, y_other, cfg.y_bins, cfg.y_min, cfg.y_max)

    start = dynamic_reset(game)

    for episode in range(cfg.episodes):
        epsilon = agent.epsilon_at(learner, episode)
        state = start
        s_a = encode(prev_a, state.pos_a.y, state.pos_b.y)
        s_b = encode(prev_b, state.pos_b.y, state.pos_a.y)

        outcome: Optional[EpisodeOutcome] = None
        while outcome is None:
            act_a = agent.select_action(q_a, s_a, epsilon, rng)
            act_b = agent.select_action(q_b, s_b, epsilon, rng)
            state, outcome = dynamic_step(game, state, act_a, act_b)
            if outcome is not None:
                break
            # 回合中每 tick 報酬為 0
            next_a = encode(prev_a, state.pos_a.y, state.pos_b.y)
            next_b = encode(prev_b, state.pos_b.y, state.pos_a.y)
            agent.q_update(q_a, s_a, act_a, 0.0, next_a, False, learner)
            agent.q_update(q_b, s_b, act_b, 0.0, next_b, False, learner)
            s_a, s_b = next_a, next_b

        u_a, u_b = social.perceive(
            outcome, refs, utility_params, include_current=cfg.reference_includes_current
        )
        # chain_episodes 時以下一回合的起始狀態做 bootstrap
        next_a = encode(outcome.result_a, start.pos_a.y, start.pos_b.y)
        next_b = encode(outcome.result_b, start.pos_b.y, start.pos_a.y)
        agent.q_update(q_a, s_a, act_a, u_a, next_a, terminal, learner)
        agent.q_update(q_b, s_b, act_b, u_b, next_b, terminal, learner)

        prev_a, prev_b = outcome.result_a, outcome.result_b
        yield episode, outcome, (u_a, u_b)




def run_dyad(
    cfg: ExperimentConfig,
    alpha: float,
    beta: float,
    dyad_index: int,
    initial_tables: Optional[Tuple[QTable, QTable]] = None,
) -> DyadResult:
    """Simulate one dyad for cfg.episodes episodes.

    The random stream depends only on (master_seed, alpha, beta, dyad_index), so
    any single dyad can be re-run in isolation. `initial_tables` pre-seeds both
    learners (copied, the caller's tables are left untouched).
    """
    utility_params = UtilityParams(alpha=alpha, beta=beta)
    rng = dyad_rng(cfg.master_seed, alpha, beta, dyad_index)
    q_a, q_b = _initial_tables(cfg, initial_tables)

    if cfg.condition == Condition.BALLISTIC:
        episodes = _ballistic_episodes(cfg, utility_params, q_a, q_b, rng)
    else:
        episodes = _dynamic_episodes(cfg, utility_params, q_a, q_b, rng)

    log = EpisodeLog.empty(cfg.episodes)
    fairness = np.zeros(cfg.episodes)
    tracker = FairnessTracker()
    for episode, outcome, (u_a, u_b) in episodes:
        metrics.record_episode(tracker, outcome)
        fairness[episode] = metrics.fairness(tracker)
        log.store(episode, outcome, u_a, u_b)

    logger.debug(
        f"dyad 完成 | alpha={alpha} | beta={beta} | dyad={dyad_index} | "
        f"fairness={fairness[-1]:.4f} | high_a={tracker.h_count_a} | high_b={tracker.h_count_b}"
    )
    return DyadResult(
        alpha=alpha,
        beta=beta,
        dyad_index=dyad_index,
        fairness=fairness,
        log=log,
        q_a=q_a,
        q_b=q_b,
    )


# ==================== 彙整 ====================

def sample_points(episodes: int, every: int) -> np.ndarray:
    """1-based episode numbers k, 2k, ... plus the final episode."""
    points = np.arange(every, episodes + 1, every)
    if points.size == 0 or points[-1] != episodes:
        points = np.append(points, episodes)
    return points


def summarize_dyad(cfg: ExperimentConfig, result: DyadResult) -> DyadSummary:
    log = result.log
    episodes = len(log)
    points = sample_points(episodes, cfg.sample_every)
    idx = points - 1

    high_a = np.cumsum(log.result_a == AgentResult.GOT_HIGH)
    high_b = np.cumsum(log.result_b == AgentResult.GOT_HIGH)
    ties = np.cumsum(log.result_a == AgentResult.TIE)
    timeouts = np.cumsum(log.timed_out)
    ticks_total = np.cumsum(log.ticks)

    # 每個取樣點之間的平均 tick 數
    prev_points = np.concatenate(([0], points[:-1]))
    prev_ticks = np.concatenate(([0], ticks_total[idx][:-1]))
    mean_ticks = (ticks_total[idx] - prev_ticks) / (points - prev_points)

    late = cfg.effective_late_window
    edge = max(1, episodes // 10)

    return DyadSummary(
        alpha=result.alpha,
        beta=result.beta,
        dyad_index=result.dyad_index,
        sample_episodes=points,
        sample_fairness=result.fairness[idx],
        sample_high_a=high_a[idx],
        sample_high_b=high_b[idx],
        sample_ties=ties[idx],
        sample_timeouts=timeouts[idx],
        sample_mean_ticks=mean_ticks,
        final_fairness=float(result.fairness[-1]),
        late_window_fairness=float(result.fairness[-late:].mean()),
        session_outcome=result.session_outcome(cfg),
        tie_fraction=float((log.result_a[-late:] == AgentResult.TIE).mean()),
        timeout_fraction=float(log.timed_out.mean()),
        early_mean_ticks=float(log.ticks[:edge].mean()),
        late_mean_ticks=float(log.ticks[-edge:].mean()),
        log_frame=log.to_frame(result.fairness) if cfg.write_dyad_logs else None,
        q_frames=(result.q_a.to_frame(), result.q_b.to_frame()) if cfg.dump_q_tables else None,
    )


def _simulate(cfg: ExperimentConfig, job: CellKey) -> DyadSummary:
    alpha, beta, dyad_index = job
    return summarize_dyad(cfg, run_dyad(cfg, alpha, beta, dyad_index))


def _collect(cfg: ExperimentConfig, summaries: List[DyadSummary]) -> SweepResult:
    records = pd.DataFrame(
        {
            "alpha": np.concatenate([np.full(len(s.sample_episodes), s.alpha) for s in summaries]),
            "beta": np.concatenate([np.full(len(s.sample_episodes), s.beta) for s in summaries]),
            "dyad": np.concatenate(
                [np.full(len(s.sample_episodes), s.dyad_index) for s in summaries]
            ),
            "episode": np.concatenate([s.sample_episodes for s in summaries]),
            "fairness": np.concatenate([s.sample_fairness for s in summaries]),
            "high_a": np.concatenate([s.sample_high_a for s in summaries]),
            "high_b": np.concatenate([s.sample_high_b for s in summaries]),
            "ties": np.concatenate([s.sample_ties for s in summaries]),
            "timeouts": np.concatenate([s.sample_timeouts for s in summaries]),
            "mean_episode_ticks": np.concatenate([s.sample_mean_ticks for s in summaries]),
        }
    )
    dyads = pd.DataFrame(
        {
            "alpha": [s.alpha for s in summaries],
            "beta": [s.beta for s in summaries],
            "dyad": [s.dyad_index for s in summaries],
            "final_fairness": [s.final_fairness for s in summaries],
            "late_window_fairness": [s.late_window_fairness for s in summaries],
            "session_outcome": [s.session_outcome.value for s in summaries],
            "tie_fraction": [s.tie_fraction for s in summaries],
            "timeout_fraction": [s.timeout_fraction for s in summaries],
            "early_mean_ticks": [s.early_mean_ticks for s in summaries],
            "late_mean_ticks": [s.late_mean_ticks for s in summaries],
        }
    )
    return SweepResult(
        config=cfg,
        records=records,
        dyads=dyads,
        episode_logs={s.key: s.log_frame for s in summaries if s.log_frame is not None},
        q_tables={s.key: s.q_frames for s in summaries if s.q_frames is not None},
    )


def run_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> SweepResult:
    """Run every (alpha, beta, dyad) combination and aggregate the results.

    Dyads are independent; with workers > 1 they run on a process pool. Results
    come back in submission order, so serial and parallel runs are identical.
    """
    cells = cfg.grid()
    if not cells:
        raise ValueError(
            f"empty (alpha, beta) grid | alpha_values={cfg.alpha_values} | "
            f"beta_values={cfg.beta_values} | loss_averse_only={cfg.loss_averse_only}"
        )
    workers = workers or cfg.workers
    jobs: List[CellKey] = [
        (alpha, beta, dyad_index) for alpha, beta in cells for dyad_index in range(cfg.dyads)
    ]
    logger.info(
        f"🚀 開始 sweep | condition={cfg.condition.value} | cells={len(cells)} | "
        f"dyads={cfg.dyads} | episodes={cfg.episodes} | workers={workers}"
    )

    simulate = partial(_simulate, cfg)
    summaries: List[DyadSummary] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for summary in pool.map(simulate, jobs, chunksize=max(1, cfg.dyads // workers)):
                _track_progress(cfg, summaries, summary)
    else:
        for job in jobs:
            _track_progress(cfg, summaries, simulate(job))

    logger.info(f"✅ sweep 完成 | cells={len(cells)} | dyads_total={len(summaries)}")
    return _collect(cfg, summaries)


def _track_progress(cfg: ExperimentConfig, summaries: List[DyadSummary], summary: DyadSummary) -> None:
    summaries.append(summary)
    if summary.dyad_index == cfg.dyads - 1:
        cell = [s.final_fairness for s in summaries[-cfg.dyads:]]
        logger.info(
            f"✅ 格點完成 | alpha={summary.alpha} | beta={summary.beta} | "
            f"final_fairness_mean={np.mean(cell):.4f}"
        )


def replay(manifest_path: Path, output_dir: Optional[Path] = None) -> Path:
    """Re-run the sweep recorded in a manifest and write its outputs."""
    from . import outputs

    cfg = outputs.load_manifest(manifest_path)
    target = Path(output_dir) if output_dir is not None else Path(cfg.output_dir)
    logger.info(f"🔄 依 manifest 重跑 | manifest={manifest_path} | out={target}")
    result = run_sweep(cfg)
    outputs.emit_outputs(result, target)
    return target
