"""Battle of the Exes arena: ballistic resolution and dynamic movement."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from enum import IntEnum
from typing import Optional, Tuple

from ..models.schemas import GameConfig


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping an episode that already produced its outcome."""


# ==================== 數據類定義 ====================

@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"Vec2 components must be finite: ({self.x}, {self.y})")

    @classmethod
    def of(cls, pair: Tuple[float, float]) -> "Vec2":
        return cls(float(pair[0]), float(pair[1]))

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def move_toward(self, target: "Vec2", step: float) -> "Vec2":
        """Move at most `step` along the straight line to `target`."""
        dist = self.distance_to(target)
        if dist <= step:
            return target
        scale = step / dist
        return Vec2(self.x + (target.x - self.x) * scale, self.y + (target.y - self.y) * scale)


class SpotChoice(IntEnum):
    """Action space; the value doubles as the Q-table column."""

    HIGH = 0
    LOW = 1


class AgentResult(IntEnum):
    GOT_HIGH = 0
    GOT_LOW = 1
    TIE = 2


@dataclass(frozen=True)
class EpisodeOutcome:
    result_a: AgentResult
    result_b: AgentResult
    reward_a: float
    reward_b: float
    ticks: int = 0
    timed_out: bool = False

    @property
    def is_tie(self) -> bool:
        return self.result_a == AgentResult.TIE

    def swapped(self) -> "EpisodeOutcome":
        return EpisodeOutcome(
            result_a=self.result_b,
            result_b=self.result_a,
            reward_a=self.reward_b,
            reward_b=self.reward_a,
            ticks=self.ticks,
            timed_out=self.timed_out,
        )


@dataclass(frozen=True)
class DynamicState:
    pos_a: Vec2
    pos_b: Vec2
    tick: int = 0
    done: bool = False


# ==================== 結果建構 ====================

def _tie(ticks: int = 0, timed_out: bool = False) -> EpisodeOutcome:
    return EpisodeOutcome(AgentResult.TIE, AgentResult.TIE, 0.0, 0.0, ticks, timed_out)


def _a_wins(cfg: GameConfig, a_high: bool, ticks: int = 0) -> EpisodeOutcome:
    """Non-tie outcome where agent a holds the spot `a_high` and b the other one."""
    if a_high:
        return EpisodeOutcome(
            AgentResult.GOT_HIGH, AgentResult.GOT_LOW, cfg.reward_high, cfg.reward_low, ticks
        )
    return EpisodeOutcome(
        AgentResult.GOT_LOW, AgentResult.GOT_HIGH, cfg.reward_low, cfg.reward_high, ticks
    )


# ==================== Ballistic ====================

def resolve_ballistic(cfg: GameConfig, choice_a: SpotChoice, choice_b: SpotChoice) -> EpisodeOutcome:
    """Payoff-matrix readout: same spot ties with zero reward."""
    if choice_a == choice_b:
        return _tie()
    return _a_wins(cfg, choice_a == SpotChoice.HIGH)


# ==================== Dynamic ====================

def dynamic_reset(cfg: GameConfig) -> DynamicState:
    return DynamicState(pos_a=Vec2.of(cfg.start_a), pos_b=Vec2.of(cfg.start_b), tick=0)


@lru_cache(maxsize=16)
def _spot(cfg: GameConfig, choice: SpotChoice) -> Vec2:
    return Vec2.of(cfg.spot_high if choice == SpotChoice.HIGH else cfg.spot_low)


def _reached(cfg: GameConfig, pos: Vec2, choice: SpotChoice) -> Optional[SpotChoice]:
    # 先檢查目標點，再檢查另一點
    other = SpotChoice.LOW if choice == SpotChoice.HIGH else SpotChoice.HIGH
    for spot in (choice, other):
        if pos.distance_to(_spot(cfg, spot)) <= cfg.reach_radius:
            return spot
    return None


def dynamic_step(
    cfg: GameConfig,
    state: DynamicState,
    choice_a: SpotChoice,
    choice_b: SpotChoice,
) -> Tuple[DynamicState, Optional[EpisodeOutcome]]:
    """Advance both agents one tick and adjudicate the post-move positions.

    Movement is simultaneous. A lone reacher wins its spot unless the other agent
    stands inside the tie area of that spot; the other agent then receives the
    other spot's value. Reaching the tick limit without a reach is a 0/0 tie.
    """
    if state.done or state.tick >= cfg.max_ticks:
        raise EpisodeFinishedError(
            f"episode already finished | tick={state.tick} | max_ticks={cfg.max_ticks}"
        )

    pos_a = state.pos_a.move_toward(_spot(cfg, choice_a), cfg.speed)
    pos_b = state.pos_b.move_toward(_spot(cfg, choice_b), cfg.speed)
    tick = state.tick + 1

    reach_a = _reached(cfg, pos_a, choice_a)
    reach_b = _reached(cfg, pos_b, choice_b)

    outcome: Optional[EpisodeOutcome] = None
    if reach_a is not None and reach_b is not None:
        if reach_a == reach_b:
            outcome = _tie(tick)
        else:
            outcome = _a_wins(cfg, reach_a == SpotChoice.HIGH, tick)
    elif reach_a is not None:
        if pos_b.distance_to(_spot(cfg, reach_a)) <= cfg.tie_radius:
            outcome = _tie(tick)
        else:
            outcome = _a_wins(cfg, reach_a == SpotChoice.HIGH, tick)
    elif reach_b is not None:
        if pos_a.distance_to(_spot(cfg, reach_b)) <= cfg.tie_radius:
            outcome = _tie(tick)
        else:
            outcome = _a_wins(cfg, reach_b == SpotChoice.LOW, tick)
    elif tick >= cfg.max_ticks:
        outcome = _tie(tick, timed_out=True)

    next_state = DynamicState(pos_a=pos_a, pos_b=pos_b, tick=tick, done=outcome is not None)
    return next_state, outcome
