"""Pydantic models for experiment configuration."""
from __future__ import annotations

import math
from enum import Enum
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# 與 reward 幾何比較時的容許誤差
_EQUIDISTANCE_TOL = 1e-9


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# ============ 遊戲設定 ============
class Condition(str, Enum):
    BALLISTIC = "ballistic"
    DYNAMIC = "dynamic"


class GameConfig(_Frozen):
    start_a: Tuple[float, float] = Field((-10.0, 0.0), description="agent a 起始位置")
    start_b: Tuple[float, float] = Field((10.0, 0.0), description="agent b 起始位置")
    spot_high: Tuple[float, float] = Field((0.0, 5.0), description="高報酬點")
    spot_low: Tuple[float, float] = Field((0.0, -5.0), description="低報酬點")
    reward_high: float = Field(4.0, ge=0)
    reward_low: float = Field(2.0, ge=0)
    tie_radius: float = Field(2.0, gt=0, description="平手區半徑")
    speed: float = Field(1.0, gt=0, description="每 tick 移動距離")
    reach_radius: float = Field(0.5, gt=0, description="抵達判定半徑")
    max_ticks: int = Field(50, gt=0, description="dynamic 每回合上限")

    @field_validator("start_a", "start_b", "spot_high", "spot_low")
    @classmethod
    def _finite(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not all(math.isfinite(v) for v in value):
            raise ValueError(f"position must be finite: {value}")
        return value

    @model_validator(mode="after")
    def _check_geometry(self) -> "GameConfig":
        if self.reward_high <= self.reward_low:
            raise ValueError(
                f"reward_high must exceed reward_low (got {self.reward_high} <= {self.reward_low})"
            )
        if self.spot_high == self.spot_low:
            raise ValueError("spot_high and spot_low must differ")
        if self.start_a == self.start_b:
            raise ValueError("start_a and start_b must differ")
        for name, spot in (("spot_high", self.spot_high), ("spot_low", self.spot_low)):
            gap = abs(math.dist(self.start_a, spot) - math.dist(self.start_b, spot))
            if gap > _EQUIDISTANCE_TOL:
                raise ValueError(f"{name} is not equidistant to both starts (gap={gap:.6g})")
        return self

    def spot_value(self, high: bool) -> float:
        return self.reward_high if high else self.reward_low


# ============ 學習參數 ============
class LearnerParams(_Frozen):
    mu: float = Field(0.3, ge=0, le=1, description="learning rate")
    gamma: float = Field(0.9, ge=0, lt=1, description="discount factor")
    eps_start: float = Field(1.0, ge=0, le=1)
    eps_end_episode: int = Field(8500, gt=0, description="epsilon 降到 0 的回合")


class UtilityParams(_Frozen):
    alpha: float = Field(0.0, ge=0, description="disadvantageous inequity")
    beta: float = Field(0.0, ge=0, description="advantageous inequity")

    @property
    def loss_averse(self) -> bool:
        return self.alpha > self.beta

    @property
    def pure_loss_aversion(self) -> bool:
        return self.beta == 0


class ClassifyThresholds(_Frozen):
    dominance: float = Field(0.9, gt=0, le=1, description="單方取得高報酬的比例")
    fairness: float = Field(0.8, ge=0, le=1)
    non_tie: float = Field(0.5, ge=0, le=1, description="非平手回合最低比例")


# ============ 實驗設定 ============
def _default_grid() -> List[float]:
    return [round(0.1 * i, 10) for i in range(11)]


class ExperimentConfig(_Frozen):
    condition: Condition = Condition.BALLISTIC
    episodes: int = Field(10000, ge=1)
    dyads: int = Field(100, ge=1)
    learner: LearnerParams = Field(default_factory=LearnerParams)
    alpha_values: List[float] = Field(default_factory=_default_grid)
    beta_values: List[float] = Field(default_factory=_default_grid)
    loss_averse_only: bool = Field(True, description="只跑 alpha >= beta 的格點")
    game: GameConfig = Field(default_factory=GameConfig)
    master_seed: int = Field(0, ge=0, lt=2**64)
    chain_episodes: bool = False
    reference_includes_current: bool = True
    y_bins: int = Field(5, ge=1)
    y_min: float = -5.0
    y_max: float = 5.0
    sample_every: int = Field(1, ge=1)
    late_window: int = Field(500, ge=1)
    thresholds: ClassifyThresholds = Field(default_factory=ClassifyThresholds)
    write_dyad_logs: bool = False
    dump_q_tables: bool = False
    workers: int = Field(1, ge=1)
    output_dir: str = "results"

    @field_validator("alpha_values", "beta_values")
    @classmethod
    def _non_negative(cls, values: List[float]) -> List[float]:
        bad = [v for v in values if not math.isfinite(v) or v < 0]
        if bad:
            raise ValueError(f"grid values must be finite and non-negative: {bad}")
        return values

    @model_validator(mode="after")
    def _check_bins(self) -> "ExperimentConfig":
        if self.y_min >= self.y_max:
            raise ValueError(f"y_min must be below y_max (got {self.y_min} >= {self.y_max})")
        return self

    def grid(self) -> List[Tuple[float, float]]:
        """(alpha, beta) cells in sweep order."""
        cells = [
            (alpha, beta)
            for alpha in sorted(set(self.alpha_values))
            for beta in sorted(set(self.beta_values))
        ]
        if self.loss_averse_only:
            cells = [(alpha, beta) for alpha, beta in cells if alpha >= beta]
        return cells

    @property
    def effective_late_window(self) -> int:
        return min(self.late_window, self.episodes)
