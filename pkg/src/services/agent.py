"""Independent tabular Q-learning agents."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from ..models.schemas import LearnerParams
from ..utils.formatting import CSV_FLOAT_FORMAT
from .env import AgentResult, SpotChoice

logger = logging.getLogger(__name__)

N_ACTIONS = len(SpotChoice)
N_RESULTS = len(AgentResult)


# ==================== 狀態編碼 ====================

def ballistic_state_count() -> int:
    return N_RESULTS


def dynamic_state_count(bins: int) -> int:
    return N_RESULTS * bins * bins


def encode_ballistic(prev: AgentResult) -> int:
    """GotHigh -> 0, GotLow -> 1, Tie -> 2."""
    return int(prev)


def y_bin(y: float, bins: int, y_min: float, y_max: float) -> int:
    if bins < 1:
        raise ValueError(f"bins must be >= 1 (got {bins})")
    if y_min >= y_max:
        raise ValueError(f"y_min must be below y_max (got {y_min} >= {y_max})")
    clamped = min(max(y, y_min), y_max)
    index = int((clamped - y_min) / (y_max - y_min) * bins)
    return min(index, bins - 1)


def encode_dynamic(
    prev: AgentResult,
    y_self: float,
    y_other: float,
    bins: int,
    y_min: float,
    y_max: float,
) -> int:
    """index = prev * bins^2 + bin(y_self) * bins + bin(y_other)."""
    return (
        int(prev) * bins * bins
        + y_bin(y_self, bins, y_min, y_max) * bins
        + y_bin(y_other, bins, y_min, y_max)
    )


# ==================== Q table ====================

class QTable:
    """Dense state x action table, zero-initialised; the shape is fixed at construction."""

    def __init__(self, state_count: int):
        if state_count < 1:
            raise ValueError(f"state_count must be >= 1 (got {state_count})")
        self._values = np.zeros((state_count, N_ACTIONS), dtype=np.float64)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "QTable":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != N_ACTIONS:
            raise ValueError(f"Q array must have shape (states, {N_ACTIONS}), got {values.shape}")
        table = cls(values.shape[0])
        table._values[:] = values
        return table

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def state_count(self) -> int:
        return self._values.shape[0]

    def copy(self) -> "QTable":
        return QTable.from_array(self._values.copy())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "index": np.arange(self.state_count),
                "q_high": self._values[:, SpotChoice.HIGH],
                "q_low": self._values[:, SpotChoice.LOW],
            }
        )

    def dump(self, path: Path) -> None:
        """Write one row per state: index, q_high, q_low."""
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n", float_format=CSV_FLOAT_FORMAT)
        logger.debug(f"Q 表已輸出 | path={path} | states={self.state_count}")


# ==================== 策略與更新 ====================

def epsilon_at(params: LearnerParams, episode: int) -> float:
    """Linear decay from eps_start at episode 0 to 0 at eps_end_episode."""
    return params.eps_start * max(0.0, 1.0 - episode / params.eps_end_episode)


def select_action(q: QTable, s: int, epsilon: float, rng: np.random.Generator) -> SpotChoice:
    """Epsilon-greedy; exact Q ties are broken uniformly at random."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be within [0, 1] (got {epsilon})")
    if rng.random() < epsilon:
        return SpotChoice(int(rng.integers(N_ACTIONS)))
    q_high = q.values[s, SpotChoice.HIGH]
    q_low = q.values[s, SpotChoice.LOW]
    if q_high == q_low:
        return SpotChoice(int(rng.integers(N_ACTIONS)))
    return SpotChoice.HIGH if q_high > q_low else SpotChoice.LOW


def q_update(
    q: QTable,
    s: int,
    a: SpotChoice,
    r: float,
    s_next: Optional[int],
    terminal: bool,
    params: LearnerParams,
) -> None:
    """Q(s,a) += mu * (r + gamma * max Q(s',.) - Q(s,a)); no bootstrap when terminal."""
    if not np.isfinite(r):
        raise ValueError(f"reward must be finite (got {r})")
    if terminal or s_next is None:
        future = 0.0
    else:
        future = float(q.values[s_next].max())
    current = q.values[s, a]
    q.values[s, a] = current + params.mu * (r + params.gamma * future - current)
