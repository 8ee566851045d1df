"""Inequity / loss-aversion utility over two-episode reward references."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Tuple

from ..models.schemas import UtilityParams
from .env import EpisodeOutcome

REFERENCE_WINDOW = 2


@dataclass
class RewardReference:
    """Per-agent buffers of the most recent raw rewards; the reference is their sum."""

    window: int = REFERENCE_WINDOW
    history_a: Deque[float] = field(init=False)
    history_b: Deque[float] = field(init=False)

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ValueError(f"window must be >= 1 (got {self.window})")
        self.history_a = deque(maxlen=self.window)
        self.history_b = deque(maxlen=self.window)

    @property
    def ref_a(self) -> float:
        return float(sum(self.history_a))

    @property
    def ref_b(self) -> float:
        return float(sum(self.history_b))

    def reset(self) -> None:
        self.history_a.clear()
        self.history_b.clear()


def utility(r_i: float, ref_i: float, ref_j: float, p: UtilityParams) -> float:
    """r_i - alpha * max(0, ref_j - ref_i) - beta * max(0, ref_i - ref_j)."""
    return r_i - p.alpha * max(0.0, ref_j - ref_i) - p.beta * max(0.0, ref_i - ref_j)


def update_references(refs: RewardReference, r_a: float, r_b: float) -> None:
    refs.history_a.append(r_a)
    refs.history_b.append(r_b)


def perceive(
    outcome: EpisodeOutcome,
    refs: RewardReference,
    p: UtilityParams,
    include_current: bool = True,
) -> Tuple[float, float]:
    """Turn the episode's raw rewards into the utilities the learners receive.

    With `include_current` the references are updated before evaluation, so the
    current reward is one of the summed ones; otherwise they are evaluated on the
    preceding episodes and updated afterwards.
    """
    if include_current:
        update_references(refs, outcome.reward_a, outcome.reward_b)
    ref_a, ref_b = refs.ref_a, refs.ref_b
    u_a = utility(outcome.reward_a, ref_a, ref_b, p)
    u_b = utility(outcome.reward_b, ref_b, ref_a, p)
    if not include_current:
        update_references(refs, outcome.reward_a, outcome.reward_b)
    return u_a, u_b
