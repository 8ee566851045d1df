"""Cumulative fairness and session-outcome classification."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

from ..models.schemas import ClassifyThresholds
from .env import AgentResult, EpisodeOutcome


class SessionOutcome(str, Enum):
    DOMINANT_A = "dominant_a"
    DOMINANT_B = "dominant_b"
    TURN_TAKING = "turn_taking"
    UNCONVERGED = "unconverged"


@dataclass
class FairnessTracker:
    h_count_a: int = 0
    h_count_b: int = 0
    episodes_seen: int = 0


def fairness_ratio(h_a: int, h_b: int) -> float:
    """min/max of the high-reward counts; 1 when nobody got the high reward."""
    high = max(h_a, h_b)
    if high == 0:
        return 1.0
    return min(h_a, h_b) / high


def record_episode(t: FairnessTracker, outcome: EpisodeOutcome) -> None:
    if outcome.result_a == AgentResult.GOT_HIGH:
        t.h_count_a += 1
    elif outcome.result_b == AgentResult.GOT_HIGH:
        t.h_count_b += 1
    t.episodes_seen += 1


def fairness(t: FairnessTracker) -> float:
    return fairness_ratio(t.h_count_a, t.h_count_b)


def replay_tracker(outcomes: Iterable[EpisodeOutcome]) -> FairnessTracker:
    """Rebuild a tracker from an episode log."""
    tracker = FairnessTracker()
    for outcome in outcomes:
        record_episode(tracker, outcome)
    return tracker


def classify_session(
    window_outcomes: Sequence[EpisodeOutcome],
    window: int,
    thresholds: Optional[ClassifyThresholds] = None,
) -> SessionOutcome:
    """Label the final `window` episodes as dominance, turn taking or unconverged."""
    if window <= 0 or window > len(window_outcomes):
        raise ValueError(
            f"window must be within [1, {len(window_outcomes)}] (got {window})"
        )
    thresholds = thresholds or ClassifyThresholds()
    tail = replay_tracker(window_outcomes[-window:])

    decided = tail.h_count_a + tail.h_count_b
    if decided > 0:
        if tail.h_count_a / decided >= thresholds.dominance:
            return SessionOutcome.DOMINANT_A
        if tail.h_count_b / decided >= thresholds.dominance:
            return SessionOutcome.DOMINANT_B

    non_tie_fraction = decided / window
    if fairness(tail) >= thresholds.fairness and non_tie_fraction >= thresholds.non_tie:
        return SessionOutcome.TURN_TAKING
    return SessionOutcome.UNCONVERGED
