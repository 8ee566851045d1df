"""測試公平性指標與 session 收斂分類."""
import itertools

import pytest

from src.models.schemas import ClassifyThresholds
from src.services.env import AgentResult, EpisodeOutcome
from src.services.metrics import (
    FairnessTracker,
    SessionOutcome,
    classify_session,
    fairness,
    record_episode,
    replay_tracker,
)

A_HIGH = EpisodeOutcome(AgentResult.GOT_HIGH, AgentResult.GOT_LOW, 4.0, 2.0)
B_HIGH = EpisodeOutcome(AgentResult.GOT_LOW, AgentResult.GOT_HIGH, 2.0, 4.0)
TIE = EpisodeOutcome(AgentResult.TIE, AgentResult.TIE, 0.0, 0.0)


def recount(sequence):
    """Independent min/max recount over the h-sequence."""
    h_a = sum(1 for o in sequence if o is A_HIGH)
    h_b = sum(1 for o in sequence if o is B_HIGH)
    if h_a == 0 and h_b == 0:
        return 1.0
    return min(h_a, h_b) / max(h_a, h_b)


def test_record_counts_high_winner():
    t = FairnessTracker()
    record_episode(t, A_HIGH)
    assert (t.h_count_a, t.h_count_b, t.episodes_seen) == (1, 0, 1)
    record_episode(t, TIE)
    assert (t.h_count_a, t.h_count_b, t.episodes_seen) == (1, 0, 2)


def test_alternation_splits_evenly():
    t = replay_tracker([A_HIGH, B_HIGH] * 5)
    assert (t.h_count_a, t.h_count_b) == (5, 5)
    assert fairness(t) == 1.0


def test_fairness_examples():
    assert fairness(FairnessTracker(0, 0, 7)) == 1.0
    assert fairness(FairnessTracker(5, 5, 10)) == 1.0
    assert fairness(FairnessTracker(3, 9, 12)) == pytest.approx(1 / 3)


def test_fairness_matches_recount_for_all_length_ten_sequences():
    for sequence in itertools.product((A_HIGH, B_HIGH, TIE), repeat=10):
        t = replay_tracker(sequence)
        value = fairness(t)
        assert value == recount(sequence)
        assert 0.0 <= value <= 1.0
        assert t.h_count_a + t.h_count_b <= t.episodes_seen
        assert (value == 1.0) == (t.h_count_a == t.h_count_b)
        mirrored = replay_tracker(o.swapped() for o in sequence)
        assert fairness(mirrored) == value


def test_replay_reproduces_incremental_tracker():
    log = [A_HIGH, TIE, B_HIGH, A_HIGH, A_HIGH, TIE]
    live = FairnessTracker()
    for outcome in log:
        record_episode(live, outcome)
    assert replay_tracker(log) == live


def test_classify_dominance():
    assert classify_session([A_HIGH] * 100, 100) == SessionOutcome.DOMINANT_A
    assert classify_session([B_HIGH] * 100, 50) == SessionOutcome.DOMINANT_B


def test_classify_turn_taking():
    assert classify_session([A_HIGH, B_HIGH] * 50, 100) == SessionOutcome.TURN_TAKING


def test_classify_all_ties_unconverged():
    assert classify_session([TIE] * 100, 100) == SessionOutcome.UNCONVERGED


def test_classify_uses_only_the_final_window():
    log = [A_HIGH] * 2000 + [A_HIGH, B_HIGH] * 100
    assert classify_session(log, 200) == SessionOutcome.TURN_TAKING
    assert classify_session(log, 2200) == SessionOutcome.DOMINANT_A


def test_classify_thresholds_are_configurable():
    log = [A_HIGH, A_HIGH, B_HIGH] * 40
    assert classify_session(log, 120) == SessionOutcome.UNCONVERGED
    loose = ClassifyThresholds(fairness=0.5)
    assert classify_session(log, 120, loose) == SessionOutcome.TURN_TAKING


@pytest.mark.parametrize("window", [0, 11])
def test_classify_rejects_bad_window(window):
    with pytest.raises(ValueError):
        classify_session([TIE] * 10, window)
