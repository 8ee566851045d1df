"""測試 arena：ballistic 支付矩陣與 dynamic 移動判定."""
import itertools
import math

import pytest
from pydantic import ValidationError

from src.models.schemas import GameConfig
from src.services.env import (
    AgentResult,
    EpisodeFinishedError,
    SpotChoice,
    Vec2,
    dynamic_reset,
    dynamic_step,
    resolve_ballistic,
)

H, L = SpotChoice.HIGH, SpotChoice.LOW
CFG = GameConfig()


def run_fixed(cfg, choices_a, choices_b):
    """Step until an outcome appears; choices are cycled per tick."""
    state = dynamic_reset(cfg)
    for tick in range(cfg.max_ticks):
        state, outcome = dynamic_step(
            cfg, state, choices_a[tick % len(choices_a)], choices_b[tick % len(choices_b)]
        )
        if outcome is not None:
            return state, outcome
    raise AssertionError("no outcome within max_ticks")


# ============ ballistic ============

def test_ballistic_same_spot_ties_with_nothing():
    for choice in (H, L):
        outcome = resolve_ballistic(CFG, choice, choice)
        assert outcome.result_a == outcome.result_b == AgentResult.TIE
        assert (outcome.reward_a, outcome.reward_b) == (0.0, 0.0)
        assert outcome.ticks == 0 and not outcome.timed_out


def test_ballistic_split_pays_high_and_low():
    outcome = resolve_ballistic(CFG, H, L)
    assert (outcome.result_a, outcome.result_b) == (AgentResult.GOT_HIGH, AgentResult.GOT_LOW)
    assert (outcome.reward_a, outcome.reward_b) == (4.0, 2.0)


def test_ballistic_is_antisymmetric():
    for x, y in itertools.product((H, L), repeat=2):
        assert resolve_ballistic(CFG, x, y) == resolve_ballistic(CFG, y, x).swapped()


# ============ config ============

def test_config_rejects_non_equidistant_spots():
    with pytest.raises(ValidationError):
        GameConfig(spot_high=(1.0, 5.0))


def test_config_rejects_mislabeled_rewards():
    with pytest.raises(ValidationError):
        GameConfig(reward_high=2.0, reward_low=2.0)


def test_vec2_rejects_non_finite():
    with pytest.raises(ValueError):
        Vec2(math.nan, 0.0)


# ============ dynamic ============

def test_reset_places_agents_on_starts():
    state = dynamic_reset(CFG)
    assert state.pos_a == Vec2(-10.0, 0.0)
    assert state.pos_b == Vec2(10.0, 0.0)
    assert state.tick == 0
    assert dynamic_reset(CFG) == state


def test_both_high_arrive_together_and_tie():
    _, outcome = run_fixed(CFG, [H], [H])
    assert outcome.result_a == outcome.result_b == AgentResult.TIE
    assert (outcome.reward_a, outcome.reward_b) == (0.0, 0.0)
    assert not outcome.timed_out


def test_split_choices_pay_the_reacher():
    # 直線距離 sqrt(125)，速度 1，抵達半徑 0.5
    expected_ticks = math.ceil((math.sqrt(125) - 0.5) / 1.0)
    state, outcome = run_fixed(CFG, [H], [L])
    assert expected_ticks == 11
    assert outcome.ticks == expected_ticks
    assert (outcome.result_a, outcome.result_b) == (AgentResult.GOT_HIGH, AgentResult.GOT_LOW)
    assert (outcome.reward_a, outcome.reward_b) == (4.0, 2.0)
    assert state.pos_b.distance_to(Vec2(0.0, 5.0)) > CFG.tie_radius


def test_switching_forever_times_out():
    _, outcome = run_fixed(CFG, [H, L], [H, L])
    assert outcome.timed_out
    assert outcome.ticks == CFG.max_ticks
    assert outcome.result_a == outcome.result_b == AgentResult.TIE
    assert (outcome.reward_a, outcome.reward_b) == (0.0, 0.0)


def test_lone_reacher_ties_when_other_is_inside_tie_area():
    # b 來回切換不會抵達任何點，停在中線附近
    cfg = GameConfig(tie_radius=8.0)
    _, outcome = run_fixed(cfg, [H], [L, H])
    assert outcome.ticks == 11
    assert outcome.result_a == outcome.result_b == AgentResult.TIE
    assert (outcome.reward_a, outcome.reward_b) == (0.0, 0.0)


def test_non_reaching_agent_gets_the_other_spot():
    state, outcome = run_fixed(CFG, [H], [L, H])
    assert state.pos_b.distance_to(Vec2(0.0, 5.0)) > CFG.tie_radius
    assert (outcome.result_a, outcome.result_b) == (AgentResult.GOT_HIGH, AgentResult.GOT_LOW)
    assert (outcome.reward_a, outcome.reward_b) == (4.0, 2.0)


def test_b_taking_high_pays_b():
    _, outcome = run_fixed(CFG, [L], [H])
    assert (outcome.result_a, outcome.result_b) == (AgentResult.GOT_LOW, AgentResult.GOT_HIGH)
    assert (outcome.reward_a, outcome.reward_b) == (2.0, 4.0)


def test_stepping_finished_episode_raises():
    state, _ = run_fixed(CFG, [H], [L])
    with pytest.raises(EpisodeFinishedError):
        dynamic_step(CFG, state, H, L)


def test_identical_choice_sequences_always_tie():
    cfg = GameConfig(max_ticks=12)
    for seq in itertools.product((H, L), repeat=12):
        state = dynamic_reset(cfg)
        outcome = None
        for choice in seq:
            state, outcome = dynamic_step(cfg, state, choice, choice)
            if outcome is not None:
                break
        assert outcome is not None
        assert outcome.result_a == AgentResult.TIE


def test_fixed_choice_distance_strictly_decreases():
    target = Vec2(0.0, 5.0)
    state = dynamic_reset(CFG)
    last = state.pos_a.distance_to(target)
    outcome = None
    while outcome is None:
        state, outcome = dynamic_step(CFG, state, H, L)
        dist = state.pos_a.distance_to(target)
        assert dist < last
        last = dist


def test_rewards_are_conserved_over_random_play():
    import random

    rng = random.Random(7)
    allowed = {(0.0, 0.0), (4.0, 2.0), (2.0, 4.0)}
    for _ in range(300):
        state = dynamic_reset(CFG)
        outcome = None
        steps = 0
        while outcome is None:
            state, outcome = dynamic_step(CFG, state, rng.choice((H, L)), rng.choice((H, L)))
            steps += 1
        assert steps <= CFG.max_ticks
        assert (outcome.reward_a, outcome.reward_b) in allowed
        assert (outcome.result_a == AgentResult.TIE) == (outcome.result_b == AgentResult.TIE)
