"""測試 Q-learning：狀態編碼、epsilon-greedy 與更新規則."""
import itertools

import numpy as np
import pytest

from src.models.schemas import LearnerParams
from src.services.agent import (
    QTable,
    encode_ballistic,
    encode_dynamic,
    epsilon_at,
    q_update,
    select_action,
)
from src.services.env import AgentResult, SpotChoice

H, L = SpotChoice.HIGH, SpotChoice.LOW


# ============ 編碼 ============

def test_ballistic_encoding_is_fixed_bijection():
    assert encode_ballistic(AgentResult.GOT_HIGH) == 0
    assert encode_ballistic(AgentResult.GOT_LOW) == 1
    assert encode_ballistic(AgentResult.TIE) == 2
    assert len({encode_ballistic(r) for r in AgentResult}) == 3


@pytest.mark.parametrize(
    "prev, y_self, y_other, expected",
    [
        (AgentResult.TIE, 0.0, 0.0, 62),
        (AgentResult.GOT_HIGH, -5.0, 5.0, 4),
        (AgentResult.GOT_LOW, 7.3, 0.0, 47),
    ],
)
def test_dynamic_encoding_examples(prev, y_self, y_other, expected):
    assert encode_dynamic(prev, y_self, y_other, 5, -5.0, 5.0) == expected


def test_dynamic_encoding_is_bijection():
    ys = [-4.5, -2.5, 0.0, 2.5, 4.5]  # 每個 bin 一個代表值
    seen = {
        encode_dynamic(prev, y1, y2, 5, -5.0, 5.0)
        for prev, y1, y2 in itertools.product(AgentResult, ys, ys)
    }
    assert seen == set(range(75))


def test_dynamic_encoding_rejects_bad_bins():
    with pytest.raises(ValueError):
        encode_dynamic(AgentResult.TIE, 0.0, 0.0, 0, -5.0, 5.0)


# ============ epsilon ============

def test_epsilon_linear_decay():
    params = LearnerParams(eps_start=1.0, eps_end_episode=8500)
    assert epsilon_at(params, 0) == 1.0
    assert epsilon_at(params, 4250) == pytest.approx(0.5)
    assert epsilon_at(params, 8500) == 0.0
    assert epsilon_at(params, 9999) == 0.0


# ============ 動作選擇 ============

def test_full_exploration_is_uniform():
    rng = np.random.default_rng(1)
    q = QTable(3)
    q.values[0] = [10.0, -10.0]
    draws = [select_action(q, 0, 1.0, rng) for _ in range(10_000)]
    assert draws.count(H) / len(draws) == pytest.approx(0.5, abs=0.02)


def test_greedy_picks_argmax():
    rng = np.random.default_rng(2)
    q = QTable(3)
    q.values[1] = [1.0, 0.3]
    assert all(select_action(q, 1, 0.0, rng) == H for _ in range(200))


def test_greedy_ties_break_uniformly():
    rng = np.random.default_rng(3)
    q = QTable(3)
    draws = [select_action(q, 2, 0.0, rng) for _ in range(10_000)]
    assert draws.count(L) / len(draws) == pytest.approx(0.5, abs=0.02)


def test_argmax_invariant_under_constant_shift():
    q = QTable(1)
    rng = np.random.default_rng(4)
    for _ in range(200):
        base = rng.normal(size=2) * 5
        shift = rng.normal() * 50
        q.values[0] = base
        before = select_action(q, 0, 0.0, np.random.default_rng(9))
        q.values[0] = base + shift
        after = select_action(q, 0, 0.0, np.random.default_rng(9))
        assert before == after


def test_select_action_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        select_action(QTable(1), 0, 1.5, np.random.default_rng(0))


# ============ 更新規則 ============

def test_update_substitution():
    params = LearnerParams(mu=0.3, gamma=0.9)
    q = QTable(3)
    q_update(q, 0, H, 4.0, 1, False, params)
    assert q.values[0, H] == pytest.approx(1.2)


def test_update_with_bootstrap():
    params = LearnerParams(mu=0.5, gamma=0.9)
    q = QTable(3)
    q.values[0, H] = 2.0
    q.values[1] = [2.0, 1.0]
    q_update(q, 0, H, 0.0, 1, False, params)
    assert q.values[0, H] == pytest.approx(1.9)


def test_terminal_update_ignores_next_state():
    params = LearnerParams(mu=0.5, gamma=0.9)
    q = QTable(3)
    q.values[1] = [100.0, 100.0]
    q_update(q, 0, L, 2.0, 1, True, params)
    assert q.values[0, L] == pytest.approx(1.0)


def test_zero_learning_rate_leaves_table_unchanged():
    params = LearnerParams(mu=0.0, gamma=0.9)
    q = QTable(3)
    q.values[:] = [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
    before = q.values.copy()
    for r in (-4.0, 0.0, 4.0):
        q_update(q, 2, H, r, 0, False, params)
    np.testing.assert_array_equal(q.values, before)


def test_fixed_point_is_stable():
    params = LearnerParams(mu=0.3, gamma=0.5)
    q = QTable(1)
    # 自迴圈：Q = r + gamma * Q  =>  Q = r / (1 - gamma)
    q.values[0] = [4.0, 0.0]
    for _ in range(100):
        q_update(q, 0, H, 2.0, 0, False, params)
    assert q.values[0, H] == 4.0


def test_values_stay_bounded_under_random_updates():
    params = LearnerParams(mu=0.3, gamma=0.9)
    bound = 4.0 / (1 - 0.9)
    rng = np.random.default_rng(5)
    q = QTable(75)
    states = rng.integers(75, size=(100_000, 2))
    actions = rng.integers(2, size=100_000)
    rewards = rng.uniform(-4.0, 4.0, size=100_000)
    terminal = rng.random(100_000) < 0.1
    for (s, s_next), a, r, t in zip(states, actions, rewards, terminal):
        q_update(q, int(s), SpotChoice(int(a)), float(r), int(s_next), bool(t), params)
    assert np.all(np.isfinite(q.values))
    assert np.all(np.abs(q.values) <= bound + 1e-9)
    assert q.values.shape == (75, 2)


def test_identical_seed_gives_identical_table():
    params = LearnerParams(mu=0.3, gamma=0.9)

    def train(seed):
        rng = np.random.default_rng(seed)
        q = QTable(3)
        s = 2
        for _ in range(2000):
            a = select_action(q, s, 0.3, rng)
            r = 4.0 if a == H else 2.0
            s_next = int(rng.integers(3))
            q_update(q, s, a, r, s_next, False, params)
            s = s_next
        return q.values

    np.testing.assert_array_equal(train(11), train(11))


def test_dump_writes_one_row_per_state(tmp_path):
    q = QTable(3)
    q.values[2] = [1.5, -0.25]
    path = tmp_path / "q.csv"
    q.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,q_high,q_low"
    assert lines[3] == "2,1.5,-0.25"
    assert len(lines) == 4
