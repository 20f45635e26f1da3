"""DQN components: replay, action selection, Bellman targets, training."""

import hashlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anorl import dqn, qmodel, rng as rng_mod
from anorl.approximator import DEFAULT_RATES, QuantumApproximator, TabularQ
from anorl.classical import Adam
from anorl.dqn import DqnConfig, ReplayBuffer, Transition
from anorl.errors import ConfigurationError, UsageError
from anorl.qmodel import Mode, QModelConfig


def make_transition(i, terminal=False, reward=1.0):
    return Transition(np.array([float(i)]), 0, reward, np.array([float(i + 1)]), terminal)


class TestReplayBuffer:
    def test_fifo_eviction(self):
        buf = ReplayBuffer(5)
        for i in range(8):
            buf.push(make_transition(i))
        kept = {int(t.obs[0]) for t in buf.items}
        assert kept == {3, 4, 5, 6, 7}

    @settings(max_examples=20, deadline=None)
    @given(capacity=st.integers(1, 30), extra=st.integers(0, 30))
    def test_fifo_property(self, capacity, extra):
        buf = ReplayBuffer(capacity)
        for i in range(capacity + extra):
            buf.push(make_transition(i))
        kept = sorted(int(t.obs[0]) for t in buf.items)
        assert kept == list(range(extra, extra + capacity))

    def test_sample_without_replacement(self):
        buf = ReplayBuffer(10)
        for i in range(10):
            buf.push(make_transition(i))
        batch = buf.sample(10, np.random.default_rng(0))
        assert sorted(int(t.obs[0]) for t in batch) == list(range(10))

    def test_zero_capacity_rejected(self):
        with pytest.raises(ConfigurationError):
            ReplayBuffer(0)


class TestSelectAction:
    def test_greedy(self):
        assert dqn.select_action(np.array([0.1, 0.9]), 0.0, np.random.default_rng(0)) == 1

    def test_tie_breaks_low(self):
        assert dqn.select_action(np.array([0.5, 0.5]), 0.0, np.random.default_rng(0)) == 0

    def test_uniform_when_fully_random(self):
        rng = np.random.default_rng(0)
        q = np.array([0.0, 10.0])
        draws = 10_000
        picks = sum(dqn.select_action(q, 1.0, rng) for _ in range(draws))
        # binomial(10000, 0.5): 3 sigma = 150
        assert abs(picks - draws / 2) < 3 * np.sqrt(draws * 0.25)

    def test_empty_logits(self):
        with pytest.raises(ConfigurationError):
            dqn.select_action(np.array([]), 0.0, np.random.default_rng(0))


class FixedNet:
    """Constant Q-function used as a stand-in target network."""

    def __init__(self, table):
        self.table = np.asarray(table, dtype=np.float64)
        self.n_actions = self.table.shape[-1]

    def q_values(self, obs):
        return self.table.copy()

    def q_values_batch(self, obs_batch):
        return np.tile(self.table, (len(np.atleast_2d(obs_batch)), 1))


class TestBellmanTarget:
    def test_terminal_is_reward(self):
        t = make_transition(0, terminal=True, reward=1.0)
        assert dqn.bellman_target(t, FixedNet([5.0, 9.0]), 0.9) == 1.0

    def test_gamma_zero(self):
        t = make_transition(0, reward=0.3)
        assert dqn.bellman_target(t, FixedNet([5.0, 9.0]), 0.0) == pytest.approx(0.3)

    def test_bootstrap_uses_max(self):
        t = make_transition(0, reward=1.0)
        got = dqn.bellman_target(t, FixedNet([5.0, 9.0]), 0.5)
        assert got == pytest.approx(1.0 + 0.5 * 9.0)

    def test_batch_matches_scalar(self):
        batch = [
            make_transition(0, reward=1.0),
            make_transition(1, terminal=True, reward=-1.0),
            make_transition(2, reward=0.5),
        ]
        net = FixedNet([0.2, -0.1])
        got = dqn.bellman_targets_batch(batch, net, 0.9)
        want = [dqn.bellman_target(t, net, 0.9) for t in batch]
        assert np.allclose(got, want, atol=1e-12)


class ChainEnv:
    """Deterministic 3-state chain: action 1 moves right, 0 moves left.

    Reaching state 2 pays +1 and terminates; everything else pays 0.
    """

    n_actions = 2
    n_states = 3

    def __init__(self):
        self.state = 0
        self.terminal = True

    def reset(self, rng):
        del rng
        self.state = 0
        self.terminal = False
        return np.array([float(self.state)])

    def step(self, action):
        if self.terminal:
            raise UsageError("episode finished")
        self.state = min(2, self.state + 1) if action == 1 else max(0, self.state - 1)
        reward = 1.0 if self.state == 2 else 0.0
        self.terminal = self.state == 2
        return np.array([float(self.state)]), reward, self.terminal


def chain_value_iteration(gamma=0.9):
    """Exact Q* for ChainEnv by value iteration, used as the oracle."""
    q = np.zeros((3, 2))
    for _ in range(200):
        new = np.zeros_like(q)
        for s in range(2):  # state 2 is terminal
            for a in range(2):
                nxt = min(2, s + 1) if a == 1 else max(0, s - 1)
                reward = 1.0 if nxt == 2 else 0.0
                bootstrap = 0.0 if nxt == 2 else np.max(q[nxt])
                new[s, a] = reward + gamma * bootstrap
        q = new
    return q


class TestChainMdp:
    def test_value_iteration_fixed_point(self):
        q = chain_value_iteration()
        # optimal: always move right; Q*(0, right) = 0.9, Q*(1, right) = 1
        assert q[1, 1] == pytest.approx(1.0)
        assert q[0, 1] == pytest.approx(0.9)
        assert np.argmax(q[0]) == 1 and np.argmax(q[1]) == 1

    def test_tabular_dqn_recovers_optimal_policy(self):
        config = DqnConfig(
            gamma=0.9, eps_decay=0.97, batch_size=8, capacity=500, episodes=120
        )
        net = TabularQ(3, 2)
        model_config = QModelConfig(2, 0, 1, Mode.ROTATION_ONLY, 2)
        dqn.run_dqn(config, "chain", model_config, seed=0, net=net, env=ChainEnv())
        oracle = chain_value_iteration()
        for s in range(2):
            assert np.argmax(net.table[s]) == np.argmax(oracle[s])
        assert np.allclose(net.table[:2], oracle[:2], atol=0.05)


def tiny_net(seed=0):
    config = QModelConfig(2, 1, 2, Mode.ANO_WITH_ROTATION, 2)
    return QuantumApproximator.create(
        config, "mountaincar", 2, np.random.default_rng(seed)
    )


class TestDqnUpdate:
    def test_perfect_fit_leaves_params(self):
        net = tiny_net()
        obs = np.array([-0.5, 0.0])
        q = net.q_values(obs)
        target = FixedNet(q)  # target equal to current prediction
        batch = [Transition(obs, 0, q[0], obs, True)]
        before = net.get_params()
        loss = dqn.dqn_update(batch, net, target, Adam(lr=DEFAULT_RATES), 0.9)
        assert loss == pytest.approx(0.0, abs=1e-20)
        for name, value in net.params.items():
            assert np.array_equal(value, before[name])

    def test_single_transition_loss_arithmetic(self):
        net = tiny_net()
        obs = np.array([-0.4, 0.01])
        transition = Transition(obs, 1, 0.7, obs, True)
        predicted = net.q_values(obs)[1]
        loss = dqn.dqn_update(
            [transition], net, net.clone(), Adam(lr=DEFAULT_RATES), 0.9
        )
        assert loss == pytest.approx((predicted - 0.7) ** 2, abs=1e-12)

    def test_repeated_updates_reduce_error(self):
        net = tiny_net(3)
        obs = np.array([-0.5, 0.0])
        transition = Transition(obs, 0, 1.0, obs, True)
        opt = Adam(lr=DEFAULT_RATES)
        target = net.clone()
        gaps = []
        for _ in range(50):
            dqn.dqn_update([transition], net, target, opt, 0.9)
            gaps.append(abs(net.q_values(obs)[0] - 1.0))
        # the gap shrinks monotonically until momentum overshoots near zero
        low_point = int(np.argmin(gaps))
        assert min(gaps) < 0.01
        assert all(
            b < a for a, b in zip(gaps[:low_point], gaps[1 : low_point + 1])
        )

    def test_empty_batch(self):
        net = tiny_net()
        with pytest.raises(ConfigurationError):
            dqn.dqn_update([], net, net.clone(), Adam(), 0.9)


def params_hash(params):
    digest = hashlib.sha256()
    for name in sorted(params):
        digest.update(np.ascontiguousarray(params[name]).tobytes())
    return digest.hexdigest()


class TestRunDqn:
    def test_zero_episodes(self):
        config = DqnConfig(episodes=0)
        model = QModelConfig(2, 1, 2, Mode.ANO_WITH_ROTATION, 2)
        rows = dqn.run_dqn(config, "mountaincar", model, seed=0, env=ChainEnv(),
                           net=TabularQ(3, 2))
        assert rows == []

    def test_determinism(self):
        config = DqnConfig(episodes=6, batch_size=4, capacity=100)
        model = QModelConfig(2, 1, 2, Mode.ANO_WITH_ROTATION, 2)

        def run():
            rows = dqn.run_dqn(config, "mountaincar", model, seed=11)
            return [(r.episode, r.reward, r.epsilon, r.mean_loss) for r in rows]

        assert run() == run()

    def test_epsilon_schedule_recorded(self):
        config = DqnConfig(episodes=5, eps_decay=0.9, batch_size=4)
        net = TabularQ(3, 2)
        rows = dqn.run_dqn(config, "chain", None, seed=0, net=net, env=ChainEnv())
        eps = [r.epsilon for r in rows]
        assert eps[0] == 1.0
        assert np.allclose(eps, [0.9**i for i in range(5)])

    def test_target_staleness_and_detachment(self):
        # the target copy must stay bitwise frozen between refreshes
        config = QModelConfig(2, 1, 2, Mode.ANO_WITH_ROTATION, 2)
        net = QuantumApproximator.create(
            config, "mountaincar", 2, np.random.default_rng(0)
        )
        target = net.clone()
        opt = Adam(lr=DEFAULT_RATES)
        obs = np.array([-0.5, 0.0])
        frozen = params_hash(target.params)
        for i in range(10):
            batch = [Transition(obs, i % 2, 1.0, obs, True)]
            dqn.dqn_update(batch, net, target, opt, 0.9)
            assert params_hash(target.params) == frozen
        assert params_hash(net.params) != frozen


class TestCountSuccesses:
    def test_mountaincar_threshold(self):
        rows = [
            dqn.EpisodeRow(0, -200.0, 1.0, 0.0),
            dqn.EpisodeRow(1, -150.0, 1.0, 0.0),
            dqn.EpisodeRow(2, -199.0, 1.0, 0.0),
        ]
        assert dqn.count_successes("mountaincar", rows) == 2

    def test_grid_positive_reward(self):
        rows = [dqn.EpisodeRow(0, 0.0, 1.0, 0.0), dqn.EpisodeRow(1, 0.8, 1.0, 0.0)]
        assert dqn.count_successes("grid", rows) == 1
