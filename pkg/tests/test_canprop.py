import math
import random

import numpy as np
import pytest

from cbnn.canprop import CBNN, ConfigurationError, HorizonExhausted, ProtocolError, learning_rate
from cbnn.oracle import ExplicitWeights, NodeTreeWeights

from conftest import random_tree_parents


def play(learner, parents, losses):
    for t in range(1, learner.T + 1):
        a = learner.choose_action(parents.get(t))
        learner.feedback(losses[t - 1][a])


class TestSetup:
    def test_learning_rate(self):
        assert CBNN(4, 2).eta == pytest.approx(0.34657, abs=5e-6)
        assert CBNN(1024, 4, rho=2.0).eta == pytest.approx(2 * math.sqrt(math.log(4) * math.log(1024) / 4096))

    @pytest.mark.parametrize("kwargs", [dict(T=1, K=2), dict(T=4, K=1), dict(T=4, K=2, rho=0.0),
                                        dict(T=4, K=2, rho=-1.0), dict(T=4, K=3)])
    def test_bad_parameters(self, kwargs):
        with pytest.raises(ConfigurationError):
            CBNN(**kwargs)

    def test_padding(self):
        learner = CBNN(50, 3, seed=0, pad=True)
        assert learner.width == 4
        actions = []
        for t in range(1, 51):
            actions.append(learner.choose_action(None if t == 1 else t - 1))
            learner.feedback(0.5)
        assert set(actions) <= {0, 1, 2}


class TestProtocol:
    def test_order_enforced(self):
        learner = CBNN(4, 2, seed=0)
        with pytest.raises(ProtocolError):
            learner.feedback(0.0)
        learner.choose_action()
        with pytest.raises(ProtocolError):
            learner.choose_action()

    def test_similar_trial_required(self):
        learner = CBNN(4, 2, seed=0)
        with pytest.raises(ProtocolError):
            learner.choose_action(1)
        learner.choose_action()
        learner.feedback(0.0)
        with pytest.raises(ProtocolError):
            learner.choose_action()
        with pytest.raises(ProtocolError):
            learner.choose_action(2)

    def test_horizon(self):
        learner = CBNN(2, 2, seed=0)
        play(learner, {2: 1}, [[0, 0], [0, 0]])
        with pytest.raises(HorizonExhausted):
            learner.choose_action(1)

    def test_loss_range(self):
        learner = CBNN(4, 2, seed=0)
        learner.choose_action()
        with pytest.raises(ValueError):
            learner.feedback(1.5)


class TestUpdates:
    def test_second_trial_evidence(self):
        learner = CBNN(4, 2, seed=0)
        learner.choose_action()
        learner.feedback(0.0)
        a = learner.choose_action(1)
        assert learner.pi[2] == pytest.approx(0.5, rel=1e-15)
        learner.feedback(1.0)
        v = 2 + a
        assert learner.contractions[v].kappa1[2] == pytest.approx(2 / 3, rel=1e-5)
        assert learner.contractions[v ^ 1].kappa1[2] == pytest.approx(4 / 3, rel=1e-5)

    def test_zero_loss_is_noop(self):
        learner = CBNN(8, 4, seed=1)
        learner.choose_action()
        learner.feedback(0.0)
        for t in range(2, 6):
            learner.choose_action(t - 1)
            learner.feedback(0.0)
        assert all(j is None or set(j.kappa1) == {1.0} for j in learner.contractions)
        learner.choose_action(3)
        assert all(th == pytest.approx(0.25, rel=1e-12) for th in learner.theta.values())

    def test_distribution_uniform_at_start(self):
        learner = CBNN(8, 4, seed=0)
        learner.choose_action()
        assert learner.action_distribution() == pytest.approx(np.full(4, 0.25))

    def test_distribution_matches_literal(self, rng):
        T, K = 6, 4
        parents = random_tree_parents(T, rng)
        learner = CBNN(T, K, seed=3)
        lit = ExplicitWeights(T, K, parents)
        for t in range(1, T + 1):
            a = learner.choose_action(parents.get(t))
            assert learner.action_distribution() == pytest.approx(lit.action_distribution(t), rel=1e-9)
            loss = rng.random()
            lit.step(t, loss, learner.eta, zetas=learner.zetas)
            learner.feedback(loss)


class TestMirror:
    @pytest.mark.parametrize("K", [2, 4, 8])
    def test_small_literal(self, K):
        rng = random.Random(K)
        for _ in range(5):
            T = 7
            parents = random_tree_parents(T, rng)
            learner = CBNN(T, K, seed=rng.randrange(1000))
            lit = ExplicitWeights(T, K, parents)
            for t in range(1, T + 1):
                a = learner.choose_action(parents.get(t))
                loss = float(rng.random() < 0.5)
                trace = lit.step(t, loss, learner.eta, zetas=learner.zetas)
                assert trace["action"] == a
                for v, th in trace["theta"].items():
                    assert learner.theta[v] == pytest.approx(th, rel=1e-9)
                learner.feedback(loss)

    def test_message_passing_mid_size(self):
        rng = random.Random(11)
        T, K = 300, 8
        learner = CBNN(T, K, seed=5)
        orc = NodeTreeWeights(T, K)
        for t in range(1, T + 1):
            parent = None
            if t > 1:
                # mix of recent and uniform attachments gives deep and bushy parts
                parent = rng.randint(max(1, t - 3), t - 1) if rng.random() < 0.5 else rng.randint(1, t - 1)
                orc.add_node(t, parent)
            a = learner.choose_action(parent)
            for v, th in learner.theta.items():
                assert th == pytest.approx(orc.theta(v, t), rel=1e-9)
            loss = float(rng.random() < 0.3 + 0.1 * (a % 3))
            learner.feedback(loss)
            orc.absorb(t, learner.path, learner.pi, loss, learner.eta)

    def test_seeded_runs_repeat(self):
        parents = random_tree_parents(40, random.Random(2))
        losses = np.random.default_rng(0).random((40, 4))
        runs = []
        for _ in range(2):
            learner = CBNN(40, 4, seed=9)
            actions = []
            for t in range(1, 41):
                actions.append(learner.choose_action(parents.get(t)))
                learner.feedback(losses[t - 1][actions[-1]])
            runs.append(actions)
        assert runs[0] == runs[1]

    def test_learns_single_context_stream(self):
        T, K = 3000, 4
        learner = CBNN(T, K, seed=0)
        rng = np.random.default_rng(1)
        means = np.array([0.2, 0.7, 0.7, 0.7])
        picks = []
        for t in range(1, T + 1):
            a = learner.choose_action(None if t == 1 else 1)
            picks.append(a)
            learner.feedback(float(rng.random() < means[a]))
        assert np.mean(np.array(picks[-500:]) == 0) > 0.8

    def test_learning_rate_helper(self):
        assert learning_rate(16, 4, 1.0) == pytest.approx(math.sqrt(math.log(4) * math.log(16) / 64))
