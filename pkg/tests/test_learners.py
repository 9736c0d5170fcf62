import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import expit

from bandit_ensemble.learners import (
    AdviceMode,
    IncrementalGaussianNB,
    NotFittedError,
    RandomFeatureLinearLearner,
    advice_of,
    make_learner,
)
from bandit_ensemble.streams import StreamSample

from conftest import separable_samples


def ridge_oracle(learner, X, y):
    """Ridge readout as an augmented least-squares problem (no normal equations)."""
    H = expit(X @ learner.input_weights.T + learner.input_biases)
    Phi = np.hstack([X, H])
    Y = np.eye(learner.num_classes)[y]
    lam = np.sqrt(learner.ridge)
    A = np.vstack([Phi, lam * np.eye(Phi.shape[1])])
    B = np.vstack([Y, np.zeros((Phi.shape[1], Y.shape[1]))])
    W, *_ = scipy.linalg.lstsq(A, B)
    return W


class FixedConfidence:
    num_classes = 3
    num_features = 1

    def __init__(self, p):
        self.p = np.asarray(p, dtype=float)

    def predict_confidence(self, x):
        return self.p.copy()


class TestRandomFeatureLinear:
    def test_rls_matches_batch_ridge(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(1000, 6))
        y = rng.integers(3, size=1000)
        learner = RandomFeatureLinearLearner(6, 3, seed=4)
        for x, label in zip(X, y):
            learner.update(x, int(label))
        np.testing.assert_allclose(learner.output_weights, ridge_oracle(learner, X, y), atol=1e-6, rtol=0)

    def test_batch_fit_matches_oracle(self):
        samples = separable_samples(300, seed=2)
        learner = RandomFeatureLinearLearner(5, 2, seed=1)
        learner.fit(samples)
        X = np.array([s.features for s in samples])
        y = np.array([s.label for s in samples])
        np.testing.assert_allclose(learner.output_weights, ridge_oracle(learner, X, y), atol=1e-8)

    def test_fit_then_update_continues_the_same_solution(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(150, 4))
        y = rng.integers(2, size=150)
        a = RandomFeatureLinearLearner(4, 2, seed=3)
        a.fit([StreamSample(x, int(l)) for x, l in zip(X[:100], y[:100])])
        for x, l in zip(X[100:], y[100:]):
            a.update(x, int(l))
        np.testing.assert_allclose(a.output_weights, ridge_oracle(a, X, y), atol=1e-8)

    def test_covariance_symmetric_positive_definite(self):
        learner = RandomFeatureLinearLearner(5, 2, seed=0)
        learner.fit(separable_samples(100))
        for s in separable_samples(50, seed=9):
            learner.update(s.features, s.label)
        P = learner.covariance
        np.testing.assert_allclose(P, P.T, atol=1e-10)
        assert np.linalg.eigvalsh(0.5 * (P + P.T)).min() > 0

    def test_separable_generalisation(self):
        learner = RandomFeatureLinearLearner(5, 2, seed=0)
        learner.fit(separable_samples(500, seed=0))
        fresh = separable_samples(200, seed=1)
        acc = np.mean([learner.predict(s.features) == s.label for s in fresh])
        assert acc >= 0.95

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            RandomFeatureLinearLearner(3, 2).predict_confidence(np.zeros(3))

    def test_dimension_and_label_errors(self):
        learner = RandomFeatureLinearLearner(3, 2)
        learner.fit([StreamSample(np.zeros(3), 0), StreamSample(np.ones(3), 1)])
        with pytest.raises(ValueError):
            learner.predict_confidence(np.zeros(4))
        with pytest.raises(ValueError):
            learner.update(np.zeros(3), 2)

    def test_seed_diversity_and_reproducibility(self):
        a, b, c = (RandomFeatureLinearLearner(4, 2, seed=s) for s in (1, 2, 1))
        assert not np.array_equal(a.input_weights, b.input_weights)
        np.testing.assert_array_equal(a.input_weights, c.input_weights)

    def test_retrain_equals_fresh_learner_on_buffer(self):
        buffer = separable_samples(50, seed=5)
        a = RandomFeatureLinearLearner(5, 2, seed=11)
        a.fit(separable_samples(200, seed=6))
        a.retrain(buffer)
        fresh = RandomFeatureLinearLearner(5, 2, seed=11, generation=1)
        fresh.fit(buffer)
        probe = separable_samples(20, seed=7)
        for s in probe:
            np.testing.assert_array_equal(a.predict_confidence(s.features), fresh.predict_confidence(s.features))
        assert not np.array_equal(a.input_weights, RandomFeatureLinearLearner(5, 2, seed=11).input_weights)

    def test_retrain_single_sample(self):
        learner = RandomFeatureLinearLearner(3, 3, seed=0)
        x = np.array([0.2, -0.4, 0.9])
        learner.retrain([StreamSample(x, 2)])
        assert learner.predict(x) == 2
        with pytest.raises(ValueError):
            learner.retrain([])

    def test_retrain_recovers_after_label_flip(self):
        pre = separable_samples(200, seed=20)
        post = [StreamSample(s.features, 1 - s.label) for s in separable_samples(200, seed=21)]
        learner = RandomFeatureLinearLearner(5, 2, seed=3)
        learner.fit(pre)
        for s in post[:50]:
            learner.update(s.features, s.label)
        learner.retrain(post[:50])
        for s in post[50:]:
            learner.update(s.features, s.label)
        held_out = [StreamSample(s.features, 1 - s.label) for s in separable_samples(300, seed=22)]
        acc = np.mean([learner.predict(s.features) == s.label for s in held_out])
        assert acc >= 0.9

    def test_duplicate_update_raises_confidence(self):
        learner = RandomFeatureLinearLearner(3, 2, seed=0)
        learner.fit(separable_samples(40, d=3))
        x = np.array([0.5, 0.5, 0.5])
        k = learner.predict(x)
        before = learner.predict_confidence(x)[k]
        for _ in range(5):
            learner.update(x, k)
            after = learner.predict_confidence(x)[k]
            assert after >= before
            before = after

    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    def test_confidence_is_simplex_and_input_untouched(self, values):
        learner = RandomFeatureLinearLearner(4, 3, seed=2)
        rng = np.random.default_rng(0)
        learner.fit([StreamSample(rng.normal(size=4), i % 3) for i in range(30)])
        x = np.asarray(values)
        copy = x.copy()
        p = learner.predict_confidence(x)
        learner.update(x, 1)
        np.testing.assert_array_equal(x, copy)
        assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-9


class TestGaussianNB:
    def test_untrained_is_uniform(self):
        np.testing.assert_allclose(IncrementalGaussianNB(2, 3).predict_confidence(np.zeros(2)), 1 / 3)

    def test_single_sample(self):
        nb = IncrementalGaussianNB(2, 3)
        x = np.array([1.0, -2.0])
        nb.update(x, 2)
        assert nb.predict(x) == 2

    def test_welford_matches_numpy(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(400, 3))
        y = rng.integers(2, size=400)
        nb = IncrementalGaussianNB(3, 2, var_floor=1e-12)
        nb.fit([StreamSample(x, int(l)) for x, l in zip(X, y)])
        for c in range(2):
            np.testing.assert_allclose(nb.means[c], X[y == c].mean(axis=0), atol=1e-12)
            np.testing.assert_allclose(nb.variances[c], X[y == c].var(axis=0), atol=1e-12)
        assert np.all(nb.counts >= 0)

    def test_variance_floor(self):
        nb = IncrementalGaussianNB(2, 2, var_floor=1e-6)
        for _ in range(5):
            nb.update(np.array([1.0, 1.0]), 0)
        assert np.all(nb.variances >= 1e-6)
        p = nb.predict_confidence(np.array([1.0, 1.0]))
        assert np.isfinite(p).all() and abs(p.sum() - 1) < 1e-9

    def test_label_error(self):
        with pytest.raises(ValueError):
            IncrementalGaussianNB(2, 2).update(np.zeros(2), 5)


class TestAdvice:
    def test_voting_one_hot(self):
        np.testing.assert_array_equal(
            advice_of(FixedConfidence([0.2, 0.5, 0.3]), np.zeros(1), "voting"), [0, 1, 0]
        )

    def test_voting_tie_breaks_low(self):
        stub = FixedConfidence([0.5, 0.5, 0.0])
        np.testing.assert_array_equal(advice_of(stub, np.zeros(1), AdviceMode.VOTING), [1, 0, 0])

    def test_confidence_pass_through(self):
        learner = RandomFeatureLinearLearner(5, 2, seed=0)
        learner.fit(separable_samples(60))
        x = separable_samples(1, seed=3)[0].features
        np.testing.assert_array_equal(advice_of(learner, x, "confidence"), learner.predict_confidence(x))

    def test_voting_agrees_with_confidence_argmax(self):
        learner = RandomFeatureLinearLearner(5, 2, seed=0)
        learner.fit(separable_samples(60))
        for s in separable_samples(50, seed=4):
            vote = advice_of(learner, s.features, "voting")
            assert vote.sum() == 1 and vote[np.argmax(learner.predict_confidence(s.features))] == 1

    def test_make_learner(self):
        assert isinstance(make_learner("nb", 3, 2, seed=0), IncrementalGaussianNB)
        assert make_learner("rvfl", 3, 2, seed=4, hidden=8).hidden == 8
        with pytest.raises(ValueError):
            make_learner("tree", 3, 2, seed=0)
