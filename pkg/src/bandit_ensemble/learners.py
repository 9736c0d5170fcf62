"""Incremental base classifiers and the advice-vector adapter.

All learners share one small contract: ``predict_confidence`` returns a
probability vector over ``num_classes``, ``update`` absorbs one labelled
sample, ``fit`` rebuilds from a batch, and ``retrain`` rebuilds from a
buffer of recent samples.
"""
from __future__ import annotations

from enum import Enum
from typing import Protocol, Sequence

import numpy as np
from scipy.special import expit


class NotFittedError(RuntimeError):
    pass


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


class AdviceMode(str, Enum):
    VOTING = "voting"
    CONFIDENCE = "confidence"


class Learner(Protocol):
    num_classes: int
    num_features: int

    def predict_confidence(self, features: np.ndarray) -> np.ndarray: ...

    def update(self, features: np.ndarray, label: int) -> None: ...

    def fit(self, samples: Sequence) -> None: ...

    def reset(self) -> None: ...

    def retrain(self, samples: Sequence) -> None: ...


def _stack(samples: Sequence) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([s.features for s in samples], dtype=float)
    y = np.array([s.label for s in samples], dtype=int)
    return X, y


class RandomFeatureLinearLearner:
    """Random vector functional link network trained by recursive least squares.

    The readout sees the raw features concatenated with ``hidden`` frozen
    sigmoid units. Output weights solve a ridge regression onto one-hot
    targets; the sequential update keeps the exact ridge solution, so any
    sequence of ``update`` calls matches the batch fit on the same data.

    ``generation`` selects which random input layer is drawn from ``seed``;
    each :meth:`retrain` advances it by one.
    """

    def __init__(
        self,
        num_features: int,
        num_classes: int,
        hidden: int = 64,
        ridge: float = 0.1,
        seed: int = 0,
        generation: int = 0,
        input_scale: float = 1.0,
    ):
        if num_features < 1 or num_classes < 2 or hidden < 0:
            raise ValueError("need num_features >= 1, num_classes >= 2, hidden >= 0")
        if ridge <= 0:
            raise ValueError("ridge must be positive")
        self.num_features = num_features
        self.num_classes = num_classes
        self.hidden = hidden
        self.ridge = float(ridge)
        self.seed = seed
        self.input_scale = float(input_scale)
        self.generation = generation
        self._draw_input_layer()
        self.output_weights: np.ndarray | None = None
        self.covariance: np.ndarray | None = None
        self._cache_key: bytes | None = None
        self._cache_phi: np.ndarray | None = None

    def _draw_input_layer(self) -> None:
        rng = np.random.default_rng([int(self.seed), int(self.generation)])
        s = self.input_scale
        self.input_weights = rng.uniform(-s, s, size=(self.hidden, self.num_features))
        self.input_biases = rng.uniform(-s, s, size=self.hidden)
        self._cache_key = None
        self._cache_phi = None

    @property
    def dim(self) -> int:
        return self.num_features + self.hidden

    def _features(self, X: np.ndarray) -> np.ndarray:
        H = expit(X @ self.input_weights.T + self.input_biases)
        return np.concatenate([X, H], axis=-1)

    def _phi(self, x: np.ndarray) -> np.ndarray:
        # One-entry cache: process() predicts and then updates on the same sample.
        if x.shape != (self.num_features,):
            raise ValueError(f"expected {self.num_features} features, got shape {x.shape}")
        key = x.tobytes()
        if key == self._cache_key:
            return self._cache_phi  # type: ignore[return-value]
        phi = self._features(x)
        self._cache_key = key
        self._cache_phi = phi
        return phi

    def _targets(self, y: np.ndarray) -> np.ndarray:
        if np.any(y < 0) or np.any(y >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        return np.eye(self.num_classes)[y]

    def fit(self, samples: Sequence) -> None:
        """Exact ridge fit on ``samples``, discarding any previous state."""
        if len(samples) == 0:
            raise ValueError("cannot fit on an empty batch")
        X, y = _stack(samples)
        self.fit_arrays(X, y)

    def fit_arrays(self, X: np.ndarray, y: np.ndarray) -> None:
        Phi = self._features(np.asarray(X, dtype=float))
        Y = self._targets(np.asarray(y, dtype=int))
        A = Phi.T @ Phi + self.ridge * np.eye(self.dim)
        P = np.linalg.inv(A)
        self.covariance = 0.5 * (P + P.T)
        self.output_weights = np.linalg.solve(A, Phi.T @ Y)

    def reset(self) -> None:
        """Back to the untrained generation-0 learner."""
        self.generation = 0
        self._draw_input_layer()
        self.output_weights = None
        self.covariance = None

    def _ensure_init(self) -> None:
        if self.output_weights is None:
            self.output_weights = np.zeros((self.dim, self.num_classes))
            self.covariance = np.eye(self.dim) / self.ridge

    def update(self, features: np.ndarray, label: int) -> None:
        if not 0 <= label < self.num_classes:
            raise ValueError(f"label {label} out of range [0, {self.num_classes})")
        self._ensure_init()
        phi = self._phi(np.asarray(features, dtype=float))
        P = self.covariance
        Pphi = P @ phi
        gain = Pphi / (1.0 + phi @ Pphi)
        err = -(phi @ self.output_weights)
        err[label] += 1.0
        self.output_weights += gain[:, None] * err
        P -= gain[:, None] * Pphi

    def retrain(self, samples: Sequence) -> None:
        if len(samples) == 0:
            raise ValueError("cannot retrain on an empty buffer")
        self.generation += 1
        self._draw_input_layer()
        self.fit(samples)

    def readout(self, features: np.ndarray) -> np.ndarray:
        if self.output_weights is None:
            raise NotFittedError("learner has not been trained")
        return self._phi(np.asarray(features, dtype=float)) @ self.output_weights

    def predict_confidence(self, features: np.ndarray) -> np.ndarray:
        return _softmax(self.readout(features))

    def predict(self, features: np.ndarray) -> int:
        return int(np.argmax(self.readout(features)))


class IncrementalGaussianNB:
    """Gaussian naive Bayes with per-class Welford accumulators."""

    def __init__(self, num_features: int, num_classes: int, var_floor: float = 1e-6):
        if num_features < 1 or num_classes < 2:
            raise ValueError("need num_features >= 1 and num_classes >= 2")
        self.num_features = num_features
        self.num_classes = num_classes
        self.var_floor = var_floor
        self._reset()

    def reset(self) -> None:
        self._reset()

    def _reset(self) -> None:
        self.counts = np.zeros(self.num_classes)
        self.means = np.zeros((self.num_classes, self.num_features))
        self.m2 = np.zeros((self.num_classes, self.num_features))

    @property
    def variances(self) -> np.ndarray:
        n = np.maximum(self.counts, 1.0)[:, None]
        return np.maximum(self.m2 / n, self.var_floor)

    def update(self, features: np.ndarray, label: int) -> None:
        if not 0 <= label < self.num_classes:
            raise ValueError(f"label {label} out of range [0, {self.num_classes})")
        x = np.asarray(features, dtype=float)
        if x.shape != (self.num_features,):
            raise ValueError(f"expected {self.num_features} features, got shape {x.shape}")
        self.counts[label] += 1
        delta = x - self.means[label]
        self.means[label] += delta / self.counts[label]
        self.m2[label] += delta * (x - self.means[label])

    def fit(self, samples: Sequence) -> None:
        if len(samples) == 0:
            raise ValueError("cannot fit on an empty batch")
        self._reset()
        for s in samples:
            self.update(s.features, s.label)

    def retrain(self, samples: Sequence) -> None:
        if len(samples) == 0:
            raise ValueError("cannot retrain on an empty buffer")
        self.fit(samples)

    def predict_confidence(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if x.shape != (self.num_features,):
            raise ValueError(f"expected {self.num_features} features, got shape {x.shape}")
        seen = self.counts > 0
        if not seen.any():
            return np.full(self.num_classes, 1.0 / self.num_classes)
        var = self.variances
        log_prior = np.log((self.counts + 1.0) / (self.counts.sum() + self.num_classes))
        log_lik = -0.5 * np.sum(np.log(2 * np.pi * var) + (x - self.means) ** 2 / var, axis=1)
        scores = np.where(seen, log_prior + log_lik, -np.inf)
        return _softmax(scores)

    def predict(self, features: np.ndarray) -> int:
        return int(np.argmax(self.predict_confidence(features)))


def advice_of(learner: Learner, features: np.ndarray, mode: AdviceMode | str) -> np.ndarray:
    """Advice row for one learner: its confidence vector, or a one-hot vote.

    Votes go to the lowest-index class among ties.
    """
    if AdviceMode(mode) is AdviceMode.CONFIDENCE:
        return learner.predict_confidence(features)
    # softmax is monotone, so the readout argmax is the confidence argmax
    predict = getattr(learner, "predict", None)
    k = predict(features) if predict is not None else int(np.argmax(learner.predict_confidence(features)))
    vote = np.zeros(learner.num_classes)
    vote[k] = 1.0
    return vote


def make_learner(kind: str, num_features: int, num_classes: int, seed: int, **params) -> Learner:
    if kind == "rvfl":
        return RandomFeatureLinearLearner(num_features, num_classes, seed=seed, **params)
    if kind == "nb":
        return IncrementalGaussianNB(num_features, num_classes, **params)
    raise ValueError(f"unknown learner kind {kind!r}")
