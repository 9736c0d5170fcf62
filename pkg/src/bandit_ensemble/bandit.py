"""Exponential-weights bandit with expert advice and periodic weight restarts.

Arms are class indices ``0..K-1`` and experts are base classifiers. Each
round the experts' advice rows are mixed by their normalised weights, an
arm is chosen, and the importance-weighted reward of the chosen arm is
credited back to every expert in proportion to the advice it gave.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Weights are divided by their maximum once it exceeds this value.
WEIGHT_CAP = 1e100
SIMPLEX_TOL = 1e-9


class Principle(str, Enum):
    """How the prediction is read off the action distribution."""

    RANDOM_SAMPLING = "random_sampling"
    MAXIMUM_INDEX = "maximum_index"


def gamma_for(num_arms: int, num_experts: int, restart_period: int) -> float:
    """Exploration rate ``min(1, sqrt(K ln N / ((e - 1) * restart_period)))``."""
    if num_arms < 2:
        raise ValueError(f"num_arms must be >= 2, got {num_arms}")
    if num_experts < 1:
        raise ValueError(f"num_experts must be >= 1, got {num_experts}")
    if restart_period < 1:
        raise ValueError(f"restart_period must be >= 1, got {restart_period}")
    raw = math.sqrt(num_arms * math.log(num_experts) / ((math.e - 1.0) * restart_period))
    return min(1.0, raw)


def check_advice(advice: np.ndarray, num_experts: int, num_arms: int) -> np.ndarray:
    advice = np.asarray(advice, dtype=float)
    if advice.shape != (num_experts, num_arms):
        raise ValueError(
            f"advice must have shape ({num_experts}, {num_arms}), got {advice.shape}"
        )
    if np.any(advice < 0.0) or np.any(advice > 1.0):
        raise ValueError("advice entries must lie in [0, 1]")
    if np.any(np.abs(advice.sum(axis=1) - 1.0) > SIMPLEX_TOL):
        raise ValueError("each advice row must sum to 1")
    return advice


@dataclass
class EnsembleState:
    """Expert weights plus the restart bookkeeping.

    ``restart_counter`` counts update rounds since the last restart; once it
    reaches ``restart_period`` all weights go back to 1.
    """

    num_arms: int
    num_experts: int
    restart_period: int
    gamma: float | None = None
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]
    restart_counter: int = 0
    restarts: int = 0

    def __post_init__(self) -> None:
        if self.num_arms < 2:
            raise ValueError(f"num_arms must be >= 2, got {self.num_arms}")
        if self.num_experts < 1:
            raise ValueError(f"num_experts must be >= 1, got {self.num_experts}")
        if self.restart_period < 1:
            raise ValueError(f"restart_period must be >= 1, got {self.restart_period}")
        if self.gamma is None:
            self.gamma = gamma_for(self.num_arms, self.num_experts, self.restart_period)
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.weights is None:
            self.weights = np.ones(self.num_experts)
        else:
            self.weights = np.array(self.weights, dtype=float)
            if self.weights.shape != (self.num_experts,):
                raise ValueError("weights must have one entry per expert")
            if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
                raise ValueError("weights must be finite and strictly positive")
        if not 0 <= self.restart_counter <= self.restart_period:
            raise ValueError("restart_counter must lie in [0, restart_period]")

    def distribution(self, advice: np.ndarray) -> np.ndarray:
        """Mix the advice rows by normalised weight and add uniform exploration."""
        advice = check_advice(advice, self.num_experts, self.num_arms)
        w = self.weights
        if not np.all(np.isfinite(w)):
            raise ValueError("non-finite expert weight")
        exploit = (w / w.sum()) @ advice
        return (1.0 - self.gamma) * exploit + self.gamma / self.num_arms

    def update(self, expert_estimated: np.ndarray) -> bool:
        """Apply the exponential update and the restart rule.

        Returns True when this call restarted the weights.
        """
        r_hat = np.asarray(expert_estimated, dtype=float)
        if r_hat.shape != (self.num_experts,):
            raise ValueError("expert_estimated must have one entry per expert")
        if not np.all(np.isfinite(r_hat)) or np.any(r_hat < 0):
            raise ValueError("expert_estimated must be finite and non-negative")
        w = self.weights * np.exp(self.gamma * r_hat / self.num_arms)
        top = w.max()
        if top > WEIGHT_CAP or not np.isfinite(top):
            if not np.isfinite(top):
                # Recover in log space when the product itself overflowed.
                logw = np.log(self.weights) + self.gamma * r_hat / self.num_arms
                w = np.exp(logw - logw.max())
            else:
                w = w / top
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise OverflowError("expert weights could not be rescaled to finite values")
        self.weights = w
        self.restart_counter += 1
        if self.restart_counter >= self.restart_period:
            self.restart()
            return True
        return False

    def restart(self) -> None:
        self.weights = np.ones(self.num_experts)
        self.restart_counter = 0
        self.restarts += 1

    def snapshot(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "gamma": self.gamma,
            "restart_counter": self.restart_counter,
            "restart_period": self.restart_period,
        }


def select_action(probs: np.ndarray, principle: Principle | str, rng: np.random.Generator) -> int:
    """Pick an arm by inverse-CDF sampling or by the lowest-index argmax."""
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("probs must be a non-empty vector")
    if np.any(probs < -1e-12) or abs(probs.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError("probs is not a valid distribution")
    principle = Principle(principle)
    if principle is Principle.MAXIMUM_INDEX:
        return int(np.argmax(probs))
    cdf = np.cumsum(probs)
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    # Guard against landing on a trailing zero-probability arm through rounding.
    idx = min(idx, probs.size - 1)
    while probs[idx] <= 0.0 and idx > 0:
        idx -= 1
    return idx


def realized_rewards(action: int, label: int, num_arms: int) -> np.ndarray:
    """Reward vector: 1 on the chosen arm if it is the true class, else 0 everywhere."""
    if not 0 <= action < num_arms:
        raise ValueError(f"action {action} out of range for {num_arms} arms")
    if not 0 <= label < num_arms:
        raise ValueError(f"label {label} out of range for {num_arms} arms")
    mu = np.zeros(num_arms)
    if action == label:
        mu[action] = 1.0
    return mu


def bandit_feedback(action: int, reward_vector: np.ndarray) -> np.ndarray:
    """Only the pulled arm's reward is observed; every other entry is 0."""
    reward_vector = np.asarray(reward_vector, dtype=float)
    mu = np.zeros_like(reward_vector)
    mu[action] = reward_vector[action]
    return mu


def estimated_rewards(realized: np.ndarray, probs: np.ndarray, gamma: float | None = None) -> np.ndarray:
    """Importance-weighted rewards ``realized / probs`` (0 where nothing was realized)."""
    realized = np.asarray(realized, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if realized.shape != probs.shape:
        raise ValueError("realized and probs must have the same shape")
    est = np.zeros_like(realized)
    hit = realized != 0.0
    if np.any(hit & (probs <= 0.0)):
        raise ValueError("inconsistent round: reward realized on a zero-probability arm")
    est[hit] = realized[hit] / probs[hit]
    if gamma is not None and gamma > 0:
        est = np.minimum(est, realized.size / gamma)
    return est


def expert_rewards(advice: np.ndarray, rewards: np.ndarray) -> np.ndarray:
    """Per-expert reward ``sum_k advice[n, k] * rewards[k]``."""
    advice = np.asarray(advice, dtype=float)
    rewards = np.asarray(rewards, dtype=float)
    if advice.ndim != 2 or advice.shape[1] != rewards.shape[0]:
        raise ValueError(
            f"advice {advice.shape} and rewards {rewards.shape} dimensions do not match"
        )
    return advice @ rewards
