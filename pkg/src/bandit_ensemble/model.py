"""The online ensemble loop: predict, gate the label, reward, detect drift, update.

Each step is test-then-update: the prediction is made from state that has
not seen the sample's label. Unlabelled steps leave every piece of model
state untouched and only feed the bound ledger a label-free surrogate.
"""
from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bandit import (
    EnsembleState,
    Principle,
    estimated_rewards,
    expert_rewards,
    realized_rewards,
    select_action,
)
from .bounds import BoundLedger, BoundReport
from .drift import DriftMonitor
from .learners import AdviceMode, Learner, advice_of
from .streams import StreamSample


@dataclass
class LabelGate:
    """Decides whether the model may see a sample's label.

    ``full`` always grants. ``random`` grants with probability ``rate``.
    ``uncertainty_margin`` grants when the top-two probability margin is
    below ``margin`` and fewer than ``rate * t`` labels have been spent.
    """

    kind: str = "full"
    rate: float = 1.0
    margin: float = 0.2
    granted: int = field(default=0, init=False)
    seen: int = field(default=0, init=False)

    def __post_init__(self) -> None:
        if self.kind not in ("full", "random", "uncertainty_margin"):
            raise ValueError(f"gate.kind: unknown gate {self.kind!r}")
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("gate.rate: must lie in [0, 1]")
        if not 0.0 <= self.margin <= 1.0:
            raise ValueError("gate.margin: must lie in [0, 1]")

    @property
    def is_full(self) -> bool:
        return self.kind == "full" or (self.kind == "random" and self.rate >= 1.0)

    def reset(self) -> None:
        self.granted = 0
        self.seen = 0

    def decide(self, probs: np.ndarray, rng: np.random.Generator) -> bool:
        self.seen += 1
        if self.kind == "full":
            ok = True
        elif self.kind == "random":
            ok = bool(rng.random() < self.rate)
        else:
            top2 = np.sort(probs)[-2:]
            uncertain = (top2[1] - top2[0]) < self.margin
            ok = bool(uncertain and self.granted < self.rate * self.seen)
        self.granted += ok
        return ok


@dataclass
class PredictionRecord:
    t: int
    predicted: int
    label: int | None
    labeled: bool
    action_dist: list[float]
    xi_at_label: list[float] | None
    drift_events: list[int]
    restart_fired: bool
    correct: bool
    batch_max: float | None = None

    def as_log_row(self) -> dict:
        row = {
            "t": self.t,
            "predicted": self.predicted,
            "label": self.label,
            "labeled": self.labeled,
            "correct": self.correct,
            "restart_fired": self.restart_fired,
            "drift": self.drift_events,
            "p": self.action_dist,
        }
        if self.batch_max is not None:
            row["batch_max"] = self.batch_max
        return row


class BanditEnsemble:
    """N base learners weighted by a restarting exponential-weights bandit.

    The ``seed`` drives three independent random streams: action sampling,
    label gating, and learner initialisation.
    """

    def __init__(
        self,
        learners: Sequence[Learner],
        num_classes: int,
        restart_period: int,
        advice_mode: AdviceMode | str = AdviceMode.VOTING,
        principle: Principle | str = Principle.MAXIMUM_INDEX,
        gate: LabelGate | None = None,
        seed: int = 0,
        gamma: float | None = None,
        drift: bool = True,
        drift_delta: float = 0.001,
        drift_window: int = 500,
        drift_min_segment: int = 30,
        buffer_size: int = 50,
    ):
        if len(learners) < 1:
            raise ValueError("need at least one learner")
        self.learners = list(learners)
        self.num_classes = num_classes
        self.advice_mode = AdviceMode(advice_mode)
        self.principle = Principle(principle)
        self.gate = gate if gate is not None else LabelGate()
        self.seed = seed
        self.drift_enabled = drift
        self.monitors = [
            DriftMonitor(drift_window, drift_delta, drift_min_segment) for _ in self.learners
        ]
        self.bandit = EnsembleState(
            num_arms=num_classes,
            num_experts=len(self.learners),
            restart_period=restart_period,
            gamma=gamma,
        )
        self.buffer_size = buffer_size
        self.retrain_buffer: deque[StreamSample] = deque(maxlen=buffer_size)
        self.ledger = BoundLedger(len(self.learners), restart_period)
        # Fed with true labels on every round; equals the model ledger under full labels.
        self.reference_ledger = BoundLedger(len(self.learners), restart_period)
        self.action_rng = np.random.default_rng([seed, 101])
        self.gate_rng = np.random.default_rng([seed, 202])
        self.t = 0
        self.warm = False
        self.retrain_counts = [0] * len(self.learners)

    @property
    def num_experts(self) -> int:
        return len(self.learners)

    def warm_start(self, samples: Sequence[StreamSample]) -> None:
        """Train every learner from scratch on ``samples`` and reset all online state."""
        samples = list(samples)
        if not samples:
            raise ValueError("warm start needs at least one labelled sample")
        for s in samples:
            if not 0 <= s.label < self.num_classes:
                raise ValueError(f"warm-start label {s.label} out of range")
        for learner in self.learners:
            learner.reset()
            learner.fit(samples)
        self.retrain_buffer.clear()
        self.retrain_buffer.extend(samples[-self.buffer_size :])
        self.bandit.restart()
        self.bandit.restarts = 0
        for m in self.monitors:
            m.reset()
        self.gate.reset()
        self.ledger = BoundLedger(self.num_experts, self.bandit.restart_period)
        self.reference_ledger = BoundLedger(self.num_experts, self.bandit.restart_period)
        self.retrain_counts = [0] * self.num_experts
        self.t = 0
        self.warm = True

    def advice(self, features: np.ndarray) -> np.ndarray:
        return np.stack([advice_of(l, features, self.advice_mode) for l in self.learners])

    def process(self, sample: StreamSample) -> PredictionRecord:
        if not self.warm:
            raise RuntimeError("call warm_start before processing the stream")
        x = sample.features
        A = self.advice(x)
        probs = self.bandit.distribution(A)
        action = select_action(probs, self.principle, self.action_rng)
        labeled = self.gate.decide(probs, self.gate_rng)
        y = sample.label
        if not 0 <= y < self.num_classes:
            raise ValueError(f"label {y} out of range at t={self.t}")
        xi_y = A[:, y]
        self.reference_ledger.record_round(xi_y, True, self._phi(A, y))

        drifted: list[int] = []
        restart = False
        batch_max = None
        if labeled:
            mu = realized_rewards(action, y, self.num_classes)
            mu_hat = estimated_rewards(mu, probs, self.bandit.gamma)
            r_hat = expert_rewards(A, mu_hat)
            for n, learner in enumerate(self.learners):
                if self.drift_enabled and self.monitors[n].observe(xi_y[n]).drift:
                    drifted.append(n)
                    learner.retrain(list(self.retrain_buffer))
                    self.retrain_counts[n] += 1
                    self.monitors[n].reset()
                else:
                    learner.update(x, y)
            restart = self.bandit.update(r_hat)
            self.retrain_buffer.append(sample)
            batch_max = self.ledger.record_round(xi_y, True, self._phi(A, y))
        else:
            batch_max = self.ledger.record_round(A.min(axis=1), False, None)

        rec = PredictionRecord(
            t=self.t,
            predicted=action,
            label=y,
            labeled=labeled,
            action_dist=probs.tolist(),
            xi_at_label=xi_y.tolist() if labeled else None,
            drift_events=drifted,
            restart_fired=restart,
            correct=action == y,
            batch_max=batch_max,
        )
        self.t += 1
        return rec

    def _phi(self, A: np.ndarray, y: int) -> np.ndarray:
        # Whether each learner's own top class is the true one.
        return np.argmax(A, axis=1) == y


@dataclass
class RunResult:
    processed: int
    accuracy: float
    macro_f1: float
    report: BoundReport | None
    reference_report: BoundReport | None
    drift_events: int
    restarts: int
    labeled: int
    wall_time: float

    @property
    def samples_per_sec(self) -> float:
        return self.processed / self.wall_time if self.wall_time > 0 else 0.0


def macro_f1(y_true, y_pred, num_classes: int) -> float:
    from sklearn.metrics import f1_score

    if len(y_true) == 0:
        return 0.0
    return float(
        f1_score(y_true, y_pred, labels=list(range(num_classes)), average="macro", zero_division=0)
    )


def run_stream(
    model: BanditEnsemble,
    stream: Iterable[StreamSample],
    sink: Callable[[PredictionRecord], None] | None = None,
    alpha: float | None = None,
) -> RunResult:
    """Process ``stream`` in order and close the ledgers.

    Accuracy is measured against the true labels, including those the gate
    withheld from the model.
    """
    start = time.perf_counter()
    y_true: list[int] = []
    y_pred: list[int] = []
    drift_events = 0
    labeled = 0
    for sample in stream:
        rec = model.process(sample)
        if sink is not None:
            try:
                sink(rec)
            except OSError as exc:
                raise OSError(f"sink failed at step {rec.t}: {exc}") from exc
        y_true.append(sample.label)
        y_pred.append(rec.predicted)
        drift_events += len(rec.drift_events)
        labeled += rec.labeled
    wall = time.perf_counter() - start
    n = len(y_true)
    if n == 0:
        return RunResult(0, 0.0, 0.0, None, None, 0, 0, 0, wall)
    correct = int(np.sum(np.asarray(y_true) == np.asarray(y_pred)))
    period = model.bandit.restart_period
    report = model.ledger.finalize(model.num_classes, correct, alpha=alpha, restart_period=period)
    ref = model.reference_ledger.finalize(
        model.num_classes, correct, alpha=alpha, restart_period=period
    )
    return RunResult(
        processed=n,
        accuracy=correct / n,
        macro_f1=macro_f1(y_true, y_pred, model.num_classes),
        report=report,
        reference_report=ref,
        drift_events=drift_events,
        restarts=model.bandit.restarts,
        labeled=labeled,
        wall_time=wall,
    )
