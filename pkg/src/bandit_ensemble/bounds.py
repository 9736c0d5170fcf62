"""Online ledger for the ensemble accuracy bounds.

Rounds are grouped into consecutive batches of ``batch_size``; the
*ultimate bound* is the time-average of each batch's best per-expert sum of
advice mass on the true class. The *EXP4 bound* uses a single best expert
over the whole horizon instead, so it can never exceed the batched one.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

_C = 2.0 * math.sqrt(math.e - 1.0)


class BoundViolation(AssertionError):
    """A deterministic bound inequality failed on logged quantities."""


def regret_term(T: float, alpha: float, num_arms: int, num_experts: int) -> float:
    """``2 sqrt(e-1) sqrt(K ln N) (T^(alpha/2 - 1) + T^(-alpha/2))``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if num_experts < 2:
        raise ValueError("num_experts must be >= 2")
    return _C * math.sqrt(num_arms * math.log(num_experts)) * (
        T ** (alpha / 2.0 - 1.0) + T ** (-alpha / 2.0)
    )


def exp4_regret_term(T: float, num_arms: int, num_experts: int) -> float:
    """Single-period analogue ``2 sqrt(e-1) sqrt(K ln N) / sqrt(T)``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if num_experts < 2:
        raise ValueError("num_experts must be >= 2")
    return _C * math.sqrt(num_arms * math.log(num_experts)) / math.sqrt(T)


def constant_period_regret(T: float, period: int, num_arms: int, num_experts: int) -> float:
    """Regret for a fixed restart period: ``c (T/period + 1) sqrt(period) / T``."""
    if T < 1 or period < 1:
        raise ValueError("T and period must be >= 1")
    if num_experts < 2:
        raise ValueError("num_experts must be >= 2")
    return _C * math.sqrt(num_arms * math.log(num_experts)) * (
        1.0 / math.sqrt(period) + math.sqrt(period) / T
    )


def per_batch_regret_bound(period: int, num_arms: int, num_experts: int) -> float:
    """``2 sqrt(e-1) sqrt(period K ln N)``: expected regret cap within one batch."""
    return _C * math.sqrt(period * num_arms * math.log(num_experts))


@dataclass(frozen=True)
class BoundReport:
    ultimate_bound: float
    exp4_ultimate_bound: float
    regret_rexp4: float
    regret_exp4: float
    lower_bound: float
    best_base_accuracy: float
    per_expert_accuracy: list[float]
    ensemble_accuracy: float
    rounds: int
    labeled_rounds: int
    batches: int
    regret_variant: str = "alpha"

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        return cls(**d)

    def check(self, voting: bool, full_labels: bool, seed=None) -> None:
        """Raise :class:`BoundViolation` naming the inequality and seed on failure."""
        tag = f" (seed={seed})" if seed is not None else ""
        if not self.ultimate_bound >= self.exp4_ultimate_bound:
            raise BoundViolation(
                f"ultimate_bound >= exp4_ultimate_bound violated: "
                f"{self.ultimate_bound!r} < {self.exp4_ultimate_bound!r}{tag}"
            )
        if not self.regret_rexp4 >= self.regret_exp4:
            raise BoundViolation(
                f"regret_rexp4 >= regret_exp4 violated: "
                f"{self.regret_rexp4!r} < {self.regret_exp4!r}{tag}"
            )
        if voting and full_labels:
            for n, acc in enumerate(self.per_expert_accuracy):
                if not self.ultimate_bound >= acc:
                    raise BoundViolation(
                        f"ultimate_bound >= per_expert_accuracy[{n}] violated: "
                        f"{self.ultimate_bound!r} < {acc!r}{tag}"
                    )


@dataclass
class BoundLedger:
    """Accumulates per-batch and whole-horizon per-expert sums."""

    num_experts: int
    batch_size: int
    current_batch_sums: np.ndarray = field(init=False)
    closed_batch_sums: list[np.ndarray] = field(init=False, default_factory=list)
    per_expert_correct: np.ndarray = field(init=False)
    closed_batch_maxima: list[float] = field(init=False, default_factory=list)
    rounds: int = field(init=False, default=0)
    labeled_rounds: int = field(init=False, default=0)
    batch_length: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        if self.num_experts < 1 or self.batch_size < 1:
            raise ValueError("num_experts and batch_size must be >= 1")
        self.current_batch_sums = np.zeros(self.num_experts)
        self.per_expert_correct = np.zeros(self.num_experts, dtype=np.int64)

    def record_round(self, xi_column, labeled: bool, phi=None) -> float | None:
        """Add one round; returns the batch maximum when this round closed a batch."""
        xi = np.asarray(xi_column, dtype=float)
        if xi.shape != (self.num_experts,):
            raise ValueError("xi_column must have one entry per expert")
        if np.any(xi < 0.0) or np.any(xi > 1.0):
            raise ValueError("xi_column entries must lie in [0, 1]")
        self.current_batch_sums += xi
        self.rounds += 1
        self.batch_length += 1
        if labeled:
            self.labeled_rounds += 1
            if phi is not None:
                self.per_expert_correct += np.asarray(phi, dtype=bool)
        elif phi is not None:
            raise ValueError("phi is only defined on labelled rounds")
        if self.batch_length == self.batch_size:
            return self._close_batch()
        return None

    def _close_batch(self) -> float:
        top = float(self.current_batch_sums.max())
        self.closed_batch_maxima.append(top)
        self.closed_batch_sums.append(self.current_batch_sums)
        self.current_batch_sums = np.zeros(self.num_experts)
        self.batch_length = 0
        return top

    @property
    def horizon_sums(self) -> np.ndarray:
        """Whole-run per-expert sums, accumulated batch by batch.

        Summing batches in the same order as the maxima keeps
        ``sum(maxima) >= max(horizon_sums)`` exact in floating point.
        """
        acc = np.zeros(self.num_experts)
        for s in self.closed_batch_sums:
            acc = acc + s
        return acc + self.current_batch_sums

    def finalize(
        self,
        num_arms: int,
        ensemble_correct: int,
        alpha: float | None = None,
        restart_period: int | None = None,
    ) -> BoundReport:
        """Close the trailing partial batch and compute the bound report.

        ``alpha`` selects the ``T**alpha`` regret form; otherwise the
        constant-period form with ``restart_period`` is used.
        """
        if self.rounds == 0:
            raise ValueError("cannot finalize an empty ledger")
        if self.batch_length > 0:
            self._close_batch()
        T = self.rounds
        N = self.num_experts
        total = 0.0
        for m in self.closed_batch_maxima:
            total += m
        ub = total / T
        ub2 = float(self.horizon_sums.max()) / T
        if N < 2:
            r1 = r2 = 0.0
            variant = "single_expert"
        elif alpha is not None:
            r1 = regret_term(T, alpha, num_arms, N)
            r2 = exp4_regret_term(T, num_arms, N)
            variant = "alpha"
        else:
            period = restart_period if restart_period is not None else self.batch_size
            r1 = constant_period_regret(T, period, num_arms, N)
            r2 = exp4_regret_term(T, num_arms, N)
            variant = "constant_period"
        if self.labeled_rounds:
            per_acc = (self.per_expert_correct / self.labeled_rounds).tolist()
        else:
            per_acc = [0.0] * N
        return BoundReport(
            ultimate_bound=ub,
            exp4_ultimate_bound=ub2,
            regret_rexp4=r1,
            regret_exp4=r2,
            lower_bound=ub - r1,
            best_base_accuracy=max(per_acc),
            per_expert_accuracy=per_acc,
            ensemble_accuracy=ensemble_correct / T,
            rounds=T,
            labeled_rounds=self.labeled_rounds,
            batches=len(self.closed_batch_maxima),
            regret_variant=variant,
        )
