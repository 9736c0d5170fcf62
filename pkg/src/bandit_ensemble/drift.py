"""Hoeffding-bound drift monitor with an exhaustive cut-point search.

The monitor watches a stream of per-learner scores in [0, 1] (the advice
mass a learner put on the true class). A drift is a significant *drop*:
the mean of the oldest ``n1`` values in the window exceeds the mean of the
whole window by more than the Hoeffding margin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def hoeffding_margin(n1, n2, delta: float):
    """Margin ``sqrt(n2 ln(1/delta) / (2 n1 (n1 + n2)))`` for a one-sided test at level delta."""
    n1 = np.asarray(n1, dtype=float)
    return np.sqrt(n2 * math.log(1.0 / delta) / (2.0 * n1 * (n1 + n2)))


@dataclass(frozen=True)
class DriftStatus:
    drift: bool
    cut_index: int | None = None
    x_bar: float | None = None
    z_bar: float | None = None
    epsilon: float | None = None

    @classmethod
    def stable(cls) -> "DriftStatus":
        return _STABLE

    def as_dict(self) -> dict:
        return {
            "cut_index": self.cut_index,
            "x_bar": self.x_bar,
            "z_bar": self.z_bar,
            "epsilon": self.epsilon,
        }


_STABLE = DriftStatus(False)


class DriftMonitor:
    """Sliding window of at most ``capacity`` values in [0, 1].

    Every observation scans all cuts ``n1`` in ``[min_segment, len - 1]`` and
    reports the cut with the largest ``x_bar - z_bar - epsilon`` when that
    margin is non-negative.
    """

    def __init__(self, capacity: int = 500, delta: float = 0.001, min_segment: int = 30):
        if capacity < 2:
            raise ValueError("capacity must be >= 2")
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 1 <= min_segment < capacity:
            raise ValueError("min_segment must lie in [1, capacity)")
        self.capacity = capacity
        self.delta = delta
        self.min_segment = min_segment
        # Values live in buf[start:start+size]; compacted when the tail is reached.
        self._buf = np.empty(2 * capacity)
        self._start = 0
        self._size = 0
        self._log_inv_delta = math.log(1.0 / delta)
        self._n1 = np.arange(min_segment, capacity, dtype=float)
        self._eps_cache: dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return self._size

    @property
    def window(self) -> np.ndarray:
        return self._buf[self._start : self._start + self._size]

    @property
    def prefix_sums(self) -> np.ndarray:
        """``prefix_sums[i]`` is the sum of the oldest ``i`` window values."""
        cs = np.zeros(self._size + 1)
        np.cumsum(self.window, out=cs[1:])
        return cs

    def reset(self) -> None:
        self._start = 0
        self._size = 0

    def _append(self, value: float) -> None:
        if self._size == self.capacity:
            self._start += 1
            self._size -= 1
        end = self._start + self._size
        if end == self._buf.size:
            self._buf[: self._size] = self._buf[self._start : end]
            self._start = 0
            end = self._size
        self._buf[end] = value
        self._size += 1

    def observe(self, value: float) -> DriftStatus:
        value = float(value)
        if not 0.0 <= value <= 1.0 or math.isnan(value):
            raise ValueError(f"observed value must lie in [0, 1], got {value}")
        self._append(value)
        n2 = self._size
        if n2 - 1 < self.min_segment:
            return _STABLE
        n1 = self._n1[: n2 - self.min_segment]
        eps = self._eps_cache.get(n2)
        if eps is None:
            eps = np.sqrt(n2 * self._log_inv_delta / (2.0 * n1 * (n1 + n2)))
            self._eps_cache[n2] = eps
        window = self.window
        z_bar = window.sum() / n2
        # x_bar <= 1 and eps is smallest at the last cut: no cut can fire.
        if 1.0 - z_bar - eps[-1] < -1e-9:
            return _STABLE
        cs = np.cumsum(window)
        x_bar = cs[self.min_segment - 1 : n2 - 1] / n1
        z_bar = cs[-1] / n2
        margin = x_bar - z_bar - eps
        best = int(np.argmax(margin))
        if margin[best] < 0.0:
            return _STABLE
        return DriftStatus(
            True,
            cut_index=int(n1[best]),
            x_bar=float(x_bar[best]),
            z_bar=float(z_bar),
            epsilon=float(eps[best]),
        )
