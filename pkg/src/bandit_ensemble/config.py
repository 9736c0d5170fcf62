"""Run configuration: nested dataclasses loaded from a single JSON document."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .bandit import Principle
from .learners import AdviceMode
from .streams import StreamSpec


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass
class LearnerConfig:
    kind: str = "rvfl"
    hidden: int = 64
    ridge: float = 0.1
    input_scale: float = 1.0
    var_floor: float = 1e-6
    buffer_size: int = 50

    def params(self) -> dict:
        if self.kind == "rvfl":
            return {"hidden": self.hidden, "ridge": self.ridge, "input_scale": self.input_scale}
        return {"var_floor": self.var_floor}


@dataclass
class DriftConfig:
    enabled: bool = True
    delta: float = 0.001
    window: int = 500
    min_segment: int = 30


@dataclass
class GateConfig:
    kind: str = "full"
    rate: float = 1.0
    margin: float = 0.2

    @classmethod
    def parse(cls, text: str) -> "GateConfig":
        """``full``, ``random:RATE`` or ``uncertainty_margin:RATE[:MARGIN]``."""
        parts = text.split(":")
        kind = parts[0]
        try:
            if kind == "full" and len(parts) == 1:
                return cls("full")
            if kind == "random" and len(parts) == 2:
                return cls("random", rate=float(parts[1]))
            if kind == "uncertainty_margin" and len(parts) in (2, 3):
                margin = float(parts[2]) if len(parts) == 3 else 0.2
                return cls(kind, rate=float(parts[1]), margin=margin)
        except ValueError:
            pass
        raise ConfigError(f"gate: cannot parse {text!r}")


@dataclass
class RunConfig:
    stream: StreamSpec
    warm_count: int = 200
    num_experts: int = 10
    alpha: float | None = 0.7
    restart_period: int | None = None
    advice_mode: str = "voting"
    principle: str = "maximum_index"
    gate: GateConfig = field(default_factory=GateConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    drift: DriftConfig = field(default_factory=DriftConfig)
    seeds: list[int] = field(default_factory=lambda: [0])
    workers: int = 1
    log_dir: str | None = None
    summary_path: str | None = None

    def validate(self) -> "RunConfig":
        if (self.alpha is None) == (self.restart_period is None):
            raise ConfigError("alpha/restart_period: set exactly one of them")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha: must lie in (0, 1]")
        if self.restart_period is not None and self.restart_period < 1:
            raise ConfigError("restart_period: must be >= 1")
        if self.warm_count < 1:
            raise ConfigError("warm_count: must be >= 1")
        if self.stream.kind != "csv" and self.warm_count >= self.stream.length:
            raise ConfigError("warm_count: must be smaller than stream.length")
        if self.num_experts < 1:
            raise ConfigError("num_experts: must be >= 1")
        try:
            AdviceMode(self.advice_mode)
        except ValueError:
            raise ConfigError(f"advice_mode: unknown mode {self.advice_mode!r}") from None
        try:
            Principle(self.principle)
        except ValueError:
            raise ConfigError(f"principle: unknown principle {self.principle!r}") from None
        if self.gate.kind not in ("full", "random", "uncertainty_margin"):
            raise ConfigError(f"gate.kind: unknown gate {self.gate.kind!r}")
        if not 0.0 <= self.gate.rate <= 1.0:
            raise ConfigError("gate.rate: must lie in [0, 1]")
        if self.learner.kind not in ("rvfl", "nb"):
            raise ConfigError(f"learner.kind: unknown learner {self.learner.kind!r}")
        if self.learner.ridge <= 0:
            raise ConfigError("learner.ridge: must be positive")
        if self.learner.buffer_size < 1:
            raise ConfigError("learner.buffer_size: must be >= 1")
        if not 0.0 < self.drift.delta < 1.0:
            raise ConfigError("drift.delta: must lie in (0, 1)")
        if not 1 <= self.drift.min_segment < self.drift.window:
            raise ConfigError("drift.min_segment: must lie in [1, drift.window)")
        if not self.seeds:
            raise ConfigError("seeds: need at least one seed")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stream"] = self.stream.to_dict()
        return d

    def digest(self) -> str:
        """Hash of everything that affects results (output paths and workers excluded)."""
        d = self.to_dict()
        for k in ("log_dir", "summary_path", "workers"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown field")
        if "stream" not in d:
            raise ConfigError("stream: required")
        try:
            d["stream"] = StreamSpec.from_dict(d["stream"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"stream.{exc}") from None
        for name, sub in (("gate", GateConfig), ("learner", LearnerConfig), ("drift", DriftConfig)):
            if name in d:
                raw = d[name]
                if isinstance(raw, str) and name == "gate":
                    d[name] = GateConfig.parse(raw)
                    continue
                bad = set(raw) - {f.name for f in fields(sub)}
                if bad:
                    raise ConfigError(f"{name}.{sorted(bad)[0]}: unknown field")
                d[name] = sub(**raw)
        return cls(**d).validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        with Path(path).open(encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class BanditSimSpec:
    """Synthetic bandit-with-advice instance.

    ``arm_means`` is a list of mean vectors; the horizon is split into that
    many equal segments (one entry means stationary rewards). Expert ``n``
    advises a one-hot on the current best arm with probability
    ``expert_accuracy[n]`` and a uniform-random simplex point otherwise.
    """

    num_arms: int = 3
    num_experts: int = 10
    horizon: int = 10_000
    restart_period: int | None = 1000
    alpha: float | None = None
    arm_means: list[list[float]] = field(default_factory=lambda: [[0.9, 0.5, 0.2]])
    expert_accuracy: list[float] | None = None
    principle: str = "random_sampling"
    seeds: list[int] = field(default_factory=lambda: list(range(30)))

    def period(self) -> int:
        if self.restart_period is not None:
            return self.restart_period
        return max(1, round(self.horizon ** self.alpha))

    def accuracies(self) -> list[float]:
        if self.expert_accuracy is not None:
            return list(self.expert_accuracy)
        return [1.0] + [0.0] * (self.num_experts - 1)

    def validate(self) -> "BanditSimSpec":
        if self.num_arms < 2:
            raise ConfigError("num_arms: must be >= 2")
        if self.num_experts < 1:
            raise ConfigError("num_experts: must be >= 1")
        if self.horizon < 1:
            raise ConfigError("horizon: must be >= 1")
        if (self.alpha is None) == (self.restart_period is None):
            raise ConfigError("alpha/restart_period: set exactly one of them")
        if self.alpha is not None and not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha: must lie in (0, 1]")
        if self.restart_period is not None and self.restart_period < 1:
            raise ConfigError("restart_period: must be >= 1")
        if not self.arm_means:
            raise ConfigError("arm_means: need at least one segment")
        for i, means in enumerate(self.arm_means):
            if len(means) != self.num_arms:
                raise ConfigError(f"arm_means[{i}]: expected {self.num_arms} entries")
            if any(not 0.0 <= m <= 1.0 for m in means):
                raise ConfigError(f"arm_means[{i}]: Bernoulli means must lie in [0, 1]")
        acc = self.accuracies()
        if len(acc) != self.num_experts:
            raise ConfigError(f"expert_accuracy: expected {self.num_experts} entries")
        if any(not 0.0 <= a <= 1.0 for a in acc):
            raise ConfigError("expert_accuracy: entries must lie in [0, 1]")
        try:
            Principle(self.principle)
        except ValueError:
            raise ConfigError(f"principle: unknown principle {self.principle!r}") from None
        if not self.seeds:
            raise ConfigError("seeds: need at least one seed")
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "BanditSimSpec":
        bad = set(d) - {f.name for f in fields(cls)}
        if bad:
            raise ConfigError(f"{sorted(bad)[0]}: unknown field")
        return cls(**d).validate()
