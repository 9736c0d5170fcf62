"""Experiment execution: seeded runs, sweeps, bandit simulations, and their outputs.

Every end-to-end run checks the deterministic bound inequalities on its own
ledger before it is reported; a violation raises
:class:`~bandit_ensemble.bounds.BoundViolation` naming the inequality and seed.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bandit import EnsembleState, Principle, bandit_feedback, estimated_rewards, select_action
from .bounds import BoundReport, BoundViolation, per_batch_regret_bound
from .config import BanditSimSpec, RunConfig
from .learners import AdviceMode, make_learner
from .model import BanditEnsemble, LabelGate, run_stream
from .streams import StreamSample, generate

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
OUTPUT_ENV = "BANDIT_ENSEMBLE_OUT"
WALL_TIME_KEYS = ("wall_time", "samples_per_sec")
AGGREGATE_KEYS = (
    "accuracy",
    "macro_f1",
    "ultimate_bound",
    "exp4_ultimate_bound",
    "regret_rexp4",
    "regret_exp4",
    "lower_bound",
    "best_base_accuracy",
    "drift_events",
)


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "results"))


def learner_seed(run_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([run_seed, index]).generate_state(1)[0])


def restart_period_for(config: RunConfig, online_length: int) -> int:
    if config.restart_period is not None:
        return config.restart_period
    return max(1, round(max(online_length, 1) ** config.alpha))


def build_model(config: RunConfig, seed: int, num_features: int, num_classes: int,
                online_length: int) -> BanditEnsemble:
    lc = config.learner
    learners = [
        make_learner(lc.kind, num_features, num_classes, seed=learner_seed(seed, n), **lc.params())
        if lc.kind == "rvfl"
        else make_learner(lc.kind, num_features, num_classes, seed=0, **lc.params())
        for n in range(config.num_experts)
    ]
    g = config.gate
    return BanditEnsemble(
        learners,
        num_classes,
        restart_period_for(config, online_length),
        advice_mode=config.advice_mode,
        principle=config.principle,
        gate=LabelGate(g.kind, g.rate, g.margin),
        seed=seed,
        drift=config.drift.enabled,
        drift_delta=config.drift.delta,
        drift_window=config.drift.window,
        drift_min_segment=config.drift.min_segment,
        buffer_size=lc.buffer_size,
    )


class JsonlSink:
    """Writes one JSON object per processed step."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8")
        self.lines = 0

    def __call__(self, record) -> None:
        row = {"schema_version": SCHEMA_VERSION, **record.as_log_row()}
        self._fh.write(json.dumps(row) + "\n")
        self.lines += 1

    def close(self) -> None:
        self._fh.close()


def check_run(report: BoundReport | None, reference: BoundReport | None, voting: bool,
              full_labels: bool, seed: int) -> None:
    if report is None:
        return
    report.check(voting=voting, full_labels=full_labels, seed=seed)
    reference.check(voting=voting, full_labels=True, seed=seed)
    if not report.ultimate_bound <= reference.ultimate_bound:
        raise BoundViolation(
            "partial-label ultimate_bound <= full-label ultimate_bound violated: "
            f"{report.ultimate_bound!r} > {reference.ultimate_bound!r} (seed={seed})"
        )


def run_seed(config: RunConfig, seed: int, samples: Sequence[StreamSample] | None = None) -> dict:
    """One seeded warm start plus online pass; returns the per-seed summary entry."""
    if samples is None:
        samples = list(generate(config.stream))
    if len(samples) <= config.warm_count:
        raise ValueError(
            f"stream has {len(samples)} samples, need more than warm_count={config.warm_count}"
        )
    warm, online = samples[: config.warm_count], samples[config.warm_count :]
    num_classes = max(config.stream.classes, 1 + max(s.label for s in samples))
    num_features = samples[0].features.size
    model = build_model(config, seed, num_features, num_classes, len(online))
    model.warm_start(warm)
    sink = None
    if config.log_dir is not None:
        sink = JsonlSink(Path(config.log_dir) / f"steps_seed{seed}.jsonl")
    try:
        result = run_stream(model, online, sink=sink, alpha=config.alpha)
    finally:
        if sink is not None:
            sink.close()
    voting = AdviceMode(config.advice_mode) is AdviceMode.VOTING
    check_run(result.report, result.reference_report, voting,
              full_labels=result.labeled == result.processed, seed=seed)
    log.info("seed %d: accuracy %.4f over %d samples", seed, result.accuracy, result.processed)
    return {
        "seed": seed,
        "processed": result.processed,
        "labeled": result.labeled,
        "accuracy": result.accuracy,
        "macro_f1": result.macro_f1,
        "restart_period": model.bandit.restart_period,
        "gamma": model.bandit.gamma,
        "num_classes": num_classes,
        "drift_events": result.drift_events,
        "restarts": result.restarts,
        "bound_report": result.report.as_dict() if result.report else None,
        "reference_bound_report": result.reference_report.as_dict() if result.reference_report else None,
        "wall_time": result.wall_time,
        "samples_per_sec": result.samples_per_sec,
    }


def _run_seed_job(args) -> dict:
    config_dict, seed = args
    return run_seed(RunConfig.from_dict(config_dict), seed)


def _aggregate(runs: list[dict]) -> dict:
    out = {}
    for key in AGGREGATE_KEYS:
        vals = []
        for r in runs:
            if key in r:
                vals.append(r[key])
            elif r["bound_report"] is not None:
                vals.append(r["bound_report"][key])
        if not vals:
            continue
        arr = np.asarray(vals, dtype=float)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        out[key] = {"mean": float(arr.mean()), "std": std}
    return out


@dataclass
class RunSummary:
    config_digest: str
    config: dict
    runs: list[dict]
    aggregate: dict
    schema_version: int = SCHEMA_VERSION

    def mean(self, key: str) -> float:
        return self.aggregate[key]["mean"]

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config_digest": self.config_digest,
            "config": self.config,
            "runs": self.runs,
            "aggregate": self.aggregate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunSummary":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported summary schema_version {d.get('schema_version')!r}")
        return cls(
            config_digest=d["config_digest"],
            config=d["config"],
            runs=d["runs"],
            aggregate=d["aggregate"],
            schema_version=d["schema_version"],
        )

    def without_wall_time(self) -> dict:
        d = self.to_dict()
        d["runs"] = [{k: v for k, v in r.items() if k not in WALL_TIME_KEYS} for r in d["runs"]]
        return d


def run(config: RunConfig) -> RunSummary:
    """Run every seed in ``config`` and aggregate; writes the summary if a path is set."""
    config.validate()
    if config.workers > 1 and len(config.seeds) > 1:
        jobs = [(config.to_dict(), s) for s in config.seeds]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(_run_seed_job, jobs))
    else:
        samples = list(generate(config.stream))
        runs = [run_seed(config, s, samples) for s in config.seeds]
    summary = RunSummary(config.digest(), config.to_dict(), runs, _aggregate(runs))
    if config.summary_path is not None:
        write_summary(summary, config.summary_path)
    return summary


def write_summary(summary: RunSummary, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(summary.to_json() + "\n", encoding="utf-8")


def read_summary(path) -> RunSummary:
    return RunSummary.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


SWEEP_COLUMNS = ("alpha", "N", "seed", "accuracy", "ultimate_bound", "regret", "lower_bound")


@dataclass
class SweepPoint:
    alpha: float
    num_experts: int
    summary: RunSummary


def sweep(base: RunConfig, alphas: Sequence[float], ns: Sequence[int],
          csv_path=None) -> list[SweepPoint]:
    """Cross product of ``alphas`` and expert counts ``ns``; optional tidy CSV output."""
    if not alphas or not ns:
        raise ValueError("sweep grids must be non-empty")
    points = []
    for alpha in alphas:
        for n in ns:
            cfg = replace(base, alpha=alpha, restart_period=None, num_experts=n, summary_path=None)
            if base.log_dir is not None:
                cfg = replace(cfg, log_dir=str(Path(base.log_dir) / f"alpha{alpha}_N{n}"))
            points.append(SweepPoint(alpha, n, run(cfg)))
    if csv_path is not None:
        write_sweep_csv(points, csv_path)
    return points


def sweep_rows(points: Iterable[SweepPoint]) -> list[dict]:
    rows = []
    for p in points:
        for r in p.summary.runs:
            b = r["bound_report"] or {}
            rows.append({
                "alpha": p.alpha,
                "N": p.num_experts,
                "seed": r["seed"],
                "accuracy": r["accuracy"],
                "ultimate_bound": b.get("ultimate_bound"),
                "regret": b.get("regret_rexp4"),
                "lower_bound": b.get("lower_bound"),
            })
    return rows


def write_sweep_csv(points: Iterable[SweepPoint], path) -> int:
    rows = sweep_rows(points)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return len(rows)


def _simulate_seed(spec: BanditSimSpec, seed: int) -> dict:
    K, N, T = spec.num_arms, spec.num_experts, spec.horizon
    period = spec.period()
    state = EnsembleState(K, N, period)
    env = np.random.default_rng([seed, 7])
    action_rng = np.random.default_rng([seed, 11])
    acc = np.asarray(spec.accuracies())
    segments = len(spec.arm_means)
    means_table = np.asarray(spec.arm_means, dtype=float)
    principle = Principle(spec.principle)
    g_sums = np.zeros(N)
    realized = 0.0
    regrets, gmax, got = [], [], []
    for t in range(T):
        means = means_table[t * segments // T]
        best = int(np.argmax(means))
        mu = (env.random(K) < means).astype(float)
        # Normalised unit exponentials are uniform on the simplex.
        A = env.standard_exponential((N, K))
        A /= A.sum(axis=1, keepdims=True)
        follow = env.random(N) < acc
        A[follow] = 0.0
        A[follow, best] = 1.0
        probs = state.distribution(A)
        a = select_action(probs, principle, action_rng)
        g_sums += A @ mu
        realized += mu[a]
        mu_hat = estimated_rewards(bandit_feedback(a, mu), probs, state.gamma)
        restarted = state.update(A @ mu_hat)
        if restarted or t == T - 1:
            top = float(g_sums.max())
            gmax.append(top)
            got.append(realized)
            regrets.append(top - realized)
            g_sums = np.zeros(N)
            realized = 0.0
    return {"seed": seed, "batch_regret": regrets, "batch_gmax": gmax, "batch_realized": got}


def bandit_sim(spec: BanditSimSpec) -> dict:
    """Run the bandit against synthetic Bernoulli rewards and compare per-batch regret
    ``max_n sum r_n - sum realized`` with its closed-form cap."""
    spec.validate()
    period = spec.period()
    gamma = EnsembleState(spec.num_arms, spec.num_experts, period).gamma
    bound = per_batch_regret_bound(period, spec.num_arms, spec.num_experts) if spec.num_experts > 1 else 0.0
    per_seed = [_simulate_seed(spec, s) for s in spec.seeds]
    all_regrets = np.concatenate([np.asarray(r["batch_regret"]) for r in per_seed])
    # Mean per batch index across seeds: the quantity the expectation bound speaks about.
    n_batches = min(len(r["batch_regret"]) for r in per_seed)
    by_batch = np.mean([r["batch_regret"][:n_batches] for r in per_seed], axis=0)
    return {
        "schema_version": SCHEMA_VERSION,
        "spec": spec.__dict__,
        "restart_period": period,
        "gamma": gamma,
        "per_batch_bound": bound,
        "mean_batch_regret": float(all_regrets.mean()),
        "max_batch_regret": float(all_regrets.max()),
        "mean_regret_by_batch": by_batch.tolist(),
        "fraction_within_bound": float(np.mean(all_regrets <= bound)),
        "seeds": per_seed,
    }
