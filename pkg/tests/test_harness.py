import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from bandit_ensemble.bounds import BoundReport, BoundViolation, per_batch_regret_bound
from bandit_ensemble.config import BanditSimSpec, ConfigError, GateConfig, RunConfig
from bandit_ensemble.harness import (
    RunSummary,
    bandit_sim,
    check_run,
    learner_seed,
    read_summary,
    run,
    sweep,
)
from bandit_ensemble.streams import StreamSpec


def small_config(**kw):
    base = dict(
        stream={"kind": "label_flip", "length": 900, "seed": 2, "flip_period": 300, "num_features": 5},
        num_experts=3,
        learner={"hidden": 16},
        seeds=[0],
    )
    base.update(kw)
    return RunConfig.from_dict(base)


class TestConfig:
    def test_defaults(self):
        cfg = RunConfig(stream=StreamSpec(kind="sea")).validate()
        assert (cfg.warm_count, cfg.num_experts, cfg.alpha) == (200, 10, 0.7)
        assert cfg.learner.hidden == 64 and cfg.learner.buffer_size == 50
        assert (cfg.drift.delta, cfg.drift.window, cfg.drift.min_segment) == (0.001, 500, 30)

    @pytest.mark.parametrize("raw,path", [
        ({"alpha": 1.5}, "alpha"),
        ({"alpha": 0.5, "restart_period": 10}, "alpha/restart_period"),
        ({"alpha": None}, "alpha/restart_period"),
        ({"warm_count": 5000}, "warm_count"),
        ({"bogus": 1}, "bogus"),
        ({"gate": {"kind": "oracle"}}, "gate.kind"),
        ({"gate": {"rate": 2.0}}, "gate.rate"),
        ({"learner": {"depth": 3}}, "learner.depth"),
        ({"drift": {"delta": 0.0}}, "drift.delta"),
        ({"principle": "greedy"}, "principle"),
        ({"stream": {"kind": "sea", "length": 0}}, "stream.length"),
        ({"seeds": []}, "seeds"),
    ])
    def test_errors_name_field(self, raw, path):
        d = {"stream": {"kind": "sea", "length": 1000}, **raw}
        with pytest.raises(ConfigError) as info:
            RunConfig.from_dict(d)
        assert str(info.value).startswith(path)

    def test_gate_parse(self):
        assert GateConfig.parse("full") == GateConfig()
        assert GateConfig.parse("random:0.2") == GateConfig("random", 0.2)
        assert GateConfig.parse("uncertainty_margin:0.1:0.3") == GateConfig("uncertainty_margin", 0.1, 0.3)
        for bad in ("random", "random:x", "oracle:0.1"):
            with pytest.raises(ConfigError):
                GateConfig.parse(bad)

    def test_round_trip_and_digest(self, tmp_path):
        cfg = small_config(gate="random:0.5", seeds=[1, 2])
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg.to_dict()))
        loaded = RunConfig.load(path)
        assert loaded == cfg
        assert loaded.digest() == cfg.digest()
        assert replace(cfg, workers=4, log_dir="x").digest() == cfg.digest()
        assert replace(cfg, seeds=[1]).digest() != cfg.digest()

    def test_bandit_sim_spec_validation(self):
        with pytest.raises(ConfigError, match="arm_means"):
            BanditSimSpec(arm_means=[[0.5, 1.2, 0.1]]).validate()
        with pytest.raises(ConfigError, match="expert_accuracy"):
            BanditSimSpec(expert_accuracy=[1.0]).validate()
        assert BanditSimSpec(restart_period=None, alpha=0.5, horizon=10_000).period() == 100


class TestRun:
    def test_one_entry_per_seed(self):
        summary = run(small_config(seeds=[0, 1, 2]))
        assert [r["seed"] for r in summary.runs] == [0, 1, 2]
        acc = [r["accuracy"] for r in summary.runs]
        assert summary.aggregate["accuracy"]["mean"] == pytest.approx(np.mean(acc))
        assert summary.aggregate["accuracy"]["std"] == pytest.approx(np.std(acc, ddof=1))

    def test_full_gate_equals_random_gate_at_rate_one(self):
        a = run(small_config(seeds=[4]))
        b = run(small_config(seeds=[4], gate="random:1.0"))
        assert a.without_wall_time()["runs"] == b.without_wall_time()["runs"]
        assert a.aggregate == b.aggregate

    def test_restart_period_variants(self):
        r_alpha = run(small_config()).runs[0]
        assert r_alpha["restart_period"] == round(700 ** 0.7)
        r_const = run(small_config(alpha=None, restart_period=25)).runs[0]
        assert r_const["restart_period"] == 25
        assert r_const["bound_report"]["regret_variant"] == "constant_period"

    def test_reproducible_summary_bytes(self, tmp_path):
        path = tmp_path / "summary.json"
        texts = []
        for _ in range(2):
            run(small_config(seeds=[0, 5], summary_path=str(path)))
            d = json.loads(path.read_bytes())
            stripped = RunSummary.from_dict(d).without_wall_time()
            texts.append(json.dumps(stripped, indent=2, sort_keys=True).encode())
        assert texts[0] == texts[1]

    def test_summary_round_trip(self, tmp_path):
        path = tmp_path / "summary.json"
        summary = run(small_config(summary_path=str(path)))
        back = read_summary(path)
        assert back == summary
        assert json.loads(path.read_text())["schema_version"] == 1
        report = back.runs[0]["bound_report"]
        assert BoundReport.from_dict(report).as_dict() == report

    def test_jsonl_lines_match_processed(self, tmp_path):
        summary = run(small_config(seeds=[0, 1], log_dir=str(tmp_path)))
        for r in summary.runs:
            lines = (tmp_path / f"steps_seed{r['seed']}.jsonl").read_text().splitlines()
            assert len(lines) == r["processed"] == 700
            row = json.loads(lines[0])
            assert {"schema_version", "t", "predicted", "label", "labeled", "correct",
                    "restart_fired", "drift", "p"} <= set(row)
        restarts = [json.loads(l) for l in lines if json.loads(l)["restart_fired"]]
        assert all("batch_max" in row for row in restarts)

    def test_bound_inequalities_hold_per_run(self):
        for cfg in (small_config(seeds=[0, 1]), small_config(gate="random:0.3"),
                    small_config(advice_mode="confidence", principle="random_sampling")):
            for r in run(cfg).runs:
                b = r["bound_report"]
                assert b["ultimate_bound"] >= b["exp4_ultimate_bound"]
                assert b["regret_rexp4"] >= b["regret_exp4"]
                ref = r["reference_bound_report"]
                assert b["ultimate_bound"] <= ref["ultimate_bound"]

    def test_workers_match_serial(self):
        serial = run(small_config(seeds=[0, 1]))
        parallel = run(small_config(seeds=[0, 1], workers=2))
        assert serial.without_wall_time()["runs"] == parallel.without_wall_time()["runs"]
        assert serial.aggregate == parallel.aggregate
        assert serial.config_digest == parallel.config_digest

    def test_check_run_names_seed(self):
        good = BoundReport(0.5, 0.5, 0.2, 0.1, 0.3, 0.4, [0.4], 0.5, 10, 2, 1)
        better = replace(good, ultimate_bound=0.6, lower_bound=0.4)
        check_run(good, better, voting=True, full_labels=False, seed=1)
        with pytest.raises(BoundViolation, match=r"partial-label.*seed=9"):
            check_run(better, good, voting=True, full_labels=False, seed=9)

    def test_learner_seeds_distinct(self):
        seeds = {learner_seed(0, n) for n in range(10)} | {learner_seed(1, n) for n in range(10)}
        assert len(seeds) == 20


class TestSweep:
    def test_grid_rows(self, tmp_path):
        base = small_config(seeds=[0, 1])
        points = sweep(base, [0.5, 1.0], [2, 3], csv_path=tmp_path / "grid.csv")
        with open(tmp_path / "grid.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 2 * 2
        assert set(rows[0]) == {"alpha", "N", "seed", "accuracy", "ultimate_bound", "regret", "lower_bound"}
        assert {(r["alpha"], r["N"]) for r in rows} == {("0.5", "2"), ("0.5", "3"), ("1.0", "2"), ("1.0", "3")}
        assert len(points) == 4

    def test_one_by_one_reduces_to_run(self):
        base = small_config()
        (point,) = sweep(base, [0.6], [3])
        direct = run(replace(base, alpha=0.6))
        assert point.summary.without_wall_time()["runs"] == direct.without_wall_time()["runs"]

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            sweep(small_config(), [], [2])


class TestBanditSim:
    def test_single_expert_has_zero_regret(self):
        report = bandit_sim(BanditSimSpec(num_experts=1, horizon=2000, restart_period=500, seeds=[0, 1]))
        assert report["gamma"] == 0.0
        assert report["max_batch_regret"] == 0.0

    def test_perfect_expert_deterministic_rewards(self):
        spec = BanditSimSpec(horizon=4000, restart_period=1000, arm_means=[[1.0, 0.0, 0.0]], seeds=[0, 1, 2])
        report = bandit_sim(spec)
        bound = per_batch_regret_bound(1000, 3, 10)
        assert report["per_batch_bound"] == pytest.approx(bound)
        for r in report["seeds"]:
            assert len(r["batch_regret"]) == 4
            # On deterministic rewards the best expert's batch total is the batch length.
            assert r["batch_gmax"] == [1000.0] * 4
            assert all(g <= bound for g in r["batch_regret"])

    def test_mean_regret_below_bound(self):
        report = bandit_sim(BanditSimSpec(horizon=3000, restart_period=1000, seeds=list(range(5))))
        assert report["mean_batch_regret"] <= report["per_batch_bound"]

    def test_piecewise_means(self):
        spec = BanditSimSpec(horizon=2000, restart_period=500, seeds=[0],
                             arm_means=[[0.9, 0.1, 0.1], [0.1, 0.1, 0.9]])
        report = bandit_sim(spec)
        assert len(report["seeds"][0]["batch_regret"]) == 4

    def test_deterministic(self):
        spec = BanditSimSpec(horizon=1000, restart_period=200, seeds=[3])
        assert bandit_sim(spec) == bandit_sim(spec)
