"""Accuracy and ultimate-bound curves over the stream, one CSV row per closed batch.

Example:
    python scripts/bound_curves.py --gate random:0.2 --seeds 0 1 2 --out results/curves
"""
from __future__ import annotations

import argparse
import csv
import json
from pathlib import Path

from bandit_ensemble.config import GateConfig, RunConfig
from bandit_ensemble.harness import run


def curve_rows(log_path: Path, seed: int):
    correct = 0
    bound_total = 0.0
    rows = []
    with log_path.open() as fh:
        for line in fh:
            step = json.loads(line)
            correct += step["correct"]
            if "batch_max" in step:
                bound_total += step["batch_max"]
                t = step["t"] + 1
                rows.append({"seed": seed, "t": t, "accuracy": correct / t, "ultimate_bound": bound_total / t})
    return rows


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--stream", default="label_flip")
    p.add_argument("--length", type=int, default=20_000)
    p.add_argument("--experts", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--gate", default="full")
    p.add_argument("--principle", default="random_sampling")
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--out", default="results/curves")
    args = p.parse_args()

    out = Path(args.out)
    cfg = RunConfig.from_dict({
        "stream": {"kind": args.stream, "length": args.length},
        "num_experts": args.experts,
        "alpha": args.alpha,
        "gate": GateConfig.parse(args.gate).__dict__,
        "principle": args.principle,
        "seeds": args.seeds,
        "log_dir": str(out / "logs"),
        "summary_path": str(out / "summary.json"),
    })
    summary = run(cfg)
    rows = []
    for r in summary.runs:
        rows += curve_rows(out / "logs" / f"steps_seed{r['seed']}.jsonl", r["seed"])
    with (out / "curves.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["seed", "t", "accuracy", "ultimate_bound"])
        writer.writeheader()
        writer.writerows(rows)
    agg = summary.aggregate
    print(f"accuracy {agg['accuracy']['mean']:.4f}  ultimate bound {agg['ultimate_bound']['mean']:.4f}  "
          f"lower bound {agg['lower_bound']['mean']:.4f}  best base {agg['best_base_accuracy']['mean']:.4f}")
    print(f"{len(rows)} curve points written to {out / 'curves.csv'}")


if __name__ == "__main__":
    main()
