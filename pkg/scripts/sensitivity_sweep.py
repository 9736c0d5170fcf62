"""Grid over the restart exponent and the ensemble size; writes a tidy CSV and a pivot table."""
from __future__ import annotations

import argparse
from collections import defaultdict
from pathlib import Path

import numpy as np

from bandit_ensemble.config import RunConfig
from bandit_ensemble.harness import sweep, sweep_rows, write_sweep_csv


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--stream", default="label_flip")
    p.add_argument("--length", type=int, default=20_000)
    p.add_argument("--alphas", type=float, nargs="+", default=[0.4, 0.55, 0.7, 0.85, 1.0])
    p.add_argument("--ns", type=int, nargs="+", default=[2, 5, 10, 20])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results/sensitivity")
    args = p.parse_args()

    base = RunConfig.from_dict({
        "stream": {"kind": args.stream, "length": args.length},
        "seeds": args.seeds,
        "workers": args.workers,
    })
    points = sweep(base, args.alphas, args.ns)
    out = Path(args.out)
    count = write_sweep_csv(points, out / "sweep.csv")
    cells = defaultdict(list)
    for row in sweep_rows(points):
        cells[(row["alpha"], row["N"])].append(row["accuracy"])
    print("mean accuracy   " + "".join(f"N={n:<7d}" for n in args.ns))
    for a in args.alphas:
        print(f"alpha={a:<9.2f}" + "".join(f"{np.mean(cells[(a, n)]):<9.4f}" for n in args.ns))
    print(f"{count} rows written to {out / 'sweep.csv'}")


if __name__ == "__main__":
    main()
