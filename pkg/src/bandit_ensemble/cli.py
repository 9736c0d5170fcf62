"""Command-line entry point: ``bandit-ensemble {run,sweep,bandit-sim,generate}``.

A JSON config file supplies the base settings; flags override single fields.
Outputs land under ``--out`` or, failing that, ``$BANDIT_ENSEMBLE_OUT``
(default ``./results``).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import BanditSimSpec, ConfigError, GateConfig, RunConfig
from .harness import bandit_sim, default_output_dir, run, sweep, write_sweep_csv
from .streams import KINDS, StreamSpec, export_csv, generate


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _load_json(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def build_run_config(args: argparse.Namespace) -> RunConfig:
    raw = _load_json(args.config)
    if args.stream is not None and raw.get("stream", {}).get("kind") != args.stream:
        # A different stream kind invalidates the file's stream parameters.
        raw["stream"] = {"kind": args.stream}
    if args.length is not None:
        raw.setdefault("stream", {"kind": "sea"})["length"] = args.length
    raw.setdefault("stream", {"kind": "sea"})
    if args.alpha is not None:
        raw["alpha"] = args.alpha
        raw["restart_period"] = None
    if args.restart_period is not None:
        raw["restart_period"] = args.restart_period
        raw["alpha"] = None
    if args.experts is not None:
        raw["num_experts"] = args.experts
    if args.gate is not None:
        raw["gate"] = GateConfig.parse(args.gate).__dict__
    if args.principle is not None:
        raw["principle"] = args.principle
    if args.advice_mode is not None:
        raw["advice_mode"] = args.advice_mode
    if args.seed:
        raw["seeds"] = args.seed
    if args.workers is not None:
        raw["workers"] = args.workers
    return RunConfig.from_dict(raw)


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out) if args.out else default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    cfg = build_run_config(args)
    cfg = replace(cfg, log_dir=str(out / "logs"), summary_path=str(out / "summary.json"))
    summary = run(cfg)
    agg = summary.aggregate
    print(f"accuracy {agg['accuracy']['mean']:.4f} +/- {agg['accuracy']['std']:.4f} "
          f"over {len(summary.runs)} seed(s)")
    if "ultimate_bound" in agg:
        print(f"ultimate_bound {agg['ultimate_bound']['mean']:.4f}  "
              f"regret {agg['regret_rexp4']['mean']:.4f}")
    print(f"summary written to {cfg.summary_path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    base = build_run_config(args)
    points = sweep(base, _float_list(args.alphas), _int_list(args.ns))
    path = out / "sweep.csv"
    rows = write_sweep_csv(points, path)
    print(f"{rows} rows written to {path}")
    return 0


def cmd_bandit_sim(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    raw = _load_json(args.config)
    if args.experts is not None:
        raw["num_experts"] = args.experts
    if args.alpha is not None:
        raw["alpha"] = args.alpha
        raw["restart_period"] = None
    if args.restart_period is not None:
        raw["restart_period"] = args.restart_period
        raw["alpha"] = None
    if args.principle is not None:
        raw["principle"] = args.principle
    if args.seed:
        raw["seeds"] = args.seed
    report = bandit_sim(BanditSimSpec.from_dict(raw))
    path = out / "bandit_sim.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"mean per-batch regret {report['mean_batch_regret']:.2f} "
          f"vs bound {report['per_batch_bound']:.2f}; report written to {path}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    raw = _load_json(args.config)
    raw = raw.get("stream", raw)
    if args.stream is not None:
        raw = {**raw, "kind": args.stream}
    if args.length is not None:
        raw["length"] = args.length
    if args.seed:
        raw["seed"] = args.seed[0]
    spec = StreamSpec.from_dict(raw)
    path = out / f"{spec.kind}.csv"
    n = export_csv(generate(spec), path)
    print(f"{n} samples written to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bandit-ensemble", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, action="append", default=[],
                       help="run seed; repeat for several")
        p.add_argument("--out", help="output directory")

    def model_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--stream", choices=list(KINDS))
        p.add_argument("--length", type=int, help="stream length")
        p.add_argument("--alpha", type=float, help="restart-period exponent")
        p.add_argument("--restart-period", type=int, help="constant restart period")
        p.add_argument("--experts", type=int, help="number of base learners")
        p.add_argument("--gate", help="full | random:RATE | uncertainty_margin:RATE[:MARGIN]")
        p.add_argument("--principle", choices=["random_sampling", "maximum_index"])
        p.add_argument("--advice-mode", choices=["voting", "confidence"])
        p.add_argument("--workers", type=int)

    p = sub.add_parser("run", help="run the ensemble over one stream for each seed")
    common(p)
    model_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid over alpha and expert count")
    common(p)
    model_flags(p)
    p.add_argument("--alphas", default="0.4,0.7,1.0")
    p.add_argument("--ns", default="5,10")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bandit-sim", help="synthetic bandit regret simulation")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--restart-period", type=int)
    p.add_argument("--experts", type=int)
    p.add_argument("--principle", choices=["random_sampling", "maximum_index"])
    p.set_defaults(func=cmd_bandit_sim)

    p = sub.add_parser("generate", help="write a synthetic stream to CSV")
    common(p)
    p.add_argument("--stream", choices=[k for k in KINDS if k != "csv"])
    p.add_argument("--length", type=int)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
