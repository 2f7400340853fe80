"""Command line entry point: ``coopplan <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..llm.backends import BackendSpec
from ..utility import (
    DegenerateHoldout,
    TrainConfig,
    collect_exploratory_dataset,
    evaluate_utility,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    train_utility,
)
from ..world.tasks import suite as get_suite
from .benchmark import run_ablation, run_benchmark
from .config import ConfigError, RunConfig, load_config
from .records import read_record
from .replay import replay
from .report import ablation_table, metrics_table

log = logging.getLogger("coopplan")


def _common(suppress: bool = False) -> argparse.ArgumentParser:
    # subcommands repeat the global flags; SUPPRESS keeps a flag given before
    # the subcommand from being reset by the subparser's default
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="run configuration (YAML)", **kw)
    p.add_argument("--seed", type=int, help="single seed; overrides the config's seed list", **kw)
    p.add_argument("--out", help="output file or directory", **kw)
    p.add_argument("--backend", choices=["scripted", "http"], help="completion backend kind", **kw)
    p.add_argument("-v", "--verbose", action="store_true", **kw)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    parser = argparse.ArgumentParser(prog="coopplan", description=__doc__, parents=[_common()])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", parents=[common], help="gather random-exploration cost data")
    p.add_argument("--suite", default="household")
    p.add_argument("--episodes", type=int, default=2, help="episodes per task")
    p.add_argument("--max-steps", type=int, help="cap on macro-steps per exploration episode")

    p = sub.add_parser("train", parents=[common], help="fit the cost model")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--weight-decay", type=float)

    p = sub.add_parser("eval-utility", parents=[common], help="score a cost model on the holdout split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    for name, text in (("run", "run a benchmark suite"), ("ablate", "run the four ablation variants")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--suite")
        p.add_argument("--seeds", help="comma-separated seeds")
        p.add_argument("--n-agents", type=int)
        p.add_argument("--utility", help="cost model file or 'oracle'")
        p.add_argument("--no-utility", action="store_true")
        p.add_argument("--prompted-cost", action="store_true")
        p.add_argument("--no-reflection", action="store_true")
        p.add_argument("--digest", choices=["full", "hash"])
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("replay", parents=[common], help="check stored episode records")
    p.add_argument("records", nargs="+")
    return parser


def _run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    seeds = None
    if getattr(args, "seeds", None):
        seeds = tuple(int(s) for s in args.seeds.split(","))
    if args.seed is not None:
        seeds = (args.seed,)
    flags = config.flags
    if getattr(args, "no_utility", False) or getattr(args, "prompted_cost", False):
        flags = replace(flags, use_utility=False, prompted_cost_estimation=getattr(args, "prompted_cost", False))
    if getattr(args, "no_reflection", False):
        flags = replace(flags, use_reflection=False)
    backend = config.backend
    if args.backend:
        try:
            backend = replace(backend, kind=args.backend) if args.backend == "http" else BackendSpec("scripted")
        except ValueError as exc:
            raise ConfigError(f"backend: {exc}") from exc
    return config.with_overrides(
        suite=getattr(args, "suite", None), seeds=seeds, n_agents=getattr(args, "n_agents", None),
        utility=getattr(args, "utility", None), digest=getattr(args, "digest", None), out=args.out,
        flags=flags, backend=backend,
    )


def cmd_collect(args) -> int:
    ds = collect_exploratory_dataset(get_suite(args.suite), args.episodes, args.seed or 0, max_steps=args.max_steps)
    out = Path(args.out or "dataset.jsonl")
    save_dataset(ds, out)
    print(f"samples\t{len(ds.samples)}")
    print(f"episodes\t{len(ds.episode_ids)}")
    print(f"train_episodes\t{','.join(map(str, ds.train_episodes))}")
    print(f"holdout_episodes\t{','.join(map(str, ds.holdout_episodes))}")
    print(f"written\t{out}")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    overrides = {"epochs": args.epochs, "learning_rate": args.lr, "batch_size": args.batch_size,
                 "weight_decay": args.weight_decay, "seed": args.seed}
    config = replace(TrainConfig(), **{k: v for k, v in overrides.items() if v is not None})
    model = train_utility(ds, config)
    out = Path(args.out or "utility_model.json")
    save_model(model, out)
    for epoch, mse in enumerate(model.meta["train_mse_per_epoch"], 1):
        print(f"epoch\t{epoch}\ttrain_mse\t{mse:.6f}")
    if "holdout_mse" in model.meta:
        print(f"holdout_mse\t{model.meta['holdout_mse']:.6f}")
    print(f"written\t{out}")
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    ds = load_dataset(args.data)
    if not ds.holdout:
        print(f"{args.data}: no holdout episodes to evaluate", file=sys.stderr)
        return 1
    try:
        ev = evaluate_utility(model, ds.holdout)
    except DegenerateHoldout as exc:
        print(f"mse\t{exc.mse:.6f}\nmae\t{exc.mae:.6f}\nrank_correlation\tundefined")
        return 0
    for k, v in ev.to_dict().items():
        print(f"{k}\t{v}")
    return 0


def cmd_run(args) -> int:
    config = _run_config(args)
    report = run_benchmark(config, workers=args.workers)
    print(metrics_table(report))
    print(f"report\t{Path(config.out) / 'report.json'}")
    return 0


def cmd_ablate(args) -> int:
    config = _run_config(args)
    report = run_ablation(config, workers=args.workers)
    print(ablation_table(report))
    print(f"report\t{Path(config.out) / 'ablation.json'}")
    return 0


def cmd_replay(args) -> int:
    failed = 0
    for path in args.records:
        verdict = replay(read_record(path))
        failed += not verdict.passed
        print(f"{path}\t{verdict}")
    return 1 if failed else 0


COMMANDS = {"collect": cmd_collect, "train": cmd_train, "eval-utility": cmd_eval, "run": cmd_run,
            "ablate": cmd_ablate, "replay": cmd_replay}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
