"""Command-line entry point: run experiments, dump viz datasets, generate problems."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from .diffusion import DiffusionSampler
from .domains import DOMAINS, MAIN_DOMAIN_NAMES, gen_problem, problem_dumps
from .harness import (
    ExperimentConfig,
    dump_viz,
    run_ablation,
    run_lifelong,
    run_offline,
    run_replay_vs_retrain,
    train_viz_model,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

VIZ_KINDS = {"pushblock": "PushBlock", "lcontainer": "LContainer"}
HORIZONS = {"one_step": "OneStep", "n_step": "NStep"}


def default_out_root() -> Path:
    return Path(os.environ.get("TAMP2D_OUT", "runs"))


class ConfigError(Exception):
    pass


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    doc: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            doc = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"config does not parse: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.from_dict(doc)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def prepare_out_dir(out: Path, force: bool) -> None:
    if out.exists() and any(out.iterdir()):
        if not force:
            raise ConfigError(f"output directory {out} is not empty (use --force)")
    out.mkdir(parents=True, exist_ok=True)


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v)


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def cmd_run(args: argparse.Namespace) -> int:
    overrides: dict = {
        "mode": args.mode,
        "seed": args.seed,
        "trials": args.trials,
        "m_test": args.m_test,
        "tasks_per_domain": args.tasks_per_domain,
        "update_interval": args.update_interval,
        "sample_budget": args.budget,
        "max_samples_per_step": args.max_samples_per_step,
        "epochs": args.epochs,
        "scheme": args.scheme,
        "n_jobs": args.n_jobs,
        "rand_table_draws": args.rand_table_draws,
        "replay_adapt_epochs": args.replay_adapt_epochs,
    }
    if args.n_train is not None:
        overrides["n_train"] = _parse_int_list(args.n_train)
    if args.domains is not None:
        overrides["domains"] = _parse_str_list(args.domains)
    if args.methods is not None:
        overrides["methods"] = _parse_str_list(args.methods)
    if args.strategies is not None:
        overrides["strategies"] = _parse_str_list(args.strategies)
    try:
        cfg = load_config(args.config, overrides)
        out = Path(args.out) if args.out else default_out_root() / cfg.mode
        prepare_out_dir(out, args.force)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        runner = {
            "offline": run_offline,
            "lifelong": run_lifelong,
            "ablation": run_ablation,
            "replay_vs_retrain": run_replay_vs_retrain,
        }[cfg.mode]
        runner(cfg, out)
    except Exception as e:  # noqa: BLE001 - surface any runtime failure with a diagnostic
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"run complete: {out}")
    return EXIT_OK


def cmd_viz(args: argparse.Namespace) -> int:
    if args.kind not in VIZ_KINDS:
        print(f"error: unknown viz kind {args.kind}", file=sys.stderr)
        return EXIT_CONFIG
    kind = VIZ_KINDS[args.kind]
    out = Path(args.out) if args.out else default_out_root() / f"viz_{args.kind}"
    out.mkdir(parents=True, exist_ok=True)
    cfg = ExperimentConfig(
        mode="offline", seed=args.seed, epochs=args.epochs, trials=1, domains=("Books",)
    )
    try:
        for horizon in ("OneStep", "NStep"):
            ckpt = out / f"model_{args.kind}_{horizon.lower()}.ckpt"
            if ckpt.exists():
                model, _ = DiffusionSampler.load(ckpt)
                from .domains import gen_viz_dataset

                dataset = gen_viz_dataset(kind, horizon, args.n_data, args.seed)
            else:
                model, dataset = train_viz_model(kind, horizon, cfg, n_data=args.n_data, seed=args.seed)
                model.save(ckpt, extra_meta={"viz_kind": kind, "horizon": horizon})
            dump_viz(kind, horizon, model, args.n_samples, out, dataset=dataset, seed=args.seed)
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"viz dumped: {out}")
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.domain not in DOMAINS:
        print(
            f"error: unknown domain {args.domain} (choose from {', '.join(MAIN_DOMAIN_NAMES)})",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    out = Path(args.out)
    if out.exists() and not args.force:
        print(f"error: {out} exists (use --force)", file=sys.stderr)
        return EXIT_CONFIG
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(out, "w") as fh:
            for i in range(args.count):
                problem = gen_problem(DOMAINS[args.domain], args.seed + i)
                fh.write(problem_dumps(problem) + "\n")
    except Exception as e:  # noqa: BLE001
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {args.count} problems to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tamp2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file plus overrides")
    run_p.add_argument("--config", default=None)
    run_p.add_argument("--mode", choices=["offline", "lifelong", "ablation", "replay_vs_retrain"])
    run_p.add_argument("--out", default=None)
    run_p.add_argument("--force", action="store_true")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--trials", type=int)
    run_p.add_argument("--n-train", dest="n_train")
    run_p.add_argument("--m-test", dest="m_test", type=int)
    run_p.add_argument("--tasks-per-domain", dest="tasks_per_domain", type=int)
    run_p.add_argument("--update-interval", dest="update_interval", type=int)
    run_p.add_argument("--budget", type=int)
    run_p.add_argument("--max-samples-per-step", dest="max_samples_per_step", type=int)
    run_p.add_argument("--epochs", type=int)
    run_p.add_argument("--replay-adapt-epochs", dest="replay_adapt_epochs", type=int)
    run_p.add_argument("--scheme", choices=["finetune", "retrain", "replay"])
    run_p.add_argument("--domains")
    run_p.add_argument("--methods")
    run_p.add_argument("--strategies")
    run_p.add_argument("--n-jobs", dest="n_jobs", type=int)
    run_p.add_argument("--rand-table-draws", dest="rand_table_draws", type=int)
    run_p.set_defaults(fn=cmd_run)

    viz_p = sub.add_parser("viz", help="train viz samplers and dump sample clouds")
    viz_p.add_argument("--kind", required=True, choices=sorted(VIZ_KINDS))
    viz_p.add_argument("--out", default=None)
    viz_p.add_argument("--seed", type=int, default=0)
    viz_p.add_argument("--epochs", type=int, default=1000)
    viz_p.add_argument("--n-data", dest="n_data", type=int, default=2000)
    viz_p.add_argument("--n-samples", dest="n_samples", type=int, default=1000)
    viz_p.set_defaults(fn=cmd_viz)

    gen_p = sub.add_parser("gen", help="generate serialized problems")
    gen_p.add_argument("--domain", required=True)
    gen_p.add_argument("--count", type=int, required=True)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--out", required=True)
    gen_p.add_argument("--force", action="store_true")
    gen_p.set_defaults(fn=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
