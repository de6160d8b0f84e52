"""Command line entry point: ``compfs run | ablate | score``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .datasets import read_groups
from .experiment import (ExperimentConfig, load_config, make_config, run_ablation,
                         run_experiment, render_ablation)
from .metrics import g_sim, tpr_fdr

HYPER = {  # flag -> (type, help)
    "epochs": (int, "training epochs"),
    "batch-size": (int, "minibatch size"),
    "lr": (float, "Adam learning rate"),
    "lr-decay": (float, "per-epoch learning-rate factor"),
    "beta": (float, "sparsity weight (raw, before sqrt(p) scaling)"),
    "beta-e": (float, "ensemble loss weight"),
    "beta-r": (float, "overlap weight (raw, before sqrt(p) scaling)"),
    "hidden": (int, "hidden width of the group encoders"),
    "n-groups": (int, "number of learners"),
    "tau": (float, "gate temperature"),
    "threshold": (float, "evaluation threshold on selection probabilities"),
    "gate-param": (str, "trainable gate variable: prob (pi itself) or logit"),
    "reg": (float, "LASSO L1 coefficient"),
    "n-train": (int, "training samples"),
    "n-test": (int, "test samples"),
    "p": (int, "synthetic feature count"),
    "workers": (int, "parallel worker processes"),
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat TOML config file")
    p.add_argument("--task", help="syn1..syn4, chem1..chem3 or file:<csv>")
    p.add_argument("--model", help="compfs, compfs1, oracle or lasso")
    p.add_argument("--preset", help='published hyperparameter row, e.g. "syn1/compfs5"')
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int, help="base seed; repeat r uses seed + r")
    p.add_argument("--truth", help="ground-truth groups file for file: tasks")
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    for flag, (typ, text) in HYPER.items():
        p.add_argument(f"--{flag}", type=typ, help=text)


def _config_from(args) -> ExperimentConfig:
    overrides = {k.replace("-", "_"): getattr(args, k.replace("-", "_")) for k in HYPER}
    overrides.update(repeats=args.repeats, seed=args.seed, truth=args.truth)
    if args.config:
        return load_config(args.config, task=args.task, model=args.model, preset=args.preset,
                           **overrides)
    if not args.task:
        raise ValueError("--task or --config is required")
    return make_config(task=args.task, model=args.model or "compfs", preset=args.preset,
                       **overrides)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compfs", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="repeated train + evaluate on one task/model")
    _add_common(run)

    abl = sub.add_parser("ablate", help="group-count grid over learners x beta_r / beta")
    _add_common(abl)
    abl.add_argument("--learners", type=_ints, default=[2, 5, 8])
    abl.add_argument("--beta-r-grid", type=_floats, default=[])
    abl.add_argument("--beta-grid", type=_floats, default=[])

    score = sub.add_parser("score", help="compare a groups file with a truth file")
    score.add_argument("groups", type=Path)
    score.add_argument("truth", type=Path)
    score.add_argument("--json", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)

    if args.command == "score":
        try:
            cand, truth = read_groups(args.groups), read_groups(args.truth)
            tpr, fdr = tpr_fdr(truth, cand)
            out = {"tpr": tpr, "fdr": fdr, "g_sim": g_sim(truth, cand), "n_groups": len(cand)}
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        if args.json:
            print(json.dumps(out))
        else:
            print(f"TPR {100 * tpr:.1f}  FDR {100 * fdr:.1f}  Gsim {out['g_sim']:.3f}  "
                  f"groups {out['n_groups']}")
        return 0

    try:
        cfg = _config_from(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        probe = args.out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: cannot write to {args.out}: {exc}", file=sys.stderr)
        return 3

    if args.command == "run":
        report = run_experiment(cfg, args.out)
        sys.stdout.write(report.render())
        return 1 if report.partial else 0

    if not (args.beta_r_grid or args.beta_grid):
        parser.error("ablate needs --beta-r-grid and/or --beta-grid")
    result = run_ablation(cfg, args.learners, args.beta_r_grid, args.beta_grid, out_dir=args.out)
    sys.stdout.write(render_ablation(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
