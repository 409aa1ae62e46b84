"""Command-line entry points.

Subcommands: synth, train, eval, ablate, analyze (clusters | export-df |
mmd-report). Configuration comes from TOML files plus repeatable
``--set key=value`` overrides.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .ablation import run_ablation
from .analysis import analyze_clusters, eval_checkpoint, export_domain_features, mmd_report
from .config import (
    AblationConfig,
    VARIANTS,
    load_dataset_spec,
    load_hyper_params,
)
from .dataset import load_dataset, save_dataset
from .synth import generate_dataset, generate_heldout
from .training import train


def _cmd_synth(args) -> int:
    spec = load_dataset_spec(args.spec, args.set)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
        spec.validate()
    train_ds = generate_dataset(spec)
    train_dir = os.path.join(args.out, "train")
    save_dataset(train_ds, train_dir)
    print(f"wrote {train_ds.n} training samples to {train_dir}")
    if spec.held_out_domain_styles:
        heldout = generate_heldout(spec)
        heldout_dir = os.path.join(args.out, "heldout")
        save_dataset(heldout, heldout_dir)
        print(f"wrote {heldout.n} held-out samples to {heldout_dir}")
    return 0


def _cmd_train(args) -> int:
    hyper = load_hyper_params(args.config, args.set)
    if args.data:
        data = load_dataset(args.data)
    else:
        if not args.spec:
            print("error: train needs --spec or --data", file=sys.stderr)
            return 2
        data = generate_dataset(load_dataset_spec(args.spec))
    result = train(data, hyper, out_dir=args.out, variant=args.variant)
    print(f"trained variant={args.variant} epochs={hyper.epochs} -> {args.out}")
    print(f"validation EER threshold: {result.eer_threshold:.6f}")
    return 0


def _cmd_eval(args) -> int:
    out_json = args.out or "metrics.json"
    out_roc = args.roc or os.path.join(os.path.dirname(out_json) or ".", "roc.csv")
    report = eval_checkpoint(
        args.ckpt, args.data, out_json=out_json, out_roc=out_roc, threshold=args.threshold
    )
    print(json.dumps({"auc": report.auc, "hter": report.hter, "eer_threshold": report.eer_threshold}))
    return 0


def _cmd_ablate(args) -> int:
    spec = load_dataset_spec(args.spec, args.set)
    hyper = load_hyper_params(args.config, args.set)
    config = AblationConfig(variant=args.variant, k_override=args.k)
    seeds = args.seeds if args.seeds else [hyper.seed]
    rows = []
    for seed in seeds:
        report, _ = run_ablation(config, spec.with_seed(spec.seed), hyper.replace(seed=seed), args.out)
        rows.append((seed, report.hter, report.auc))
        print(f"variant={args.variant} seed={seed} hter={report.hter:.4f} auc={report.auc:.4f}")
    if len(rows) > 1:
        hters = [r[1] for r in rows]
        aucs = [r[2] for r in rows]
        print(
            f"mean hter={np.mean(hters):.4f} (std {np.std(hters):.4f}) "
            f"mean auc={np.mean(aucs):.4f}"
        )
    return 0


def _cmd_analyze(args) -> int:
    if args.analysis == "clusters":
        summary = analyze_clusters(args.ckpt, args.data, args.out)
        print(json.dumps(summary))
    elif args.analysis == "export-df":
        export_domain_features(args.ckpt, args.data, args.out)
        print(f"wrote {args.out}")
    else:  # mmd-report
        report = mmd_report(args.ckpt, args.data, args.out)
        print(json.dumps({k: (v["mean_offdiag"] if v else None) for k, v in report.items()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentdg",
        description="Latent-domain discovery + episodic meta-learning for live/spoof classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a dataset directory from a spec file")
    p.add_argument("--spec", required=True, help="dataset spec TOML")
    p.add_argument("--out", required=True, help="output directory (train/ and heldout/ inside)")
    p.add_argument("--seed", type=int, default=None, help="override the spec seed")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--spec", help="dataset spec TOML (generates the data)")
    p.add_argument("--data", help="existing dataset directory (alternative to --spec)")
    p.add_argument("--config", help="hyperparameter TOML")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--variant", default="full", choices=VARIANTS)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset directory")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="metrics JSON path (default metrics.json)")
    p.add_argument("--roc", help="ROC CSV path (default roc.csv next to metrics)")
    p.add_argument("--threshold", type=float, default=None, help="override the stored threshold")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ablate", help="train + evaluate one ablation variant")
    p.add_argument("--spec", required=True)
    p.add_argument("--config", help="hyperparameter TOML")
    p.add_argument("--variant", required=True, choices=VARIANTS)
    p.add_argument("--out", required=True, help="base output directory")
    p.add_argument("--k", type=int, default=None, help="override the domain count")
    p.add_argument("--seeds", type=int, nargs="*", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("analyze", help="checkpoint analyses")
    p.add_argument("analysis", choices=("clusters", "export-df", "mmd-report"))
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
