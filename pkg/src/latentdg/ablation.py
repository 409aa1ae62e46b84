"""Ablation runner: train one variant, evaluate on the held-out domain
split, persist metrics.

The evaluation threshold always comes from the run's own source-domain
validation split (stored in the final checkpoint), so held-out numbers are
leak-free.
"""

from __future__ import annotations

import os

from .config import AblationConfig, DatasetSpec, HyperParams
from .dataset import Dataset
from .metrics import MetricsReport, evaluate_scores, write_roc_csv
from .synth import generate_dataset, generate_heldout
from .training import TrainResult, score_images, train


def evaluate_on(result: TrainResult, heldout: Dataset) -> MetricsReport:
    scores = score_images(result.model, heldout.images)
    return evaluate_scores(
        scores,
        heldout.labels,
        result.eer_threshold,
        domains=heldout.latent_domain_gt,
    )


def run_ablation(
    config: AblationConfig,
    spec: DatasetSpec,
    hyper: HyperParams,
    out_dir: str | None = None,
) -> tuple[MetricsReport, TrainResult]:
    """Train ``config.variant`` on the spec's training mixture and score the
    held-out domains. Returns (report, train result)."""
    config.validate()
    if config.k_override is not None:
        hyper = hyper.replace(num_domains=config.k_override)

    train_ds = generate_dataset(spec)
    heldout = generate_heldout(spec)

    run_dir = None
    if out_dir is not None:
        run_dir = os.path.join(out_dir, f"run_{config.variant}_seed{hyper.seed}")
        os.makedirs(run_dir, exist_ok=True)

    result = train(train_ds, hyper, out_dir=run_dir, variant=config.variant)
    report = evaluate_on(result, heldout)

    if run_dir is not None:
        with open(os.path.join(run_dir, "metrics.json"), "w") as f:
            f.write(report.to_json())
        write_roc_csv(os.path.join(run_dir, "roc.csv"), report.roc)
    return report, result
