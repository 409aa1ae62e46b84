"""Checkpoint-level analyses: evaluation, domain-feature export for
external embedding tools, cluster re-derivation, and inter-domain
distribution reports.
"""

from __future__ import annotations

import json
import logging
import os

import numpy as np

from .clustering import kmeans, kuhn_munkres, nmi
from .dataset import Dataset, load_dataset
from .domain_features import EpochNormalizer, compute_domain_features
from .metrics import MetricsReport, evaluate_scores, inter_domain_mmd, write_roc_csv
from .model import load_checkpoint
from .training import score_images

logger = logging.getLogger(__name__)


def _load(ckpt_path: str, data_dir: str):
    model, header = load_checkpoint(ckpt_path)
    dataset = load_dataset(data_dir)
    return model, header, dataset


def _stored_pseudo(header: dict, n: int) -> np.ndarray:
    """Pseudo labels from the checkpoint, scattered onto dataset rows
    (0 where the checkpoint holds no label, e.g. validation rows)."""
    extras = header.get("extras") or {}
    labels = extras.get("pseudo_domains") or []
    idx = extras.get("train_indices") or []
    out = np.zeros(n, dtype=np.int64)
    if labels and idx and max(idx) < n and len(labels) == len(idx):
        out[np.asarray(idx, dtype=np.int64)] = np.asarray(labels, dtype=np.int64)
    return out


def _checkpoint_df(model, header: dict, dataset: Dataset) -> np.ndarray:
    extras = header.get("extras") or {}
    select_half = extras.get("variant") != "wo_select"
    return compute_domain_features(model.extractor, dataset.images, select_half=select_half)


def eval_checkpoint(
    ckpt_path: str,
    data_dir: str,
    out_json: str | None = None,
    out_roc: str | None = None,
    threshold: float | None = None,
) -> MetricsReport:
    """Score a dataset with a checkpoint and write metrics.json / roc.csv.

    The decision threshold defaults to the validation-EER threshold stored
    in the checkpoint."""
    model, header, dataset = _load(ckpt_path, data_dir)
    if threshold is None:
        threshold = (header.get("extras") or {}).get("eer_threshold")
        if threshold is None:
            logger.warning("checkpoint has no stored threshold; using 0.5")
            threshold = 0.5
    scores = score_images(model, dataset.images)
    report = evaluate_scores(scores, dataset.labels, float(threshold), dataset.latent_domain_gt)
    if out_json:
        with open(out_json, "w") as f:
            f.write(report.to_json())
    if out_roc:
        write_roc_csv(out_roc, report.roc)
    return report


def export_domain_features(ckpt_path: str, data_dir: str, out_csv: str) -> None:
    """One CSV row per sample: id, true latent domain, pseudo domain (0 when
    the checkpoint carries none for that row), then the domain-feature
    vector."""
    model, header, dataset = _load(ckpt_path, data_dir)
    df = _checkpoint_df(model, header, dataset)
    pseudo = _stored_pseudo(header, dataset.n)
    with open(out_csv, "w") as f:
        cols = ",".join(f"df_{j}" for j in range(df.shape[1]))
        f.write(f"sample_id,latent_domain_gt,pseudo_domain,{cols}\n")
        for i in range(dataset.n):
            vec = ",".join(f"{v:.8g}" for v in df[i])
            f.write(f"{i},{int(dataset.latent_domain_gt[i])},{int(pseudo[i])},{vec}\n")


def analyze_clusters(ckpt_path: str, data_dir: str, out_csv: str) -> dict:
    """Recluster the dataset with the checkpoint's extractor and report
    agreement with the true domains and with the checkpoint's stored
    assignment.

    Writes one row per sample plus a sidecar summary JSON; returns the
    summary."""
    model, header, dataset = _load(ckpt_path, data_dir)
    k = int((header.get("extras") or {}).get("k") or (header.get("hyper") or {}).get("num_domains", 3))
    df = _checkpoint_df(model, header, dataset)
    df_z = EpochNormalizer().fit_transform(df)
    raw, _, _ = kmeans(df_z, k, seed=0)
    labels = raw + 1

    stored = _stored_pseudo(header, dataset.n)
    overlap_rows = stored > 0
    if overlap_rows.any():
        cost = np.zeros((k, k))
        for i in range(k):
            for j in range(k):
                cost[i, j] = -np.sum((raw[overlap_rows] == i) & (stored[overlap_rows] == j + 1))
        perm = kuhn_munkres(cost)
        labels = perm[raw] + 1
        nmi_prev = nmi(labels[overlap_rows], stored[overlap_rows])
    else:
        nmi_prev = float("nan")

    with open(out_csv, "w") as f:
        f.write("sample_id,pseudo_domain,latent_domain_gt,stored_pseudo_domain\n")
        for i in range(dataset.n):
            f.write(f"{i},{int(labels[i])},{int(dataset.latent_domain_gt[i])},{int(stored[i])}\n")

    summary = {
        "k": k,
        "nmi_gt": nmi(labels, dataset.latent_domain_gt),
        "nmi_prev": nmi_prev,
        "epoch": header.get("epoch"),
    }
    with open(os.path.splitext(out_csv)[0] + "_summary.json", "w") as f:
        json.dump(summary, f, sort_keys=True, indent=2)
    return summary


def mmd_report(ckpt_path: str, data_dir: str, out_json: str) -> dict:
    """Pairwise inter-domain MMD of the checkpoint's domain features under
    the true partition and (when stored) the pseudo partition."""
    model, header, dataset = _load(ckpt_path, data_dir)
    df = _checkpoint_df(model, header, dataset)
    df_z = EpochNormalizer().fit_transform(df)

    gt_matrix, gt_mean = inter_domain_mmd(df_z, dataset.latent_domain_gt)
    report = {
        "gt": {"matrix": gt_matrix.tolist(), "mean_offdiag": gt_mean},
        "pseudo": None,
    }
    stored = _stored_pseudo(header, dataset.n)
    rows = stored > 0
    if rows.any() and len(np.unique(stored[rows])) >= 2:
        ps_matrix, ps_mean = inter_domain_mmd(df_z[rows], stored[rows])
        report["pseudo"] = {"matrix": ps_matrix.tolist(), "mean_offdiag": ps_mean}
    with open(out_json, "w") as f:
        json.dump(report, f, sort_keys=True, indent=2)
    return report
