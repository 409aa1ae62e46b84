"""Evaluation metrics: ROC/AUC, equal-error-rate thresholding, half total
error rate, and pairwise distribution distances between domain groups.

Scores are live-probabilities; label 1 = live (genuine), 0 = spoof
(attack). FAR is the fraction of attacks accepted at a threshold, FRR the
fraction of genuine samples rejected.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import torch

from .losses import KernelSpec, median_heuristic_kernel, mmd_biased

logger = logging.getLogger(__name__)


def _check_two_classes(labels: np.ndarray) -> None:
    if len(np.unique(labels)) < 2:
        raise ValueError("scores for both classes are required")


def far_frr(scores: np.ndarray, labels: np.ndarray, threshold: float) -> tuple[float, float]:
    """Error rates at a threshold; a sample is accepted when score >= threshold."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _check_two_classes(labels)
    far = float(np.mean(scores[labels == 0] >= threshold))
    frr = float(np.mean(scores[labels == 1] < threshold))
    return far, frr


def roc_and_auc(scores, labels) -> tuple[np.ndarray, float]:
    """ROC as (FAR, TPR) rows swept over the unique scores (equal scores
    collapse into one threshold), plus the trapezoid-rule AUC."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _check_two_classes(labels)

    thresholds = np.unique(scores)[::-1]
    n_pos = np.sum(labels == 1)
    n_neg = np.sum(labels == 0)
    points = [(0.0, 0.0)]
    for t in thresholds:
        accepted = scores >= t
        far = float(np.sum(accepted & (labels == 0)) / n_neg)
        tpr = float(np.sum(accepted & (labels == 1)) / n_pos)
        points.append((far, tpr))
    roc = np.array(points)
    auc = float(np.trapezoid(roc[:, 1], roc[:, 0]))
    return roc, auc


def eer_threshold(scores, labels) -> tuple[float, float]:
    """Threshold minimizing |FAR - FRR|, swept over midpoints between
    consecutive unique scores (plus end sentinels). Midpoints center the
    operating point inside a separation gap instead of pinning it to an
    observed score, which matters when scores shift between calibration
    and deployment. Returns (threshold, rate at that threshold)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    _check_two_classes(labels)
    uniq = np.unique(scores)
    grid = np.concatenate([[uniq[0] - 1.0], 0.5 * (uniq[1:] + uniq[:-1]), [uniq[-1] + 1.0]])
    best_t, best_gap, best_rate = grid[0], np.inf, 0.5
    for t in grid:
        far, frr = far_frr(scores, labels, t)
        gap = abs(far - frr)
        if gap < best_gap - 1e-15:
            best_t, best_gap, best_rate = float(t), gap, (far + frr) / 2.0
    return best_t, float(best_rate)


def hter(scores, labels, threshold: float) -> float:
    """(FAR + FRR) / 2 at a fixed threshold. The threshold must come from a
    source-domain validation split, never from the evaluation data."""
    far, frr = far_frr(np.asarray(scores), np.asarray(labels), threshold)
    return (far + frr) / 2.0


def inter_domain_mmd(
    embeddings: np.ndarray,
    partition: np.ndarray,
    kernel: KernelSpec | None = None,
) -> tuple[np.ndarray, float]:
    """Pairwise biased squared MMD between the embedding sets of each
    domain. Returns the symmetric zero-diagonal matrix and the mean of its
    valid off-diagonal entries; singleton domains are skipped with a
    warning (NaN entries)."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    partition = np.asarray(partition)
    domains = np.unique(partition)
    if len(domains) < 2:
        raise ValueError("need at least two domains")
    groups = {d: torch.from_numpy(embeddings[partition == d]) for d in domains}
    if kernel is None:
        full = torch.from_numpy(embeddings)
        kernel = median_heuristic_kernel(full, full)

    k = len(domains)
    matrix = np.zeros((k, k))
    values = []
    for i in range(k):
        for j in range(i + 1, k):
            gi, gj = groups[domains[i]], groups[domains[j]]
            if len(gi) < 2 or len(gj) < 2:
                logger.warning("skipping MMD for singleton domain pair (%s, %s)", domains[i], domains[j])
                matrix[i, j] = matrix[j, i] = np.nan
                continue
            val = float(mmd_biased(gi, gj, kernel))
            matrix[i, j] = matrix[j, i] = val
            values.append(val)
    mean_off = float(np.mean(values)) if values else float("nan")
    return matrix, mean_off


@dataclass
class MetricsReport:
    """Evaluation summary with the ROC stored as (FAR, TPR) rows."""

    auc: float
    hter: float
    eer_threshold: float
    n_samples: int
    roc: np.ndarray = field(repr=False)
    per_domain: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "hter": self.hter,
            "eer_threshold": self.eer_threshold,
            "n_samples": self.n_samples,
            "per_domain": self.per_domain,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def evaluate_scores(
    scores: np.ndarray,
    labels: np.ndarray,
    threshold: float,
    domains: np.ndarray | None = None,
) -> MetricsReport:
    """Bundle AUC, HTER at the supplied threshold, and per-domain score
    summaries into a report."""
    roc, auc = roc_and_auc(scores, labels)
    report = MetricsReport(
        auc=auc,
        hter=hter(scores, labels, threshold),
        eer_threshold=float(threshold),
        n_samples=len(scores),
        roc=roc,
    )
    if domains is not None:
        for d in np.unique(domains):
            mask = domains == d
            entry = {
                "n": int(mask.sum()),
                "mean_score": float(np.mean(scores[mask])),
                "hter": None,
            }
            if len(np.unique(labels[mask])) == 2:
                entry["hter"] = hter(scores[mask], labels[mask], threshold)
            report.per_domain[str(int(d))] = entry
    return report


def write_roc_csv(path: str, roc: np.ndarray) -> None:
    with open(path, "w") as f:
        f.write("far,tpr\n")
        for far, tpr in roc:
            f.write(f"{far:.10g},{tpr:.10g}\n")
