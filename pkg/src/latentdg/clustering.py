"""Pseudo-domain assignment: seeded k-means over domain features, optimal
label matching across epochs, mutual-information diagnostics, and
silhouette-based selection of the domain count.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

logger = logging.getLogger(__name__)


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    for i in range(1, k):
        d2 = _sq_dists(points, centroids[:i]).min(axis=1)
        total = d2.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centroids[i] = points[idx]
    return centroids


def _lloyd_run(points: np.ndarray, k: int, rng, max_iter: int, tol: float):
    n = points.shape[0]
    centroids = _kmeanspp_init(points, k, rng)
    trace = []
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        d2 = _sq_dists(points, centroids)
        labels = d2.argmin(axis=1)
        for c in range(k):
            if not np.any(labels == c):
                min_d2 = d2[np.arange(n), labels]
                far = int(min_d2.argmax())
                if min_d2[far] <= 0.0:
                    break  # all points coincide with centroids; cluster stays empty
                centroids[c] = points[far]
                d2 = _sq_dists(points, centroids)
                labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
        trace.append(inertia)

        new_centroids = centroids.copy()
        for c in range(k):
            mask = labels == c
            if np.any(mask):
                new_centroids[c] = points[mask].mean(axis=0)
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break

    d2 = _sq_dists(points, centroids)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, centroids, inertia, trace


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 100,
    tol: float = 1e-6,
    n_init: int = 10,
    return_trace: bool = False,
):
    """Seeded k-means: ``n_init`` k-means++ initializations, Lloyd
    iterations on each, best inertia wins.

    A Lloyd pass stops when the largest centroid shift drops below ``tol``;
    a cluster that empties is reseeded at the point farthest from its
    nearest centroid. Returns (labels, centroids, inertia); with
    ``return_trace`` also the winning run's per-iteration inertia values.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"points must be 2-D, got shape {points.shape}")
    n = points.shape[0]
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")

    best = None
    for restart in range(max(n_init, 1)):
        rng = np.random.default_rng(
            np.random.SeedSequence([seed & (2**64 - 1), restart])
        )
        result = _lloyd_run(points, k, rng, max_iter, tol)
        if best is None or result[2] < best[2] - 1e-12:
            best = result
    labels, centroids, inertia, trace = best
    if return_trace:
        return labels, centroids, inertia, trace
    return labels, centroids, inertia


def kuhn_munkres(cost: np.ndarray) -> np.ndarray:
    """Minimum-cost perfect matching of a square cost matrix; returns the
    permutation p with p[row] = column."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def nmi(labels_a, labels_b) -> float:
    """Normalized mutual information, arithmetic-mean normalization.

    When both labelings are single-cluster the normalizer vanishes; the
    partitions are then identical by construction and the result is defined
    as 1.0.
    """
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise ValueError("labelings must be equal-length nonempty 1-D arrays")
    n = len(a)
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.float64)
    np.add.at(contingency, (ai, bi), 1.0)
    pij = contingency / n
    pi = pij.sum(axis=1)
    pj = pij.sum(axis=0)
    nz = pij > 0
    mi = float((pij[nz] * np.log(pij[nz] / (pi[:, None] * pj[None, :])[nz])).sum())
    h_a = float(-(pi[pi > 0] * np.log(pi[pi > 0])).sum())
    h_b = float(-(pj[pj > 0] * np.log(pj[pj > 0])).sum())
    denom = 0.5 * (h_a + h_b)
    if denom <= 0.0:
        return 1.0  # both trivial partitions -> identical
    return float(np.clip(mi / denom, 0.0, 1.0))


def silhouette_score(points: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette over all points (O(n^2)); singleton clusters score 0."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise ValueError("silhouette needs at least two clusters")
    dists = np.sqrt(np.maximum(_sq_dists(points, points), 0.0))
    scores = np.zeros(len(points))
    for i in range(len(points)):
        own = labels == labels[i]
        n_own = own.sum()
        if n_own <= 1:
            continue
        a = dists[i][own].sum() / (n_own - 1)
        b = min(dists[i][labels == c].mean() for c in uniq if c != labels[i])
        m = max(a, b)
        scores[i] = 0.0 if m == 0.0 else (b - a) / m
    return float(scores.mean())


def choose_k(reference_features: np.ndarray, candidates=(2, 3, 4, 5), seed: int = 0) -> int:
    """Pick the domain count by silhouette over candidate k values (ties go
    to the smaller k)."""
    points = np.asarray(reference_features, dtype=np.float64)
    candidates = sorted(candidates)
    if len(points) < max(candidates) + 1:
        raise ValueError(f"need at least {max(candidates) + 1} samples")
    if np.allclose(points, points[0]):
        logger.warning("choose_k: degenerate feature set, returning smallest candidate")
        return candidates[0]
    best_k, best_score = None, -np.inf
    for k in candidates:
        sub_seed = int(np.random.SeedSequence([seed & (2**64 - 1), k]).generate_state(1)[0])
        labels, _, _ = kmeans(points, k, seed=sub_seed)
        if len(np.unique(labels)) < 2:
            continue
        score = silhouette_score(points, labels)
        if score > best_score + 1e-12:
            best_k, best_score = k, score
    return best_k if best_k is not None else candidates[0]


@dataclass
class ClusterAssignment:
    """One epoch's pseudo-domain labeling (values 1..k)."""

    epoch: int
    labels: np.ndarray
    inertia_pos: float
    inertia_neg: float
    match_permutation: np.ndarray  # positive-clustering relabel map (epoch 1: identity)
    match_permutation_neg: np.ndarray = None
    fallback_fired: bool = False


def _overlap_cost(new_labels: np.ndarray, prev_labels: np.ndarray, k: int) -> np.ndarray:
    cost = np.zeros((k, k), dtype=np.float64)
    for i in range(k):
        in_i = new_labels == i
        for j in range(k):
            cost[i, j] = -float(np.sum(in_i & (prev_labels == j + 1)))
    return cost


def _fill_missing_class(labels, features, task_labels, k) -> bool:
    """Ensure every domain holds both classes by pulling the nearest samples
    of a missing class from the domain richest in it."""
    fired = False
    for domain in range(1, k + 1):
        for cls in (0, 1):
            member = (labels == domain) & (task_labels == cls)
            if member.any():
                continue
            fired = True
            counts = [np.sum((labels == d) & (task_labels == cls)) for d in range(1, k + 1)]
            donor = int(np.argmax(counts)) + 1
            if counts[donor - 1] <= 1:
                logger.warning(
                    "domain %d has no class-%d samples and no donor domain can spare any",
                    domain,
                    cls,
                )
                continue
            target_members = labels == domain
            centroid = (
                features[target_members].mean(axis=0) if target_members.any() else features.mean(axis=0)
            )
            donor_idx = np.where((labels == donor) & (task_labels == cls))[0]
            n_move = max(1, len(donor_idx) // (2 * k))
            d2 = ((features[donor_idx] - centroid) ** 2).sum(axis=1)
            moved = donor_idx[np.argsort(d2, kind="stable")[:n_move]]
            labels[moved] = domain
            logger.warning(
                "domain %d had no class-%d samples; moved %d from domain %d",
                domain,
                cls,
                len(moved),
                donor,
            )
    return fired


def assign_pseudo_domains(
    dataset,
    df_all: np.ndarray,
    k: int,
    seed: int,
    prev: ClusterAssignment | None = None,
) -> ClusterAssignment:
    """Assign this epoch's pseudo-domain labels and write them into the
    dataset.

    First pass (``prev is None``): all samples are clustered jointly, which
    ties positive and negative samples of a style together. Later passes
    cluster live and spoof samples separately, then match each clustering
    to the previous epoch's labels by maximum label overlap so ids stay
    stable.
    """
    df_all = np.asarray(df_all, dtype=np.float64)
    if len(df_all) != dataset.n:
        raise ValueError(f"df rows {len(df_all)} != dataset size {dataset.n}")
    task = np.asarray(dataset.labels, dtype=np.int64)
    epoch = 1 if prev is None else prev.epoch + 1

    if k == 1:
        labels = np.ones(dataset.n, dtype=np.int64)
        dataset.pseudo_domains[:] = labels
        return ClusterAssignment(epoch, labels, 0.0, 0.0, np.arange(1))

    if prev is None:
        raw, _, inertia = kmeans(df_all, k, seed=seed)
        labels = raw + 1
        perm_pos = np.arange(k)
        perm_neg = np.arange(k)
        inertia_pos = inertia_neg = inertia
    else:
        pos_idx = np.where(task == 1)[0]
        neg_idx = np.where(task == 0)[0]
        seed_pos = int(np.random.SeedSequence([seed & (2**64 - 1), 1]).generate_state(1)[0])
        seed_neg = int(np.random.SeedSequence([seed & (2**64 - 1), 2]).generate_state(1)[0])
        raw_pos, _, inertia_pos = kmeans(df_all[pos_idx], k, seed=seed_pos)
        raw_neg, _, inertia_neg = kmeans(df_all[neg_idx], k, seed=seed_neg)
        perm_pos = kuhn_munkres(_overlap_cost(raw_pos, prev.labels[pos_idx], k))
        perm_neg = kuhn_munkres(_overlap_cost(raw_neg, prev.labels[neg_idx], k))
        labels = np.zeros(dataset.n, dtype=np.int64)
        labels[pos_idx] = perm_pos[raw_pos] + 1
        labels[neg_idx] = perm_neg[raw_neg] + 1

    fired = _fill_missing_class(labels, df_all, task, k)
    dataset.pseudo_domains[:] = labels
    return ClusterAssignment(
        epoch=epoch,
        labels=labels,
        inertia_pos=float(inertia_pos),
        inertia_neg=float(inertia_neg),
        match_permutation=perm_pos,
        match_permutation_neg=perm_neg,
        fallback_fired=fired,
    )
