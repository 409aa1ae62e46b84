"""Training orchestration: per-epoch pseudo-domain refresh, episodic
meta-train/meta-test updates, logging, checkpoints, and the ablation and
plain-ERM baselines.

One meta step:
  * sample one batch per meta-train domain and one from the held-out
    (meta-test) domain;
  * inner-update the meta learner on each meta-train batch with a plain
    gradient step of the classification + distribution-matching loss;
  * evaluate the meta-test batch under each inner-updated learner;
  * apply one Adam step per parameter group, where the extractor
    additionally absorbs gate-entropy and depth terms and the depth head
    absorbs only depth terms.

By default the inner step is treated as constant-plus-identity when
differentiating (first-order); exact differentiation through the inner
step is available via ``first_order=False``.

All randomness flows from named numpy streams keyed on (seed, role, epoch,
iteration), so two runs with one seed produce bitwise-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import torch

from . import __version__
from .clustering import ClusterAssignment, assign_pseudo_domains, nmi
from .config import DatasetSpec, HyperParams
from .dataset import Dataset
from .domain_features import (
    EpochNormalizer,
    compute_domain_features,
    entropy_from_probs,
)
from .losses import KernelSpec, bce_loss, depth_loss, mmd_to_prior
from .metrics import eer_threshold, inter_domain_mmd
from .model import (
    ArchitectureConfig,
    LivenessModel,
    build_model,
    reference_extractor,
    save_checkpoint,
    to_input,
)
from .synth import generate_dataset

logger = logging.getLogger(__name__)

TRAIN_LOG_COLUMNS = (
    "iteration",
    "epoch",
    "loss_cls",
    "loss_mmd",
    "loss_dep",
    "loss_p1",
    "loss_p2",
    "loss_p3",
    "loss_meta_test",
)

CLUSTER_SUMMARY_COLUMNS = (
    "epoch",
    "nmi_gt",
    "nmi_prev",
    "frac_changed",
    "inertia_pos",
    "inertia_neg",
    "mmd_pseudo",
    "mmd_gt",
    "fallback_fired",
)

MMD_DIAG_MAX_PER_DOMAIN = 300


class Batch(NamedTuple):
    x: torch.Tensor  # (b, 6, H, W)
    y: torch.Tensor  # (b,)
    depth: torch.Tensor  # (b, hd, wd)


@dataclass
class Episode:
    """One meta iteration: a batch per meta-train domain plus the held-out
    meta-test batch, each drawn entirely from its own pseudo domain."""

    train: list[Batch]
    test: Batch
    train_ids: list[int]
    test_id: int
    train_idx: list[np.ndarray] = field(default_factory=list)
    test_idx: np.ndarray = None


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), *key]))


def split_meta_domains(domain_ids, rng: np.random.Generator) -> tuple[list[int], int]:
    """Uniformly hold out one domain for meta-test; the rest meta-train."""
    ids = sorted(int(d) for d in domain_ids)
    if len(ids) < 2:
        raise ValueError(f"need at least 2 domains, got {ids}")
    test = ids[int(rng.integers(len(ids)))]
    return [d for d in ids if d != test], test


def draw_prior(rng: np.random.Generator, batch_size: int, dim: int, dtype) -> torch.Tensor:
    return torch.from_numpy(rng.standard_normal((batch_size, dim))).to(dtype)


def inner_update(
    params: dict[str, torch.Tensor],
    grads: dict[str, torch.Tensor],
    alpha: float,
    detach: bool = True,
) -> dict[str, torch.Tensor]:
    """One plain gradient step, copy semantics: the input parameters are
    never modified. With ``detach`` the result is cut from the graph (the
    first-order rule); otherwise it stays differentiable."""
    updated = {}
    for name, p in params.items():
        g = grads.get(name)
        new = p - alpha * g if g is not None else p + 0.0
        if detach:
            new = new.detach().requires_grad_(True)
        updated[name] = new
    return updated


@dataclass
class EpisodeTerms:
    """All loss terms of one meta step (tensors, still attached)."""

    cls_train: list[torch.Tensor]
    mmd_train: list[torch.Tensor]
    dep_train: list[torch.Tensor]
    entropy_train: list[list[torch.Tensor]]  # [domain][block]
    cls_test: list[torch.Tensor]
    mmd_test: list[torch.Tensor]
    dep_test: torch.Tensor
    adapted: list[dict[str, torch.Tensor]]

    def total(self, hyper: HyperParams) -> torch.Tensor:
        total = hyper.lambda_dep * self.dep_test
        for i in range(len(self.cls_train)):
            total = total + hyper.lambda_cls * self.cls_train[i]
            total = total + hyper.lambda_m * self.mmd_train[i]
            total = total + hyper.lambda_cls * self.cls_test[i]
            total = total + hyper.lambda_m * self.mmd_test[i]
            total = total + hyper.lambda_dep * self.dep_train[i]
            for lp in self.entropy_train[i]:
                total = total + hyper.lambda_p * lp
        return total

    def log_row(self, hyper: HyperParams) -> dict[str, float]:
        n = len(self.cls_train)
        row = {
            "loss_cls": float(sum(t.item() for t in self.cls_train) / n),
            "loss_mmd": float(sum(t.item() for t in self.mmd_train) / n),
            "loss_dep": float(sum(t.item() for t in self.dep_train) / n),
        }
        n_blocks = len(self.entropy_train[0])
        for j in range(n_blocks):
            row[f"loss_p{j + 1}"] = float(sum(d[j].item() for d in self.entropy_train) / n)
        meta_test = hyper.lambda_dep * self.dep_test.item()
        for i in range(n):
            meta_test += hyper.lambda_cls * self.cls_test[i].item()
            meta_test += hyper.lambda_m * self.mmd_test[i].item()
        row["loss_meta_test"] = float(meta_test)
        return row


def compute_episode_terms(
    model: LivenessModel,
    episode: Episode,
    hyper: HyperParams,
    priors: list[torch.Tensor],
    kernel: KernelSpec | None = None,
    adapted: list[dict[str, torch.Tensor]] | None = None,
) -> EpisodeTerms:
    """Forward the whole episode (stacked into one extractor pass) and build
    every loss term.

    ``priors`` holds one standard-normal draw per meta-train domain plus a
    final draw for the meta-test batch. ``adapted`` injects precomputed
    inner-updated meta parameters (used by gradient checks); when absent
    they are computed here per ``hyper.first_order``.
    """
    parts = list(episode.train) + [episode.test]
    sizes = [len(b.x) for b in parts]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    xs = torch.cat([b.x for b in parts])

    blocks, embedding = model.extractor(xs)
    depth_pred = model.depth_head(blocks[1].task)
    h_all, p_all = model.meta(embedding)

    def sl(tensor, i):
        return tensor[offsets[i] : offsets[i + 1]]

    n_train = len(episode.train)
    meta_params = dict(model.meta.named_parameters())

    cls_train, mmd_train, dep_train, entropy_train = [], [], [], []
    new_adapted = []
    for i, batch in enumerate(episode.train):
        l_cls = bce_loss(sl(p_all, i), batch.y)
        l_mmd = mmd_to_prior(sl(h_all, i), priors[i], kernel)
        l_dep = depth_loss(sl(depth_pred, i), batch.depth)
        lps = []
        for block, gate in zip(blocks, model.extractor.gates):
            probs = torch.sigmoid(gate.probe_logit(sl(block.domain, i)))
            lps.append(entropy_from_probs(probs, symmetric=not hyper.literal_entropy))
        cls_train.append(l_cls)
        mmd_train.append(l_mmd)
        dep_train.append(l_dep)
        entropy_train.append(lps)

        if adapted is None:
            inner_loss = hyper.lambda_cls * l_cls + hyper.lambda_m * l_mmd
            grads = torch.autograd.grad(
                inner_loss,
                list(meta_params.values()),
                retain_graph=True,
                create_graph=not hyper.first_order,
                allow_unused=True,
            )
            grad_map = {n: g for (n, _), g in zip(meta_params.items(), grads)}
            new_adapted.append(
                inner_update(meta_params, grad_map, hyper.inner_lr, detach=hyper.first_order)
            )

    adapted = adapted if adapted is not None else new_adapted

    emb_test = sl(embedding, n_train)
    cls_test, mmd_test = [], []
    for i in range(n_train):
        h_t, p_t = torch.func.functional_call(model.meta, adapted[i], (emb_test,))
        cls_test.append(bce_loss(p_t, episode.test.y))
        mmd_test.append(mmd_to_prior(h_t, priors[n_train], kernel))
    dep_test = depth_loss(sl(depth_pred, n_train), episode.test.depth)

    return EpisodeTerms(
        cls_train=cls_train,
        mmd_train=mmd_train,
        dep_train=dep_train,
        entropy_train=entropy_train,
        cls_test=cls_test,
        mmd_test=mmd_test,
        dep_test=dep_test,
        adapted=adapted,
    )


def meta_step(
    model: LivenessModel,
    optimizer: torch.optim.Optimizer,
    episode: Episode,
    hyper: HyperParams,
    priors: list[torch.Tensor],
    kernel: KernelSpec | None = None,
) -> dict[str, float]:
    """One meta-optimization step; returns the per-term log row."""
    terms = compute_episode_terms(model, episode, hyper, priors, kernel=kernel)
    total = terms.total(hyper)
    if not torch.isfinite(total):
        breakdown = {
            "cls_train": [t.item() for t in terms.cls_train],
            "mmd_train": [t.item() for t in terms.mmd_train],
            "dep_train": [t.item() for t in terms.dep_train],
            "cls_test": [t.item() for t in terms.cls_test],
            "mmd_test": [t.item() for t in terms.mmd_test],
            "dep_test": terms.dep_test.item(),
        }
        raise RuntimeError(f"non-finite meta objective; terms: {breakdown}")

    e_params = model.extractor_parameters()
    d_params = model.depth_parameters()
    m_params = model.meta_parameters()
    targets = e_params + d_params + m_params
    adapted_tensors = []
    if hyper.first_order:
        for adapted in terms.adapted:
            adapted_tensors.extend(adapted.values())
        targets = targets + adapted_tensors

    grads = torch.autograd.grad(total, targets, allow_unused=True)
    grads = [g if g is not None else torch.zeros_like(p) for g, p in zip(grads, targets)]

    n_model = len(e_params) + len(d_params) + len(m_params)
    model_grads = list(grads[:n_model])
    if hyper.first_order:
        # Meta-test terms reach theta_M through the identity part of the
        # inner step: fold the adapted-parameter gradients back in.
        per_domain = len(m_params)
        for i in range(len(terms.adapted)):
            chunk = grads[n_model + i * per_domain : n_model + (i + 1) * per_domain]
            base = len(e_params) + len(d_params)
            for j, g in enumerate(chunk):
                model_grads[base + j] = model_grads[base + j] + g

    optimizer.zero_grad(set_to_none=True)
    for p, g in zip(e_params + d_params + m_params, model_grads):
        p.grad = g.detach()
    optimizer.step()
    return terms.log_row(hyper)


def _stratified_split(labels, gt_domains, val_fraction, rng):
    """Per (domain, class) cell split; returns (train_idx, val_idx)."""
    train, val = [], []
    for d in np.unique(gt_domains):
        for c in (0, 1):
            cell = np.where((gt_domains == d) & (labels == c))[0]
            cell = cell[rng.permutation(len(cell))]
            n_val = int(round(len(cell) * val_fraction))
            val.append(cell[:n_val])
            train.append(cell[n_val:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


def score_images(model: LivenessModel, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Live-probabilities for an image array."""
    dtype = next(model.parameters()).dtype
    out = []
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            x = to_input(images[start : start + batch_size], dtype)
            out.append(model(x).prob.double().numpy())
    return np.concatenate(out)


@dataclass
class TrainResult:
    model: LivenessModel
    hyper: HyperParams
    variant: str
    eer_threshold: float
    train_indices: np.ndarray
    val_indices: np.ndarray
    assignments: list
    iter_log: list[dict]
    epoch_log: list[dict]
    run_dir: str | None = None
    checkpoint_path: str | None = None


class Trainer:
    """Runs one training variant over a generated dataset.

    Variants: ``full`` (the method), ``w_gt_domains`` (true domain ids),
    ``wo_domains`` (fresh uniform-random ids each epoch), ``wo_select``
    (cluster on all domain-branch channels), ``wo_lp`` / ``wo_mmd``
    (regularizer off), ``erm`` (plain classifier training, no episodes).
    """

    def __init__(
        self,
        dataset: Dataset,
        hyper: HyperParams,
        out_dir: str | None = None,
        variant: str = "full",
        arch: ArchitectureConfig | None = None,
        dtype: torch.dtype = torch.float32,
    ):
        hyper.validate()
        if variant == "wo_lp":
            hyper = hyper.replace(lambda_p=0.0)
        elif variant == "wo_mmd":
            hyper = hyper.replace(lambda_m=0.0)
        self.hyper = hyper
        self.variant = variant
        self.dataset = dataset
        self.dtype = dtype
        self.out_dir = out_dir
        self.arch = arch or ArchitectureConfig(
            channels=hyper.channels,
            reduction_ratio=hyper.reduction_ratio,
            adaptation_width=hyper.adaptation_width,
            depth_size=dataset.spec.depth_size,
        )

        if variant == "w_gt_domains":
            self.k = len(np.unique(dataset.latent_domain_gt))
        else:
            self.k = hyper.num_domains

        split_rng = _stream(hyper.seed, 1)
        self.train_idx, self.val_idx = _stratified_split(
            dataset.labels, dataset.latent_domain_gt, hyper.val_fraction, split_rng
        )
        self.train_ds = dataset.subset(self.train_idx)

        self.model = build_model(self.arch, seed=hyper.seed, dtype=dtype)
        self.reference = reference_extractor(self.arch, dtype=dtype)
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=hyper.outer_lr)

        self.images_t = to_input(self.train_ds.images, dtype)
        self.labels_t = torch.from_numpy(self.train_ds.labels.astype(np.float64)).to(dtype)
        self.depth_t = torch.from_numpy(self.train_ds.depth).to(dtype)

        self.iter_log: list[dict] = []
        self.epoch_log: list[dict] = []
        self.assignments: list[ClusterAssignment] = []
        self.cluster_rows: list[tuple] = []
        self.global_iter = 0

    # -- pseudo-domain refresh ------------------------------------------------

    def _refresh_domains(self, epoch: int) -> np.ndarray:
        ds = self.train_ds
        prev = self.assignments[-1] if self.assignments else None
        if self.variant == "w_gt_domains":
            labels = ds.latent_domain_gt - ds.latent_domain_gt.min() + 1
            assignment = ClusterAssignment(epoch, labels.copy(), 0.0, 0.0, np.arange(self.k))
            ds.pseudo_domains[:] = labels
        elif self.variant == "wo_domains":
            rng = _stream(self.hyper.seed, 6, epoch)
            while True:
                labels = rng.integers(1, self.k + 1, size=ds.n)
                ok = all(
                    np.any((labels == d) & (ds.labels == c))
                    for d in range(1, self.k + 1)
                    for c in (0, 1)
                )
                if ok:
                    break
            assignment = ClusterAssignment(epoch, labels, 0.0, 0.0, np.arange(self.k))
            ds.pseudo_domains[:] = labels
        else:
            select_half = self.variant != "wo_select"
            extractor = self.reference if epoch == 1 else self.model.extractor
            df = compute_domain_features(
                extractor, ds.images, select_half=select_half, dtype=self.dtype
            )
            df_z = EpochNormalizer().fit_transform(df)
            kseed = int(_stream(self.hyper.seed, 3, epoch).integers(2**62))
            assignment = assign_pseudo_domains(ds, df_z, self.k, seed=kseed, prev=prev)
            self._log_domain_mmd(df_z, assignment, epoch)

        self._summarize_epoch(assignment, prev, epoch)
        self.assignments.append(assignment)
        return assignment.labels

    def _log_domain_mmd(self, df_z, assignment, epoch) -> None:
        rng = _stream(self.hyper.seed, 7, epoch)
        gt = self.train_ds.latent_domain_gt

        def subsample(partition):
            keep = []
            for d in np.unique(partition):
                idx = np.where(partition == d)[0]
                if len(idx) > MMD_DIAG_MAX_PER_DOMAIN:
                    idx = rng.choice(idx, MMD_DIAG_MAX_PER_DOMAIN, replace=False)
                keep.append(idx)
            return np.sort(np.concatenate(keep))

        try:
            i1 = subsample(assignment.labels)
            _, mmd_pseudo = inter_domain_mmd(df_z[i1], assignment.labels[i1])
            i2 = subsample(gt)
            _, mmd_gt = inter_domain_mmd(df_z[i2], gt[i2])
        except ValueError:
            mmd_pseudo = mmd_gt = float("nan")
        self._mmd_diag = (mmd_pseudo, mmd_gt)

    def _summarize_epoch(self, assignment, prev, epoch) -> None:
        gt = self.train_ds.latent_domain_gt
        mmd_pseudo, mmd_gt = getattr(self, "_mmd_diag", (float("nan"), float("nan")))
        self._mmd_diag = (float("nan"), float("nan"))
        row = {
            "epoch": epoch,
            "nmi_gt": nmi(assignment.labels, gt),
            "nmi_prev": nmi(assignment.labels, prev.labels) if prev is not None else float("nan"),
            "frac_changed": float(np.mean(assignment.labels != prev.labels)) if prev else float("nan"),
            "inertia_pos": assignment.inertia_pos,
            "inertia_neg": assignment.inertia_neg,
            "mmd_pseudo": mmd_pseudo,
            "mmd_gt": mmd_gt,
            "fallback_fired": int(assignment.fallback_fired),
        }
        self.epoch_log.append(row)
        for i in range(self.train_ds.n):
            self.cluster_rows.append(
                (epoch, i, int(assignment.labels[i]), int(gt[i]))
            )

    # -- episodic loop ----------------------------------------------------------

    def _make_batch(self, idx: np.ndarray) -> Batch:
        t = torch.from_numpy(idx)
        return Batch(x=self.images_t[t], y=self.labels_t[t], depth=self.depth_t[t])

    def _sample_episode(self, labels: np.ndarray, rng: np.random.Generator) -> Episode:
        present = np.unique(labels)
        train_ids, test_id = split_meta_domains(present, rng)
        b = self.hyper.batch_size
        train_batches, train_idx = [], []
        for d in train_ids:
            pool = np.where(labels == d)[0]
            idx = rng.choice(pool, size=b, replace=len(pool) < b)
            train_idx.append(idx)
            train_batches.append(self._make_batch(idx))
        pool = np.where(labels == test_id)[0]
        test_idx = rng.choice(pool, size=b, replace=len(pool) < b)
        return Episode(
            train=train_batches,
            test=self._make_batch(test_idx),
            train_ids=train_ids,
            test_id=test_id,
            train_idx=train_idx,
            test_idx=test_idx,
        )

    def _run_epoch(self, epoch: int) -> None:
        labels = self._refresh_domains(epoch)
        n = self.train_ds.n
        iterations = math.ceil(self.hyper.visits_per_epoch * n / (self.k * self.hyper.batch_size))
        episode_rng = _stream(self.hyper.seed, 4, epoch)
        dim = self.arch.adaptation_width
        for it in range(iterations):
            episode = self._sample_episode(labels, episode_rng)
            prior_rng = _stream(self.hyper.seed, 5, epoch, it)
            priors = [
                draw_prior(prior_rng, len(b.x), dim, self.dtype)
                for b in episode.train + [episode.test]
            ]
            row = meta_step(self.model, self.optimizer, episode, self.hyper, priors)
            self.global_iter += 1
            row.update(iteration=self.global_iter, epoch=epoch)
            self.iter_log.append(row)

    def _run_erm_epoch(self, epoch: int) -> None:
        rng = _stream(self.hyper.seed, 4, epoch)
        passes = [rng.permutation(self.train_ds.n) for _ in range(self.hyper.visits_per_epoch)]
        order = np.concatenate(passes)
        b = self.hyper.batch_size
        for start in range(0, len(order), b):
            batch = self._make_batch(order[start : start + b])
            trace = self.model(batch.x)
            loss = bce_loss(trace.prob, batch.y)
            self.optimizer.zero_grad(set_to_none=True)
            loss.backward()
            self.optimizer.step()
            self.global_iter += 1
            row = {c: 0.0 for c in TRAIN_LOG_COLUMNS[2:]}
            row.update(iteration=self.global_iter, epoch=epoch, loss_cls=float(loss.item()))
            self.iter_log.append(row)

    # -- orchestration ---------------------------------------------------------

    def run(self) -> TrainResult:
        if self.out_dir:
            os.makedirs(self.out_dir, exist_ok=True)
            self._write_run_manifest()

        for epoch in range(1, self.hyper.epochs + 1):
            if self.variant == "erm":
                self._run_erm_epoch(epoch)
            else:
                self._run_epoch(epoch)
            if self.out_dir:
                save_checkpoint(
                    os.path.join(self.out_dir, f"ckpt_epoch_{epoch:03d}.bin"),
                    self.model,
                    epoch=epoch,
                    hyper=self.hyper.to_dict(),
                )

        threshold = self._calibrate_threshold()
        ckpt_path = None
        if self.out_dir:
            self._write_logs()
            ckpt_path = os.path.join(self.out_dir, "ckpt_final.bin")
            extras = {
                "eer_threshold": threshold,
                "variant": self.variant,
                "k": self.k,
                "train_indices": [int(i) for i in self.train_idx],
                "pseudo_domains": [int(v) for v in self.train_ds.pseudo_domains]
                if self.assignments
                else [],
            }
            save_checkpoint(
                ckpt_path,
                self.model,
                epoch=self.hyper.epochs,
                hyper=self.hyper.to_dict(),
                extras=extras,
            )

        return TrainResult(
            model=self.model,
            hyper=self.hyper,
            variant=self.variant,
            eer_threshold=threshold,
            train_indices=self.train_idx,
            val_indices=self.val_idx,
            assignments=self.assignments,
            iter_log=self.iter_log,
            epoch_log=self.epoch_log,
            run_dir=self.out_dir,
            checkpoint_path=ckpt_path,
        )

    def _calibrate_threshold(self) -> float:
        """EER threshold on the source-domain validation split (never on
        evaluation data)."""
        if len(self.val_idx) == 0:
            logger.warning("no validation split; falling back to threshold 0.5")
            return 0.5
        val_scores = score_images(self.model, self.dataset.images[self.val_idx])
        val_labels = self.dataset.labels[self.val_idx]
        threshold, _ = eer_threshold(val_scores, val_labels)
        return float(threshold)

    def _write_run_manifest(self) -> None:
        import json

        manifest = {
            "package_version": __version__,
            "variant": self.variant,
            "k": self.k,
            "hyper": self.hyper.to_dict(),
            "dataset_spec": self.dataset.spec.to_dict(),
            "n_train": int(len(self.train_idx)),
            "n_val": int(len(self.val_idx)),
        }
        with open(os.path.join(self.out_dir, "run_manifest.json"), "w") as f:
            json.dump(manifest, f, sort_keys=True, indent=2)

    def _write_logs(self) -> None:
        with open(os.path.join(self.out_dir, "train_log.csv"), "w") as f:
            f.write(",".join(TRAIN_LOG_COLUMNS) + "\n")
            for row in self.iter_log:
                f.write(",".join(_fmt(row.get(c)) for c in TRAIN_LOG_COLUMNS) + "\n")
        with open(os.path.join(self.out_dir, "cluster_summary.csv"), "w") as f:
            f.write(",".join(CLUSTER_SUMMARY_COLUMNS) + "\n")
            for row in self.epoch_log:
                f.write(",".join(_fmt(row.get(c)) for c in CLUSTER_SUMMARY_COLUMNS) + "\n")
        with open(os.path.join(self.out_dir, "clusters.csv"), "w") as f:
            f.write("epoch,sample_index,pseudo_domain,latent_domain_gt\n")
            for row in self.cluster_rows:
                f.write(",".join(str(v) for v in row) + "\n")


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def train(
    data: Dataset | DatasetSpec,
    hyper: HyperParams,
    out_dir: str | None = None,
    variant: str = "full",
    arch: ArchitectureConfig | None = None,
    dtype: torch.dtype = torch.float32,
) -> TrainResult:
    """Train on a dataset (or generate one from a spec first). Deterministic
    given the spec and hyper seeds."""
    dataset = generate_dataset(data) if isinstance(data, DatasetSpec) else data
    trainer = Trainer(dataset, hyper, out_dir=out_dir, variant=variant, arch=arch, dtype=dtype)
    return trainer.run()
