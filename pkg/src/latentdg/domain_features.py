"""Domain-descriptive statistics read from the extractor's suppressed
channel branch, plus the gate-entropy regularizer.

A sample's domain feature is the concatenation, over the three gated
blocks, of per-channel spatial mean and standard deviation of the
low-attention half of the domain branch. Features are z-scored across the
epoch's full sample set before clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .model import EPSILON, ForwardTrace

PROB_CLAMP = 1e-7


def channel_stats(feat: torch.Tensor, eps: float = EPSILON) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-channel spatial mean and standard deviation of a (N, C, H, W) map.

    Population variance; eps is added inside the square root, so constant
    channels report sigma = sqrt(eps).
    """
    if feat.dim() != 4:
        raise ValueError(f"expected (N, C, H, W), got shape {tuple(feat.shape)}")
    mu = feat.mean(dim=(2, 3))
    var = feat.var(dim=(2, 3), unbiased=False)
    return mu, torch.sqrt(var + eps)


def select_low_attention(f_minus: torch.Tensor, attention: torch.Tensor) -> torch.Tensor:
    """Keep the C/2 channels with the smallest attention, ordered by
    ascending attention; ties resolve to the lower channel index."""
    n, c, h, w = f_minus.shape
    if c % 2 != 0:
        raise ValueError(f"channel count must be even, got {c}")
    if attention.shape != (n, c):
        raise ValueError(f"attention shape {tuple(attention.shape)} != ({n}, {c})")
    order = torch.argsort(attention, dim=1, stable=True)[:, : c // 2]
    idx = order[:, :, None, None].expand(-1, -1, h, w)
    return torch.gather(f_minus, 1, idx)


def domain_feature(trace: ForwardTrace, select_half: bool = True) -> torch.Tensor:
    """(N, sum_j C_j) domain descriptor: block-1 mean, block-1 std, block-2
    mean, ... With ``select_half=False`` all domain-branch channels are used
    (ablation wiring), doubling the dimension."""
    parts = []
    for block in trace.blocks:
        feat = block.domain
        if select_half:
            feat = select_low_attention(feat, block.attention)
        mu, sigma = channel_stats(feat)
        parts.append(mu)
        parts.append(sigma)
    return torch.cat(parts, dim=1)


def compute_domain_features(
    extractor,
    images: np.ndarray,
    batch_size: int = 256,
    select_half: bool = True,
    dtype: torch.dtype = torch.float32,
) -> np.ndarray:
    """Run the extractor over a full image array and return the domain
    features as float64 (N, D)."""
    from .model import to_input

    chunks = []
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            x = to_input(images[start : start + batch_size], dtype)
            blocks, embedding = extractor(x)
            trace = ForwardTrace(blocks=blocks, embedding=embedding)
            chunks.append(domain_feature(trace, select_half=select_half).double().numpy())
    return np.concatenate(chunks, axis=0)


@dataclass
class EpochNormalizer:
    """Per-dimension z-score fitted once per epoch on the full feature set;
    near-constant dimensions are left centered but unscaled."""

    mean_: np.ndarray = None
    std_: np.ndarray = None

    def fit(self, feats: np.ndarray) -> "EpochNormalizer":
        self.mean_ = feats.mean(axis=0)
        std = feats.std(axis=0)
        self.std_ = np.where(std < 1e-12, 1.0, std)
        return self

    def transform(self, feats: np.ndarray) -> np.ndarray:
        if self.mean_ is None:
            raise RuntimeError("normalizer used before fit")
        return (feats - self.mean_) / self.std_

    def fit_transform(self, feats: np.ndarray) -> np.ndarray:
        return self.fit(feats).transform(feats)


def entropy_from_probs(p: torch.Tensor, symmetric: bool = True) -> torch.Tensor:
    """Mean over the batch of the (negative) entropy of a scalar Bernoulli
    readout.

    The symmetric form p*log(p) + (1-p)*log(1-p) attains its minimum -ln 2
    exactly at p = 0.5; the one-sided form p*log(p) (minimized at 1/e) is
    kept for comparison runs.
    """
    p = torch.clamp(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    if symmetric:
        per = p * torch.log(p) + (1.0 - p) * torch.log(1.0 - p)
    else:
        per = p * torch.log(p)
    return per.mean()


def domain_entropy_loss(
    f_minus: torch.Tensor, probe_weight: torch.Tensor, symmetric: bool = True
) -> torch.Tensor:
    """Entropy loss of the class probe applied to the pooled domain branch.

    ``probe_weight`` is the (C,) or (1, C) weight of the probe head.
    Minimizing drives the probe toward 0.5, scrubbing task evidence from
    the domain branch.
    """
    pooled = f_minus.mean(dim=(2, 3))
    logit = pooled @ probe_weight.reshape(-1, 1)
    return entropy_from_probs(torch.sigmoid(logit.squeeze(-1)), symmetric=symmetric)
