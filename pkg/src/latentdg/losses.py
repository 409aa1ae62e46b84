"""Supervised objectives: binary cross-entropy on probabilities, biased
squared MMD against prior draws on the adaptation layer, and squared-error
depth regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class KernelSpec:
    """Sum of Gaussian RBF kernels exp(-||x-y||^2 / (2*sigma2)) over a list
    of sigma^2 bandwidths."""

    bandwidths: tuple[float, ...]

    def __post_init__(self):
        if not self.bandwidths:
            raise ValueError("KernelSpec needs at least one bandwidth")
        for b in self.bandwidths:
            if b <= 0:
                raise ValueError(f"bandwidths must be > 0, got {b}")


def median_heuristic_kernel(
    x: torch.Tensor, y: torch.Tensor, scales: tuple[float, ...] = (0.5, 1.0, 2.0)
) -> KernelSpec:
    """Bandwidths = scales * median pairwise squared distance of the merged
    sample. Computed without gradient tracking; degenerate (all-equal)
    samples fall back to bandwidth 1."""
    with torch.no_grad():
        merged = torch.cat([x, y], dim=0)
        d2 = torch.cdist(merged, merged).pow(2)
        n = merged.shape[0]
        off_diag = d2[~torch.eye(n, dtype=torch.bool)]
        med = off_diag.median().item() if off_diag.numel() else 0.0
    if med <= 0.0:
        med = 1.0
    return KernelSpec(bandwidths=tuple(s * med for s in scales))


def kernel_matrix(x: torch.Tensor, y: torch.Tensor, kernel: KernelSpec) -> torch.Tensor:
    d2 = torch.cdist(x, y).pow(2)
    out = torch.zeros_like(d2)
    for sigma2 in kernel.bandwidths:
        out = out + torch.exp(-d2 / (2.0 * sigma2))
    return out


def mmd_biased(x: torch.Tensor, y: torch.Tensor, kernel: KernelSpec) -> torch.Tensor:
    """Biased (V-statistic) squared MMD; nonnegative by construction, sample
    sizes may differ."""
    k_xx = kernel_matrix(x, x, kernel).mean()
    k_yy = kernel_matrix(y, y, kernel).mean()
    k_xy = kernel_matrix(x, y, kernel).mean()
    return (k_xx + k_yy - 2.0 * k_xy).clamp_min(0.0)


def mmd_to_prior(
    h: torch.Tensor, prior_draw: torch.Tensor, kernel: KernelSpec | None = None
) -> torch.Tensor:
    """Squared MMD between adaptation features and an equally sized prior
    draw. With ``kernel=None`` the bandwidths come from the median heuristic
    over the merged batch (recomputed per call, treated as constants)."""
    if h.shape != prior_draw.shape:
        raise ValueError(f"sample shapes differ: {tuple(h.shape)} vs {tuple(prior_draw.shape)}")
    if kernel is None:
        kernel = median_heuristic_kernel(h, prior_draw)
    return mmd_biased(h, prior_draw, kernel)


def bce_loss(p: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Mean negative log-likelihood of Bernoulli labels under probabilities
    p; p is clamped away from {0, 1} before the logs."""
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: p {tuple(p.shape)} vs y {tuple(y.shape)}")
    if not torch.isfinite(p).all() or p.min() < 0.0 or p.max() > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    p = torch.clamp(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = y.to(p.dtype)
    return -(y * torch.log(p) + (1.0 - y) * torch.log(1.0 - p)).mean()


def depth_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean over the batch of the summed squared error of each depth map."""
    if pred.shape != target.shape:
        raise ValueError(
            f"shape mismatch: pred {tuple(pred.shape)} vs target {tuple(target.shape)}"
        )
    return (pred - target.to(pred.dtype)).pow(2).sum(dim=(-2, -1)).mean()
