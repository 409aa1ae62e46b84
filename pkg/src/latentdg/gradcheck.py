"""Central-finite-difference gradient verification.

Used by the test suite to confirm that autograd gradients of every loss
(and of the composed training objective) match an independent numerical
derivative at 64-bit precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_tensor: dict[str, float]
    n_checked: int

    def ok(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error < tol


def finite_difference_check(
    fn,
    named_tensors: list[tuple[str, torch.Tensor]],
    n_coords: int = 20,
    step: float = 1e-5,
    seed: int = 0,
    rel_floor: float = 1e-6,
) -> GradCheckReport:
    """Compare autograd gradients of ``fn()`` against central differences.

    ``fn`` is a zero-argument closure returning a scalar tensor; it must
    recompute the value from the supplied tensors each call (they are
    perturbed in place). At least ``n_coords`` random coordinates are
    checked per tensor (all of them for small tensors). Relative error is
    |a - f| / max(|a|, |f|, rel_floor).
    """
    tensors = [t for _, t in named_tensors]
    for t in tensors:
        if t.dtype != torch.float64:
            raise ValueError("finite-difference checks require float64 tensors")

    loss = fn()
    grads = torch.autograd.grad(loss, tensors, allow_unused=True)
    grads = [g if g is not None else torch.zeros_like(t) for g, t in zip(grads, tensors)]

    rng = np.random.default_rng(seed)
    per_tensor = {}
    max_rel = 0.0
    total = 0
    for (name, tensor), grad in zip(named_tensors, grads):
        flat = tensor.detach().reshape(-1)
        size = flat.numel()
        coords = np.arange(size) if size <= n_coords else rng.choice(size, n_coords, replace=False)
        worst = 0.0
        for c in coords:
            c = int(c)
            orig = flat[c].item()
            with torch.no_grad():
                flat[c] = orig + step
                up = float(fn())
                flat[c] = orig - step
                down = float(fn())
                flat[c] = orig
            fd = (up - down) / (2.0 * step)
            an = float(grad.reshape(-1)[c])
            rel = abs(an - fd) / max(abs(an), abs(fd), rel_floor)
            worst = max(worst, rel)
            total += 1
        per_tensor[name] = worst
        max_rel = max(max_rel, worst)
    return GradCheckReport(max_rel_error=max_rel, per_tensor=per_tensor, n_checked=total)
