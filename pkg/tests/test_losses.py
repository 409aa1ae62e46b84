import math

import numpy as np
import pytest
import torch

from latentdg.gradcheck import finite_difference_check
from latentdg.losses import (
    KernelSpec,
    bce_loss,
    depth_loss,
    kernel_matrix,
    median_heuristic_kernel,
    mmd_biased,
    mmd_to_prior,
)
from latentdg.model import build_model


def _randn(shape, seed):
    return torch.from_numpy(np.random.default_rng(seed).standard_normal(shape))


class TestBce:
    def test_half_probability(self):
        p = torch.full((6,), 0.5, dtype=torch.float64)
        y = torch.tensor([0, 1, 0, 1, 1, 0], dtype=torch.float64)
        assert bce_loss(p, y).item() == pytest.approx(math.log(2.0), abs=1e-12)

    def test_perfect_prediction_is_near_zero(self):
        y = torch.tensor([0.0, 1.0, 1.0, 0.0], dtype=torch.float64)
        assert bce_loss(y.clone(), y).item() == pytest.approx(0.0, abs=1e-5)

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(20)
        p = rng.uniform(0.01, 0.99, 32)
        y = rng.integers(0, 2, 32).astype(np.float64)
        got = bce_loss(torch.from_numpy(p), torch.from_numpy(y)).item()
        total = 0.0
        for pi, yi in zip(p, y):
            total += -(yi * math.log(pi) + (1 - yi) * math.log(1 - pi))
        assert abs(got - total / 32) < 1e-12

    def test_decreasing_in_p_for_positive_labels(self):
        y = torch.ones(1, dtype=torch.float64)
        values = [bce_loss(torch.tensor([p]), y).item() for p in (0.2, 0.5, 0.8, 0.95)]
        assert values == sorted(values, reverse=True)

    def test_rejects_out_of_range(self):
        y = torch.zeros(2, dtype=torch.float64)
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            bce_loss(torch.tensor([0.5, 1.2], dtype=torch.float64), y)
        with pytest.raises(ValueError, match="mismatch"):
            bce_loss(torch.zeros(3, dtype=torch.float64), y)


class TestKernel:
    def test_entries_in_unit_interval_per_bandwidth(self):
        x = _randn((6, 3), 21)
        for bw in (0.5, 1.0, 4.0):
            k = kernel_matrix(x, x, KernelSpec((bw,)))
            assert k.min() > 0.0 and k.max() <= 1.0 + 1e-12

    def test_self_kernel_counts_bandwidths(self):
        x = _randn((5, 3), 22)
        k = kernel_matrix(x, x, KernelSpec((0.5, 1.0, 2.0)))
        assert torch.allclose(torch.diagonal(k), torch.full((5,), 3.0, dtype=x.dtype))

    def test_bandwidth_validation(self):
        with pytest.raises(ValueError, match="bandwidth"):
            KernelSpec(())
        with pytest.raises(ValueError, match="> 0"):
            KernelSpec((1.0, -2.0))

    def test_median_heuristic_positive_and_scaled(self):
        x = _randn((10, 4), 23)
        y = _randn((10, 4), 24)
        spec = median_heuristic_kernel(x, y, scales=(0.5, 1.0, 2.0))
        assert len(spec.bandwidths) == 3
        assert spec.bandwidths[1] == pytest.approx(2.0 * spec.bandwidths[0])
        assert all(b > 0 for b in spec.bandwidths)

    def test_median_heuristic_degenerate_falls_back(self):
        x = torch.ones(4, 2, dtype=torch.float64)
        spec = median_heuristic_kernel(x, x, scales=(1.0,))
        assert spec.bandwidths == (1.0,)


class TestMmd:
    def test_identical_samples_zero(self):
        x = _randn((8, 4), 25)
        assert mmd_to_prior(x, x.clone()).item() <= 1e-10

    def test_singleton_closed_form(self):
        x = torch.tensor([[1.0, 2.0]], dtype=torch.float64)
        y = torch.tensor([[0.5, -1.0]], dtype=torch.float64)
        sigma2 = 1.7
        d2 = ((x - y) ** 2).sum().item()
        expected = 2.0 - 2.0 * math.exp(-d2 / (2.0 * sigma2))
        got = mmd_to_prior(x, y, KernelSpec((sigma2,))).item()
        assert got == pytest.approx(expected, abs=1e-12)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(26)
        x = rng.standard_normal((8, 4))
        y = rng.standard_normal((8, 4))
        kernel = KernelSpec((0.7, 1.3))

        def k(u, v):
            d2 = ((u - v) ** 2).sum()
            return sum(math.exp(-d2 / (2.0 * s)) for s in kernel.bandwidths)

        kxx = sum(k(x[i], x[j]) for i in range(8) for j in range(8)) / 64
        kyy = sum(k(y[i], y[j]) for i in range(8) for j in range(8)) / 64
        kxy = sum(k(x[i], y[j]) for i in range(8) for j in range(8)) / 64
        expected = kxx + kyy - 2 * kxy
        got = mmd_to_prior(torch.from_numpy(x), torch.from_numpy(y), kernel).item()
        assert abs(got - expected) < 1e-10

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(27)
        for _ in range(100):
            n, d = int(rng.integers(2, 9)), int(rng.integers(1, 5))
            x = torch.from_numpy(rng.standard_normal((n, d)))
            y = torch.from_numpy(rng.standard_normal((n, d)))
            assert mmd_to_prior(x, y).item() >= 0.0

    def test_symmetric_in_arguments(self):
        x, y = _randn((6, 3), 28), _randn((6, 3), 29)
        kernel = KernelSpec((1.0,))
        assert mmd_to_prior(x, y, kernel).item() == pytest.approx(
            mmd_to_prior(y, x, kernel).item(), abs=1e-14
        )

    def test_invariant_under_row_permutations(self):
        x, y = _randn((7, 3), 30), _randn((7, 3), 31)
        kernel = KernelSpec((0.9,))
        base = mmd_to_prior(x, y, kernel).item()
        perm = torch.randperm(7)
        assert mmd_to_prior(x[perm], y[perm], kernel).item() == pytest.approx(base, abs=1e-12)

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shapes differ"):
            mmd_to_prior(torch.zeros(3, 2), torch.zeros(4, 2))

    def test_unequal_sizes_allowed_for_diagnostics(self):
        x, y = _randn((5, 3), 32), _randn((9, 3), 33)
        assert mmd_biased(x, y, KernelSpec((1.0,))).item() >= 0.0


class TestDepthLoss:
    def test_equal_maps_zero(self):
        t = _randn((4, 8, 8), 34)
        assert depth_loss(t.clone(), t).item() == 0.0

    def test_offset_by_one_gives_map_size(self):
        t = _randn((3, 8, 8), 35)
        assert depth_loss(t + 1.0, t).item() == pytest.approx(64.0, abs=1e-9)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(36)
        pred = rng.standard_normal((5, 4, 4))
        target = rng.standard_normal((5, 4, 4))
        got = depth_loss(torch.from_numpy(pred), torch.from_numpy(target)).item()
        per_sample = []
        for n in range(5):
            acc = 0.0
            for i in range(4):
                for j in range(4):
                    acc += (pred[n, i, j] - target[n, i, j]) ** 2
            per_sample.append(acc)
        assert abs(got - sum(per_sample) / 5) < 1e-12

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            depth_loss(torch.zeros(2, 8, 8), torch.zeros(2, 4, 4))


class TestLossGradients:
    """Finite-difference checks of each loss through the networks."""

    def _setup(self):
        model = build_model(seed=40, dtype=torch.float64)
        rng = np.random.default_rng(41)
        x = torch.from_numpy(rng.random((6, 6, 32, 32)))
        y = torch.from_numpy(rng.integers(0, 2, 6).astype(np.float64))
        depth_t = torch.from_numpy(rng.random((6, 8, 8)))
        return model, x, y, depth_t

    def test_classification_gradient(self):
        model, x, y, _ = self._setup()
        named = [
            ("conv1.weight", model.extractor.blocks[0].conv.weight),
            ("conv3.weight", model.extractor.blocks[2].conv.weight),
            ("meta.hidden.weight", model.meta.hidden.weight),
            ("meta.out.weight", model.meta.out.weight),
        ]

        def fn():
            _, emb = model.extractor(x)
            _, p = model.meta(emb)
            return bce_loss(p, y)

        assert finite_difference_check(fn, named, n_coords=20).ok(1e-4)

    def test_mmd_gradient(self):
        model, x, _, _ = self._setup()
        prior = _randn((6, 32), 42)
        kernel = KernelSpec((0.5, 1.0))
        named = [
            ("conv2.weight", model.extractor.blocks[1].conv.weight),
            ("meta.hidden.weight", model.meta.hidden.weight),
        ]

        def fn():
            _, emb = model.extractor(x)
            h, _ = model.meta(emb)
            return mmd_to_prior(h, prior, kernel)

        assert finite_difference_check(fn, named, n_coords=20).ok(1e-4)

    def test_depth_gradient(self):
        model, x, _, depth_t = self._setup()
        named = [
            ("conv1.weight", model.extractor.blocks[0].conv.weight),
            ("depth.conv1.weight", model.depth_head.conv1.weight),
            ("depth.conv2.bias", model.depth_head.conv2.bias),
        ]

        def fn():
            blocks, _ = model.extractor(x)
            return depth_loss(model.depth_head(blocks[1].task), depth_t)

        assert finite_difference_check(fn, named, n_coords=20).ok(1e-4)

    def test_entropy_gradient(self):
        from latentdg.domain_features import entropy_from_probs

        model, x, _, _ = self._setup()
        named = [
            ("conv1.weight", model.extractor.blocks[0].conv.weight),
            ("gate2.probe", model.extractor.gates[1].probe.weight),
            ("gate2.squeeze", model.extractor.gates[1].squeeze.weight),
        ]

        def fn():
            blocks, _ = model.extractor(x)
            total = 0.0
            for block, gate in zip(blocks, model.extractor.gates):
                p = torch.sigmoid(gate.probe_logit(block.domain))
                total = total + entropy_from_probs(p)
            return total

        assert finite_difference_check(fn, named, n_coords=20).ok(1e-4)
