import json
import logging

import numpy as np
import pytest

from latentdg.losses import KernelSpec
from latentdg.metrics import (
    eer_threshold,
    evaluate_scores,
    far_frr,
    hter,
    inter_domain_mmd,
    roc_and_auc,
    write_roc_csv,
)


def _pair_count_auc(scores, labels):
    """Independent oracle: probability a random positive outscores a random
    negative, ties counting half."""
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


class TestRocAuc:
    def test_perfect_separation(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([1, 1, 0, 0])
        roc, auc = roc_and_auc(scores, labels)
        assert auc == pytest.approx(1.0)
        assert roc[0].tolist() == [0.0, 0.0] and roc[-1].tolist() == [1.0, 1.0]

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(50)
        scores = rng.random(10_000)
        labels = rng.integers(0, 2, 10_000)
        _, auc = roc_and_auc(scores, labels)
        assert abs(auc - 0.5) < 0.02

    def test_negation_symmetry(self):
        rng = np.random.default_rng(51)
        scores = rng.random(300)
        labels = rng.integers(0, 2, 300)
        _, auc = roc_and_auc(scores, labels)
        _, neg_auc = roc_and_auc(-scores, labels)
        assert neg_auc == pytest.approx(1.0 - auc, abs=1e-12)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(52)
        for trial in range(50):
            n = int(rng.integers(20, 200))
            scores = rng.standard_normal(n)
            labels = np.concatenate([[0, 1], rng.integers(0, 2, n - 2)])
            _, base = roc_and_auc(scores, labels)
            for transform in (np.exp, lambda s: 3.0 * s - 7.0, np.tanh):
                _, got = roc_and_auc(transform(scores), labels)
                assert got == pytest.approx(base, abs=1e-12)

    def test_matches_pair_counting_oracle_with_ties(self):
        rng = np.random.default_rng(53)
        for _ in range(20):
            scores = rng.integers(0, 5, 60).astype(float)  # heavy ties
            labels = np.concatenate([[0, 1], rng.integers(0, 2, 58)])
            _, auc = roc_and_auc(scores, labels)
            assert auc == pytest.approx(_pair_count_auc(scores, labels), abs=1e-12)

    def test_roc_monotone_in_far(self):
        rng = np.random.default_rng(54)
        scores = rng.random(100)
        labels = np.concatenate([[0, 1], rng.integers(0, 2, 98)])
        roc, _ = roc_and_auc(scores, labels)
        assert np.all(np.diff(roc[:, 0]) >= 0)
        assert np.all(np.diff(roc[:, 1]) >= 0)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            roc_and_auc(np.array([0.1, 0.2]), np.array([1, 1]))


class TestHter:
    def test_perfect_at_eer_threshold(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([1, 1, 0, 0])
        thr, eer = eer_threshold(scores, labels)
        assert hter(scores, labels, thr) == pytest.approx(0.0)
        assert eer == pytest.approx(0.0)

    def test_all_equal_scores_half(self):
        scores = np.full(10, 0.7)
        labels = np.array([0, 1] * 5)
        assert hter(scores, labels, 0.7) == pytest.approx(0.5)

    def test_random_scores_near_half(self):
        rng = np.random.default_rng(55)
        scores = rng.random(10_000)
        labels = rng.integers(0, 2, 10_000)
        thr, _ = eer_threshold(scores, labels)
        assert abs(hter(scores, labels, thr) - 0.5) < 0.02

    def test_hter_at_eer_matches_eer_within_grid_step(self):
        rng = np.random.default_rng(56)
        scores = np.concatenate([rng.normal(0.6, 0.2, 300), rng.normal(0.4, 0.2, 300)])
        labels = np.concatenate([np.ones(300), np.zeros(300)])
        thr, eer = eer_threshold(scores, labels)
        far, frr = far_frr(scores, labels, thr)
        # one grid step = one sample flipping side
        assert abs(far - frr) <= 1.0 / 300 + 1e-12
        assert hter(scores, labels, thr) == pytest.approx(eer, abs=1e-12)


class TestInterDomainMmd:
    def test_random_halves_of_one_distribution_small(self):
        rng = np.random.default_rng(57)
        emb = rng.standard_normal((400, 8))
        partition = np.array([0] * 200 + [1] * 200)
        _, mean_off = inter_domain_mmd(emb, partition)
        assert mean_off < 0.05

    def test_shifted_gaussians_much_larger(self):
        rng = np.random.default_rng(58)
        a = rng.standard_normal((150, 8))
        b = rng.standard_normal((150, 8)) + 3.0
        emb = np.concatenate([a, b])
        partition = np.array([0] * 150 + [1] * 150)
        kernel = KernelSpec((8.0,))
        _, shifted = inter_domain_mmd(emb, partition, kernel)

        halves = np.array([0] * 75 + [1] * 75)
        _, baseline = inter_domain_mmd(a, halves, kernel)
        assert shifted > 10.0 * max(baseline, 1e-6)

    def test_identical_sets_zero(self):
        emb = np.tile(np.random.default_rng(59).standard_normal((40, 4)), (2, 1))
        partition = np.array([0] * 40 + [1] * 40)
        matrix, mean_off = inter_domain_mmd(emb, partition)
        assert mean_off == pytest.approx(0.0, abs=1e-10)
        assert np.all(np.diag(matrix) == 0.0)

    def test_symmetric_zero_diagonal(self):
        rng = np.random.default_rng(60)
        emb = rng.standard_normal((90, 5))
        partition = rng.integers(0, 3, 90)
        matrix, _ = inter_domain_mmd(emb, partition)
        assert np.allclose(matrix, matrix.T)
        assert np.all(np.diag(matrix) == 0.0)

    def test_singleton_domain_skipped_with_warning(self, caplog):
        emb = np.random.default_rng(61).standard_normal((41, 4))
        partition = np.array([0] * 20 + [1] * 20 + [2])
        with caplog.at_level(logging.WARNING):
            matrix, mean_off = inter_domain_mmd(emb, partition)
        assert "singleton" in caplog.text
        assert np.isnan(matrix[0, 2]) and np.isfinite(matrix[0, 1])
        assert np.isfinite(mean_off)

    def test_needs_two_domains(self):
        with pytest.raises(ValueError, match="two domains"):
            inter_domain_mmd(np.ones((5, 2)), np.zeros(5))


class TestReport:
    def test_evaluate_scores_schema(self):
        rng = np.random.default_rng(62)
        scores = rng.random(100)
        labels = rng.integers(0, 2, 100)
        domains = rng.integers(3, 5, 100)
        report = evaluate_scores(scores, labels, threshold=0.5, domains=domains)
        payload = json.loads(report.to_json())
        assert set(payload) == {"auc", "hter", "eer_threshold", "n_samples", "per_domain"}
        assert set(payload["per_domain"]) == {"3", "4"}
        for entry in payload["per_domain"].values():
            assert {"n", "mean_score", "hter"} <= set(entry)

    def test_write_roc_csv(self, tmp_path):
        roc = np.array([[0.0, 0.0], [0.5, 0.9], [1.0, 1.0]])
        path = tmp_path / "roc.csv"
        write_roc_csv(str(path), roc)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "far,tpr"
        assert len(lines) == 4
