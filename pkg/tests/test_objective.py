"""Loss values against hand-computed oracles and gradient finite differences."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hint.errors import InvalidDistribution, ShapeMismatch
from hint.objective import (
    DEFAULT_CLIP,
    ObjectiveConfig,
    ce_loss,
    consistency_grad_logits,
    consistency_loss,
    one_hot,
    rce_loss,
    sce_grad_logits,
    sce_loss,
    sce_loss_sequence,
    softmax,
    total_objective,
    validate_distribution,
)

rng = np.random.default_rng(424242)


def random_distribution(n):
    q = rng.random(n) + 1e-3
    return q / q.sum()


class TestLossValues:
    def test_ce_uniform_binary(self):
        p = one_hot(0, 2)
        q = np.array([0.5, 0.5])
        assert ce_loss(p, q) == pytest.approx(math.log(2))

    def test_rce_uniform_binary(self):
        p = one_hot(0, 2)
        q = np.array([0.5, 0.5])
        # -clip * (1 - q_gold) with clip = -4: 4 * 0.5 = 2.
        assert rce_loss(p, q) == pytest.approx(2.0)

    def test_sce_uniform_binary(self):
        p = one_hot(1, 2)
        q = np.array([0.5, 0.5])
        assert sce_loss(p, q) == pytest.approx(math.log(2) + 2.0)

    def test_perfect_prediction_zero(self):
        p = one_hot(1, 3)
        q = np.array([0.0, 1.0, 0.0])
        assert sce_loss(p, q) == pytest.approx(0.0)

    def test_clip_scales_reverse_term(self):
        p = one_hot(0, 2)
        q = np.array([0.25, 0.75])
        assert rce_loss(p, q, clip=-8.0) == pytest.approx(2 * rce_loss(p, q, clip=-4.0))

    def test_reverse_term_can_be_disabled(self):
        p = one_hot(0, 2)
        q = np.array([0.25, 0.75])
        assert sce_loss(p, q, use_reverse_term=False) == pytest.approx(ce_loss(p, q))

    def test_sequence_loss_is_token_mean(self):
        ps = [one_hot(0, 2), one_hot(1, 2)]
        qs = [np.array([0.5, 0.5]), np.array([0.1, 0.9])]
        per_token = [sce_loss(p, q) for p, q in zip(ps, qs)]
        assert sce_loss_sequence(ps, qs) == pytest.approx(np.mean(per_token))

    def test_consistency_symmetric_and_zero_at_equality(self):
        q1 = random_distribution(4)
        q2 = random_distribution(4)
        assert consistency_loss(q1, q2) == pytest.approx(consistency_loss(q2, q1))
        assert consistency_loss(q1, q1) == pytest.approx(0.0)

    def test_consistency_oracle_value(self):
        q1 = np.array([0.75, 0.25])
        q2 = np.array([0.25, 0.75])
        expected = sum(
            a * math.log(a / b) + b * math.log(b / a) for a, b in zip(q1, q2)
        )
        assert consistency_loss(q1, q2) == pytest.approx(expected)

    def test_consistency_on_sequences(self):
        q1 = [np.array([0.75, 0.25]), np.array([0.5, 0.5])]
        q2 = [np.array([0.25, 0.75]), np.array([0.5, 0.5])]
        per_pos = [consistency_loss(a, b) for a, b in zip(q1, q2)]
        assert consistency_loss(q1, q2) == pytest.approx(np.mean(per_pos))

    def test_total_objective_composition(self):
        cfg = ObjectiveConfig(mu=0.5)
        p = one_hot(0, 3)
        q1 = random_distribution(3)
        q2 = random_distribution(3)
        expected = (
            sce_loss(p, q1, cfg.log_zero_clip)
            + sce_loss(p, q2, cfg.log_zero_clip)
            + cfg.mu * consistency_loss(q1, q2)
        )
        assert total_objective(q1, q2, p, cfg) == pytest.approx(expected)

    @given(gold=st.integers(0, 3), n=st.just(4))
    def test_sce_nonnegative(self, gold, n):
        q = random_distribution(n)
        assert sce_loss(one_hot(gold, n), q) >= 0.0


class TestValidation:
    def test_non_distribution_rejected(self):
        with pytest.raises(InvalidDistribution):
            validate_distribution(np.array([0.5, 0.6]))
        with pytest.raises(InvalidDistribution):
            validate_distribution(np.array([-0.1, 1.1]))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeMismatch):
            ce_loss(one_hot(0, 2), random_distribution(3))

    def test_config_bounds(self):
        with pytest.raises(ValueError):
            ObjectiveConfig(mu=-0.1)
        with pytest.raises(ValueError):
            ObjectiveConfig(log_zero_clip=0.5)


def finite_diff(f, z, h=1e-5):
    grad = np.zeros_like(z)
    for i in range(len(z)):
        up, down = z.copy(), z.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (f(up) - f(down)) / (2 * h)
    return grad


def rel_err(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


class TestGradients:
    def test_sce_grad_matches_finite_difference(self):
        for trial in range(100):
            n = int(rng.integers(2, 6))
            gold = int(rng.integers(0, n))
            z = rng.normal(0, 2, n)
            clip = float(rng.choice([-2.0, -4.0, -8.0]))

            def loss(logits):
                return sce_loss(one_hot(gold, n), softmax(logits), clip)

            analytic = sce_grad_logits(gold, softmax(z), clip)
            assert rel_err(analytic, finite_diff(loss, z)) <= 1e-4

    def test_ce_grad_matches_finite_difference(self):
        for trial in range(100):
            n = int(rng.integers(2, 6))
            gold = int(rng.integers(0, n))
            z = rng.normal(0, 2, n)

            def loss(logits):
                return ce_loss(one_hot(gold, n), softmax(logits))

            analytic = sce_grad_logits(gold, softmax(z), use_reverse_term=False)
            assert rel_err(analytic, finite_diff(loss, z)) <= 1e-4

    def test_consistency_grad_matches_finite_difference(self):
        for trial in range(100):
            n = int(rng.integers(2, 6))
            z1 = rng.normal(0, 2, n)
            z2 = rng.normal(0, 2, n)
            g1, g2 = consistency_grad_logits(softmax(z1), softmax(z2))

            def loss1(z):
                return consistency_loss(softmax(z), softmax(z2))

            def loss2(z):
                return consistency_loss(softmax(z1), softmax(z))

            assert rel_err(g1, finite_diff(loss1, z1)) <= 1e-4
            assert rel_err(g2, finite_diff(loss2, z2)) <= 1e-4

    def test_total_objective_grad_matches_finite_difference(self):
        cfg = ObjectiveConfig(mu=0.5)
        for trial in range(100):
            n = int(rng.integers(2, 6))
            gold = int(rng.integers(0, n))
            z1 = rng.normal(0, 2, n)
            z2 = rng.normal(0, 2, n)

            def total(za, zb):
                return total_objective(softmax(za), softmax(zb), one_hot(gold, n), cfg)

            q1, q2 = softmax(z1), softmax(z2)
            c1, c2 = consistency_grad_logits(q1, q2)
            a1 = sce_grad_logits(gold, q1, cfg.log_zero_clip) + cfg.mu * c1
            a2 = sce_grad_logits(gold, q2, cfg.log_zero_clip) + cfg.mu * c2
            assert rel_err(a1, finite_diff(lambda z: total(z, z2), z1)) <= 1e-4
            assert rel_err(a2, finite_diff(lambda z: total(z1, z), z2)) <= 1e-4


class TestSoftmax:
    def test_shift_invariance_and_normalization(self):
        z = rng.normal(0, 3, 5)
        q = softmax(z)
        assert q.sum() == pytest.approx(1.0)
        assert np.allclose(softmax(z + 100.0), q)

    def test_extreme_logits_stable(self):
        q = softmax(np.array([1000.0, -1000.0]))
        assert np.all(np.isfinite(q))
        assert q[0] == pytest.approx(1.0)


def test_default_clip_constant():
    assert DEFAULT_CLIP == -4.0
    assert ObjectiveConfig().log_zero_clip == -4.0
    assert ObjectiveConfig().mu == 0.5
