"""Tests for the distillation losses and conditional target selection."""

import numpy as np
import numpy.testing as npt
import pytest

from distilkit.errors import (
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidParameterError,
)
from distilkit.losses import (
    ConditionalTarget,
    LabeledBatch,
    conditional_loss,
    conditional_targets,
    cross_entropy_with_targets,
    entropy_rows,
    hard_ce_loss,
    interpolated_loss,
    kl_divergence,
    kl_ts_loss,
    one_hot,
    soft_ts_loss,
    teacher_accuracy,
)
from distilkit.numerics import softmax
from distilkit.rng import stream

# Expected values below were computed with an mpmath (50-digit) oracle.
KL_07_03_VS_06_04 = 0.021600854143546535
LN2 = 0.6931471805599453
SOFT_CE_07_03_VS_06_04 = 0.6324651561984400
HARD_CE_06 = 0.5108256237659907
INTERP_HALF = 0.5716453899822153


def logits_for(probs):
    """Logits whose softmax reproduces ``probs`` (up to float rounding)."""
    return np.log(np.asarray(probs, dtype=np.float64))


def batch_for(teacher, labels, student_probs):
    return LabeledBatch(np.asarray(teacher, float), np.asarray(labels), logits_for(student_probs))


def random_batch(rng, n=None, c=None):
    n = n or int(rng.integers(2, 17))
    c = c or int(rng.integers(2, 7))
    teacher = rng.random((n, c)) + 0.05
    teacher /= teacher.sum(axis=1, keepdims=True)
    labels = rng.integers(0, c, size=n)
    logits = rng.normal(0.0, 2.0, size=(n, c))
    return LabeledBatch(teacher, labels, logits)


class TestKlDivergence:
    def test_self_divergence_zero(self):
        rng = stream(1, "kl")
        for _ in range(100):
            p = rng.random(5) + 0.01
            p /= p.sum()
            assert abs(kl_divergence(p, p)) <= 1e-12

    def test_oracle_value(self):
        assert kl_divergence([0.7, 0.3], [0.6, 0.4]) == pytest.approx(KL_07_03_VS_06_04, abs=1e-12)

    def test_one_hot_against_uniform_is_ln2(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(LN2, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            kl_divergence([1.0, 0.0], [0.5, 0.25, 0.25])

    def test_never_materially_negative(self):
        rng = stream(2, "kl")
        for _ in range(500):
            p = rng.random(4) + 1e-6
            p /= p.sum()
            q = rng.random(4) + 1e-6
            q /= q.sum()
            assert kl_divergence(p, q) >= -1e-12


class TestSoftTsLoss:
    def test_uniform_self_cross_entropy(self):
        batch = LabeledBatch(np.array([[0.5, 0.5]]), np.array([0]), np.zeros((1, 2)))
        loss, _ = soft_ts_loss(batch)
        assert loss == pytest.approx(LN2, abs=1e-15)

    def test_oracle_value(self):
        loss, _ = soft_ts_loss(batch_for([[0.7, 0.3]], [0], [[0.6, 0.4]]))
        assert loss == pytest.approx(SOFT_CE_07_03_VS_06_04, abs=1e-9)

    def test_minimized_at_teacher_probs(self):
        # Grid scan over 2-class student distributions for a fixed teacher row.
        teacher = np.array([[0.7, 0.3]])
        best = min(
            (soft_ts_loss(batch_for(teacher, [0], [[p, 1 - p]]))[0], p)
            for p in np.linspace(0.01, 0.99, 197)
        )
        assert best[1] == pytest.approx(0.7, abs=0.01)

    def test_gradient_closed_form(self):
        rng = stream(3, "soft")
        batch = random_batch(rng)
        _, grad = soft_ts_loss(batch)
        expected = (softmax(batch.student_logits) - batch.teacher_posteriors) / len(batch)
        npt.assert_allclose(grad, expected, atol=1e-15)


class TestHardCeLoss:
    def test_perfect_prediction_zero_loss(self):
        batch = LabeledBatch(np.array([[1.0, 0.0]]), np.array([0]), np.array([[40.0, -40.0]]))
        loss, _ = hard_ce_loss(batch)
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_oracle_value(self):
        loss, _ = hard_ce_loss(batch_for([[1.0, 0.0]], [0], [[0.6, 0.4]]))
        assert loss == pytest.approx(HARD_CE_06, abs=1e-9)

    def test_equals_soft_when_teacher_one_hot(self):
        rng = stream(4, "hard")
        for _ in range(20):
            n, c = int(rng.integers(1, 9)), int(rng.integers(2, 6))
            labels = rng.integers(0, c, size=n)
            batch = LabeledBatch(one_hot(labels, c), labels, rng.normal(size=(n, c)))
            assert hard_ce_loss(batch)[0] == soft_ts_loss(batch)[0]


class TestInterpolatedLoss:
    def test_lambda_one_is_soft_bitwise(self):
        rng = stream(5, "interp")
        for _ in range(20):
            batch = random_batch(rng)
            l1, g1 = interpolated_loss(batch, 1.0)
            l2, g2 = soft_ts_loss(batch)
            assert l1 == l2
            assert g1.tobytes() == g2.tobytes()

    def test_lambda_zero_is_hard_bitwise(self):
        rng = stream(6, "interp")
        for _ in range(20):
            batch = random_batch(rng)
            l1, g1 = interpolated_loss(batch, 0.0)
            l2, g2 = hard_ce_loss(batch)
            assert l1 == l2
            assert g1.tobytes() == g2.tobytes()

    def test_oracle_value_half(self):
        loss, _ = interpolated_loss(batch_for([[0.7, 0.3]], [0], [[0.6, 0.4]]), 0.5)
        assert loss == pytest.approx(INTERP_HALF, abs=1e-9)

    def test_linearity_identity(self):
        rng = stream(7, "interp")
        for _ in range(100):
            batch = random_batch(rng)
            hard = hard_ce_loss(batch)[0]
            soft = soft_ts_loss(batch)[0]
            for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
                mixed = interpolated_loss(batch, lam)[0]
                assert mixed == pytest.approx((1 - lam) * hard + lam * soft, abs=1e-12)

    def test_invalid_lambda(self):
        batch = random_batch(stream(8, "interp"))
        for lam in (-0.1, 1.1):
            with pytest.raises(InvalidParameterError):
                interpolated_loss(batch, lam)


class TestConditionalTargets:
    def test_correct_teacher_soft(self):
        targets = conditional_targets(np.array([[0.7, 0.2, 0.1]]), np.array([0]))
        assert targets[0].teacher_correct
        npt.assert_array_equal(targets[0].vector(3), [0.7, 0.2, 0.1])

    def test_wrong_teacher_hard(self):
        targets = conditional_targets(np.array([[0.2, 0.7, 0.1]]), np.array([0]))
        assert not targets[0].teacher_correct
        npt.assert_array_equal(targets[0].vector(3), [1.0, 0.0, 0.0])

    def test_tie_breaks_to_lowest_index(self):
        # argmax of (0.5, 0.5, 0) resolves to class 0, which is not the label.
        targets = conditional_targets(np.array([[0.5, 0.5, 0.0]]), np.array([1]))
        assert not targets[0].teacher_correct
        npt.assert_array_equal(targets[0].vector(3), [0.0, 1.0, 0.0])

    def test_label_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            conditional_targets(np.array([[0.5, 0.5]]), np.array([2]))

    def test_branch_consistency_with_teacher_accuracy(self):
        rng = stream(9, "cond")
        for _ in range(50):
            batch = random_batch(rng)
            targets = conditional_targets(batch.teacher_posteriors, batch.labels)
            soft_fraction = sum(t.teacher_correct for t in targets) / len(targets)
            assert soft_fraction == teacher_accuracy(batch.teacher_posteriors, batch.labels)

    def test_target_exclusivity_enforced(self):
        with pytest.raises(InvalidParameterError):
            ConditionalTarget(teacher_correct=True, hard=1)
        with pytest.raises(InvalidParameterError):
            ConditionalTarget(teacher_correct=False, soft=np.array([1.0, 0.0]))
        with pytest.raises(InvalidParameterError):
            ConditionalTarget(teacher_correct=True, soft=np.array([1.0, 0.0]), hard=0)


class TestConditionalLoss:
    def test_all_soft_equals_soft_bitwise(self):
        rng = stream(10, "cond")
        for _ in range(10):
            batch = random_batch(rng)
            # Force correctness: labels equal the teacher argmax.
            labels = batch.teacher_posteriors.argmax(axis=1)
            batch = LabeledBatch(batch.teacher_posteriors, labels, batch.student_logits)
            targets = conditional_targets(batch.teacher_posteriors, labels)
            assert all(t.teacher_correct for t in targets)
            l1, g1 = conditional_loss(targets, batch.student_logits)
            l2, g2 = soft_ts_loss(batch)
            assert l1 == l2 and g1.tobytes() == g2.tobytes()

    def test_all_hard_equals_hard_bitwise(self):
        rng = stream(11, "cond")
        for _ in range(10):
            batch = random_batch(rng)
            labels = (batch.teacher_posteriors.argmax(axis=1) + 1) % batch.num_classes
            batch = LabeledBatch(batch.teacher_posteriors, labels, batch.student_logits)
            targets = conditional_targets(batch.teacher_posteriors, labels)
            assert not any(t.teacher_correct for t in targets)
            l1, g1 = conditional_loss(targets, batch.student_logits)
            l2, g2 = hard_ce_loss(batch)
            assert l1 == l2 and g1.tobytes() == g2.tobytes()

    def test_mixed_batch_is_mean_of_per_sample_losses(self):
        # Brute-force oracle: score each sample alone, then average.
        teacher = np.array([[0.6, 0.3, 0.1], [0.1, 0.6, 0.3]])
        labels = np.array([0, 2])  # first correct, second wrong
        logits = np.array([[1.0, 0.2, -0.4], [0.3, 0.5, -1.0]])
        targets = conditional_targets(teacher, labels)
        whole, _ = conditional_loss(targets, logits)
        singles = [
            conditional_loss([t], logits[i : i + 1])[0] for i, t in enumerate(targets)
        ]
        assert whole == pytest.approx(np.mean(singles), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(EmptyDatasetError):
            conditional_loss([], np.zeros((0, 3)))

    def test_batch_size_mismatch(self):
        targets = conditional_targets(np.array([[0.9, 0.1]]), np.array([0]))
        with pytest.raises(DimensionMismatchError):
            conditional_loss(targets, np.zeros((2, 2)))


class TestTeacherAccuracy:
    def test_one_hot_teacher_perfect(self):
        labels = np.array([2, 0, 1])
        assert teacher_accuracy(one_hot(labels, 3), labels) == 1.0

    def test_never_correct(self):
        labels = np.array([0, 0])
        assert teacher_accuracy(np.array([[0.1, 0.9], [0.2, 0.8]]), labels) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyDatasetError):
            teacher_accuracy(np.zeros((0, 3)), np.array([], dtype=int))


class TestKlTsLoss:
    def test_equals_soft_minus_entropy(self):
        rng = stream(12, "klts")
        for _ in range(50):
            batch = random_batch(rng)
            kl_val, kl_grad = kl_ts_loss(batch)
            soft_val, soft_grad = soft_ts_loss(batch)
            expected = soft_val - float(entropy_rows(batch.teacher_posteriors).mean())
            assert kl_val == pytest.approx(expected, abs=1e-12)
            assert kl_grad.tobytes() == soft_grad.tobytes()

    def test_zero_at_matching_distributions(self):
        teacher = np.array([[0.3, 0.7]])
        batch = LabeledBatch(teacher, np.array([1]), np.log(teacher))
        assert kl_ts_loss(batch)[0] == pytest.approx(0.0, abs=1e-12)


class TestGradientProperties:
    def test_rows_sum_to_zero(self):
        rng = stream(13, "rows")
        for _ in range(30):
            batch = random_batch(rng)
            targets = conditional_targets(batch.teacher_posteriors, batch.labels)
            grads = [
                soft_ts_loss(batch)[1],
                hard_ce_loss(batch)[1],
                interpolated_loss(batch, 0.3)[1],
                kl_ts_loss(batch)[1],
                conditional_loss(targets, batch.student_logits)[1],
            ]
            for g in grads:
                assert np.abs(g.sum(axis=1)).max() <= 1e-12

    def test_kl_ce_relation_per_sample(self):
        # Soft per-sample cross-entropy minus teacher entropy equals KL.
        rng = stream(14, "klce")
        for _ in range(200):
            c = int(rng.integers(2, 8))
            p = rng.random(c) + 1e-3
            p /= p.sum()
            q = rng.random(c) + 1e-3
            q /= q.sum()
            ce = float(-(p * np.log(np.maximum(q, 1e-30))).sum())
            ent = float(entropy_rows(p[None, :])[0])
            assert ce - ent == pytest.approx(kl_divergence(p, q), abs=1e-10)


class TestTemperature:
    def test_identities_hold_at_t2(self):
        rng = stream(15, "temp")
        batch = random_batch(rng)
        l_soft, g_soft = soft_ts_loss(batch, temperature=2.0)
        l_interp, g_interp = interpolated_loss(batch, 1.0, temperature=2.0)
        assert l_soft == l_interp and g_soft.tobytes() == g_interp.tobytes()
        l_hard, g_hard = hard_ce_loss(batch, temperature=2.0)
        l0, g0 = interpolated_loss(batch, 0.0, temperature=2.0)
        assert l_hard == l0 and g_hard.tobytes() == g0.tobytes()

    def test_conditional_matches_soft_at_t2_when_all_correct(self):
        rng = stream(16, "temp")
        batch = random_batch(rng)
        labels = batch.teacher_posteriors.argmax(axis=1)
        batch = LabeledBatch(batch.teacher_posteriors, labels, batch.student_logits)
        targets = conditional_targets(batch.teacher_posteriors, labels)
        l1, g1 = conditional_loss(targets, batch.student_logits, temperature=2.0)
        l2, g2 = soft_ts_loss(batch, temperature=2.0)
        assert l1 == pytest.approx(l2, abs=1e-12)
        npt.assert_allclose(g1, g2, atol=1e-15)

    def test_gradient_scales_with_temperature(self):
        rng = stream(17, "temp")
        batch = random_batch(rng)
        _, grad = soft_ts_loss(batch, temperature=4.0)
        from distilkit.numerics import flatten_probs

        probs = softmax(batch.student_logits, 4.0)
        targets = flatten_probs(batch.teacher_posteriors, 4.0)
        npt.assert_allclose(grad, (probs - targets) / (len(batch) * 4.0), atol=1e-15)


class TestLabeledBatchValidation:
    def test_rejects_misaligned(self):
        with pytest.raises(DimensionMismatchError):
            LabeledBatch(np.array([[0.5, 0.5]]), np.array([0, 1]), np.zeros((1, 2)))

    def test_rejects_invalid_posteriors(self):
        with pytest.raises(InvalidParameterError):
            LabeledBatch(np.array([[0.9, 0.9]]), np.array([0]), np.zeros((1, 2)))

    def test_rejects_label_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            LabeledBatch(np.array([[0.5, 0.5]]), np.array([3]), np.zeros((1, 2)))

    def test_cross_entropy_core_exposed(self):
        logits = np.array([[0.0, 0.0]])
        loss, grad = cross_entropy_with_targets(logits, np.array([[1.0, 0.0]]))
        assert loss == pytest.approx(LN2, abs=1e-15)
        npt.assert_allclose(grad, [[-0.5, 0.5]], atol=1e-15)
