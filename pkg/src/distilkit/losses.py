"""Distillation losses over student logits.

KL divergence between teacher and student posteriors, soft cross-entropy
against teacher posteriors, hard cross-entropy against one-hot labels,
the interpolated blend of the two, and the conditional loss that picks
the soft target when the teacher's argmax matches the ground truth and
backs off to the hard label otherwise.

Every training loss returns ``(loss, dloss_dlogits)`` where the loss is
the mean over the batch and the gradient is taken with respect to the
student's pre-softmax logits, giving the closed form
``(student_probs - target) / (N * T)`` per row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyDatasetError, InvalidParameterError
from .numerics import as_matrix, flatten_probs, softmax, validate_prob_rows

__all__ = [
    "LOG_FLOOR",
    "LabeledBatch",
    "ConditionalTarget",
    "one_hot",
    "entropy_rows",
    "cross_entropy_with_targets",
    "kl_divergence",
    "soft_ts_loss",
    "hard_ce_loss",
    "interpolated_loss",
    "kl_ts_loss",
    "conditional_targets",
    "conditional_loss",
    "teacher_accuracy",
]

# Student probabilities are floored here before log so that an underflowed
# class cannot produce -Inf; at float64 scale this leaves gradients intact.
LOG_FLOOR = 1e-30


def _validate_labels(labels, num_classes: int) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1:
        raise DimensionMismatchError(f"labels must be 1-D, got shape {y.shape}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == y.astype(np.int64)):
            raise InvalidParameterError("labels must be integers")
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise InvalidParameterError(
            f"labels must lie in [0, {num_classes}), got range [{y.min()}, {y.max()}]"
        )
    return y


def one_hot(labels, num_classes: int) -> np.ndarray:
    """One-hot rows for integer labels."""
    y = _validate_labels(labels, num_classes)
    out = np.zeros((y.size, num_classes))
    out[np.arange(y.size), y] = 1.0
    return out


@dataclass
class LabeledBatch:
    """Aligned teacher posteriors, ground-truth labels, and student logits."""

    teacher_posteriors: np.ndarray  # (N, C)
    labels: np.ndarray  # (N,) ints in [0, C)
    student_logits: np.ndarray  # (N, C)

    def __post_init__(self):
        self.teacher_posteriors = validate_prob_rows(self.teacher_posteriors)
        self.student_logits = as_matrix(self.student_logits, "student_logits")
        n, c = self.teacher_posteriors.shape
        if self.student_logits.shape != (n, c):
            raise DimensionMismatchError(
                f"student logits shape {self.student_logits.shape} != ({n}, {c})"
            )
        self.labels = _validate_labels(self.labels, c)
        if self.labels.shape[0] != n:
            raise DimensionMismatchError(
                f"{self.labels.shape[0]} labels for a batch of {n} samples"
            )

    def __len__(self) -> int:
        return self.teacher_posteriors.shape[0]

    @property
    def num_classes(self) -> int:
        return self.teacher_posteriors.shape[1]


@dataclass(frozen=True)
class ConditionalTarget:
    """Per-sample training target: exactly one of a soft posterior or a hard class.

    ``teacher_correct`` records which branch fired: True means the teacher's
    argmax matched the label and ``soft`` holds its posterior row; False
    means ``hard`` holds the ground-truth class index.
    """

    teacher_correct: bool
    soft: np.ndarray | None = None
    hard: int | None = None

    def __post_init__(self):
        if self.teacher_correct:
            if self.soft is None or self.hard is not None:
                raise InvalidParameterError("correct-teacher target must carry only a soft row")
        else:
            if self.hard is None or self.soft is not None:
                raise InvalidParameterError("wrong-teacher target must carry only a hard class")

    def vector(self, num_classes: int) -> np.ndarray:
        """Dense target row: the posterior itself, or a one-hot at the class."""
        if self.teacher_correct:
            row = np.asarray(self.soft, dtype=np.float64)
            if row.shape != (num_classes,):
                raise DimensionMismatchError(f"soft target has {row.shape[0]} classes, expected {num_classes}")
            return row
        if not 0 <= int(self.hard) < num_classes:
            raise InvalidParameterError(f"hard class {self.hard} out of range [0, {num_classes})")
        row = np.zeros(num_classes)
        row[int(self.hard)] = 1.0
        return row


def cross_entropy_with_targets(
    student_logits: np.ndarray, targets: np.ndarray, temperature: float = 1.0
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of dense target rows against softmax(logits / T).

    The shared core of every loss here: returns the batch-mean loss and
    its gradient (probs - targets) / (N * T) w.r.t. the logits.
    """
    n = student_logits.shape[0]
    probs = softmax(student_logits, temperature)
    logp = np.log(np.maximum(probs, LOG_FLOOR))
    loss = float(-(targets * logp).sum(axis=1).mean())
    grad = (probs - targets) / (n * temperature)
    return loss, grad


_ce_with_targets = cross_entropy_with_targets


def entropy_rows(probs) -> np.ndarray:
    """Row-wise Shannon entropy with 0 * log 0 := 0."""
    p = validate_prob_rows(probs)
    terms = np.where(p > 0.0, p * np.log(np.maximum(p, LOG_FLOOR)), 0.0)
    return -terms.sum(axis=1)


def kl_divergence(p, q) -> float:
    """KL(p || q) for two categorical distributions, with q floored at 1e-30.

    Uses 0 * log 0 := 0; the result is >= -1e-12 (tiny negatives can come
    from rounding only).
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or q.ndim != 1:
        raise DimensionMismatchError("kl_divergence expects two 1-D distributions")
    if p.shape != q.shape:
        raise DimensionMismatchError(f"length mismatch: {p.shape[0]} vs {q.shape[0]}")
    validate_prob_rows(p[None, :])
    validate_prob_rows(q[None, :])
    q_floored = np.maximum(q, LOG_FLOOR)
    terms = np.where(p > 0.0, p * (np.log(np.maximum(p, LOG_FLOOR)) - np.log(q_floored)), 0.0)
    return float(terms.sum())


def soft_ts_loss(batch: LabeledBatch, temperature: float = 1.0) -> tuple[float, np.ndarray]:
    """Cross-entropy of teacher posteriors against student probabilities.

    With T != 1 both sides are flattened: targets become normalized
    p_teacher ** (1/T) and student probabilities use softmax(logits / T).
    """
    targets = flatten_probs(batch.teacher_posteriors, temperature)
    return _ce_with_targets(batch.student_logits, targets, temperature)


def hard_ce_loss(batch: LabeledBatch, temperature: float = 1.0) -> tuple[float, np.ndarray]:
    """Standard cross-entropy against the one-hot ground-truth labels."""
    targets = one_hot(batch.labels, batch.num_classes)
    return _ce_with_targets(batch.student_logits, targets, temperature)


def interpolated_loss(
    batch: LabeledBatch, lam: float, temperature: float = 1.0
) -> tuple[float, np.ndarray]:
    """Cross-entropy against the blend (1 - lam) * one_hot + lam * teacher.

    Equals (1 - lam) * hard_ce_loss + lam * soft_ts_loss; lam = 0 and
    lam = 1 reproduce those losses bit-exactly.
    """
    if not 0.0 <= lam <= 1.0:
        raise InvalidParameterError(f"interpolation weight must be in [0, 1], got {lam}")
    soft = flatten_probs(batch.teacher_posteriors, temperature)
    targets = (1.0 - lam) * one_hot(batch.labels, batch.num_classes) + lam * soft
    return _ce_with_targets(batch.student_logits, targets, temperature)


def kl_ts_loss(batch: LabeledBatch, temperature: float = 1.0) -> tuple[float, np.ndarray]:
    """Mean KL(teacher || student); same gradient as soft_ts_loss.

    Differs from the soft cross-entropy only by the teacher entropy, which
    is constant in the student logits, so both objectives share their
    minimizer and their gradient.
    """
    targets = flatten_probs(batch.teacher_posteriors, temperature)
    ce, grad = _ce_with_targets(batch.student_logits, targets, temperature)
    return ce - float(entropy_rows(targets).mean()), grad


def conditional_targets(teacher_posteriors, labels) -> list[ConditionalTarget]:
    """Pick the per-sample target by teacher correctness.

    Soft (the teacher's posterior row) where the teacher's argmax equals
    the label, hard (the label itself) elsewhere.  Argmax ties resolve to
    the lowest class index.
    """
    probs = validate_prob_rows(teacher_posteriors)
    y = _validate_labels(labels, probs.shape[1])
    if y.shape[0] != probs.shape[0]:
        raise DimensionMismatchError(
            f"{y.shape[0]} labels for {probs.shape[0]} posterior rows"
        )
    predictions = probs.argmax(axis=1)
    out = []
    for i in range(probs.shape[0]):
        if predictions[i] == y[i]:
            out.append(ConditionalTarget(teacher_correct=True, soft=probs[i]))
        else:
            out.append(ConditionalTarget(teacher_correct=False, hard=int(y[i])))
    return out


def conditional_loss(
    targets: list[ConditionalTarget], student_logits, temperature: float = 1.0
) -> tuple[float, np.ndarray]:
    """Cross-entropy against the per-sample conditional targets.

    Soft rows are temperature-flattened like in soft_ts_loss; hard rows
    are one-hot and unaffected by flattening.
    """
    logits = as_matrix(student_logits, "student_logits")
    if len(targets) != logits.shape[0]:
        raise DimensionMismatchError(
            f"{len(targets)} targets for {logits.shape[0]} logit rows"
        )
    if not targets:
        raise EmptyDatasetError("conditional_loss needs at least one sample")
    rows = np.stack([t.vector(logits.shape[1]) for t in targets])
    soft_mask = np.array([t.teacher_correct for t in targets])
    if temperature != 1.0 and soft_mask.any():
        rows[soft_mask] = flatten_probs(rows[soft_mask], temperature)
    return _ce_with_targets(logits, rows, temperature)


def teacher_accuracy(teacher_posteriors, labels) -> float:
    """Fraction of samples whose teacher argmax (lowest-index ties) is the label.

    This is exactly the fraction of soft targets conditional_targets emits.
    """
    probs = validate_prob_rows(teacher_posteriors)
    if probs.shape[0] == 0:
        raise EmptyDatasetError("teacher_accuracy needs at least one sample")
    y = _validate_labels(labels, probs.shape[1])
    if y.shape[0] != probs.shape[0]:
        raise DimensionMismatchError(
            f"{y.shape[0]} labels for {probs.shape[0]} posterior rows"
        )
    return float((probs.argmax(axis=1) == y).mean())
