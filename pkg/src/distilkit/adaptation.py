"""Domain- and speaker-adaptation training pipelines.

Domain adaptation: a student initialized from a frozen clean-domain
teacher trains on parallel (clean, corrupted) pairs, first with soft
targets from the teacher, then (mode "conditional") with per-sample
targets that back off to the hard label whenever the teacher's
prediction on the clean input misses the ground truth.

Speaker adaptation: the same selection applied to limited per-speaker
data, with the teacher and student both fed the adaptation samples.
Interpolated mode reproduces KL-regularized fine-tuning; "wrong_only"
is the ablation that trains on the teacher's mistake subset alone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidParameterError,
    NumericalError,
    TrainingDivergedError,
)
from .losses import (
    LabeledBatch,
    conditional_loss,
    conditional_targets,
    cross_entropy_with_targets,
    interpolated_loss,
    one_hot,
    soft_ts_loss,
    teacher_accuracy,
)
from .numerics import Network, as_matrix, backward, forward, sgd_step, softmax
from .rng import stream

__all__ = [
    "MODES",
    "ParallelSample",
    "ParallelDataset",
    "AdaptationSchedule",
    "EpochStats",
    "AdaptationReport",
    "init_student_from_teacher",
    "augment_with_source_pairs",
    "generate_pseudo_labels",
    "evaluate",
    "domain_adapt",
    "speaker_adapt",
]

MODES = ("soft_only", "hard_only", "interpolated", "conditional", "wrong_only")


class ParallelSample(NamedTuple):
    x_teacher: np.ndarray
    x_student: np.ndarray
    label: int


@dataclass
class ParallelDataset:
    """Index-aligned (teacher input, student input, label) triples."""

    x_teacher: np.ndarray  # (N, D_T)
    x_student: np.ndarray  # (N, D_S)
    labels: np.ndarray  # (N,)

    def __post_init__(self):
        self.x_teacher = as_matrix(self.x_teacher, "x_teacher")
        self.x_student = as_matrix(self.x_student, "x_student")
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise DimensionMismatchError("labels must be 1-D")
        n = self.labels.shape[0]
        if self.x_teacher.shape[0] != n or self.x_student.shape[0] != n:
            raise DimensionMismatchError("parallel arrays are not index-aligned")
        if n and self.labels.min() < 0:
            raise InvalidParameterError("labels must be non-negative")

    def __len__(self) -> int:
        return self.labels.shape[0]

    def __getitem__(self, i: int) -> ParallelSample:
        return ParallelSample(self.x_teacher[i], self.x_student[i], int(self.labels[i]))


@dataclass
class AdaptationSchedule:
    """Training hyperparameters for one adaptation run.

    ``warmup_epochs`` are always trained with soft targets (domain
    adaptation only); the following ``conditional_epochs`` use the loss
    selected by ``mode``.  ``lam`` is required exactly when the mode is
    "interpolated".  The shuffle stream is derived from (seed, epoch).
    """

    conditional_epochs: int
    lr: float
    batch_size: int
    mode: str = "conditional"
    warmup_epochs: int = 0
    lam: float | None = None
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.warmup_epochs < 0 or self.conditional_epochs < 0:
            raise InvalidParameterError("epoch counts must be >= 0")
        if not self.lr > 0:
            raise InvalidParameterError(f"learning rate must be > 0, got {self.lr}")
        if self.batch_size < 1:
            raise InvalidParameterError(f"batch size must be >= 1, got {self.batch_size}")
        if not self.temperature > 0:
            raise InvalidParameterError(f"temperature must be > 0, got {self.temperature}")
        if self.mode == "interpolated":
            if self.lam is None:
                raise InvalidParameterError("interpolated mode requires lam")
            if not 0.0 <= self.lam <= 1.0:
                raise InvalidParameterError(f"lam must be in [0, 1], got {self.lam}")
        elif self.lam is not None:
            raise InvalidParameterError(f"lam is only valid for interpolated mode, not {self.mode!r}")

    @property
    def total_epochs(self) -> int:
        return self.warmup_epochs + self.conditional_epochs


@dataclass
class EpochStats:
    """One epoch of training: phase, mean loss, teacher accuracy, soft-target share.

    In conditional phases the soft fraction equals the teacher accuracy on
    the training data by construction; warmup is all-soft (fraction 1.0),
    hard and wrong_only phases are all-hard (0.0), and interpolated phases
    record the blend weight lam.
    """

    epoch: int
    phase: str  # "warmup" | "main"
    loss: float
    teacher_accuracy: float
    soft_fraction: float


@dataclass
class AdaptationReport:
    """Outcome of one adaptation run."""

    epoch_stats: list[EpochStats]
    student: Network
    mode: str
    eval_accuracies: dict[str, float] = field(default_factory=dict)
    wall_clock_sec: float = 0.0

    @property
    def final_loss(self) -> float:
        return self.epoch_stats[-1].loss if self.epoch_stats else float("nan")

    @property
    def final_soft_fraction(self) -> float:
        return self.epoch_stats[-1].soft_fraction if self.epoch_stats else float("nan")

    @property
    def train_teacher_accuracy(self) -> float:
        return self.epoch_stats[-1].teacher_accuracy if self.epoch_stats else float("nan")


def init_student_from_teacher(teacher: Network) -> Network:
    """Deep copy of the teacher; later student updates never touch the teacher."""
    return teacher.copy()


def augment_with_source_pairs(data: ParallelDataset) -> ParallelDataset:
    """Append one (x_teacher, x_teacher, label) pair per sample, doubling the set.

    Sample i and sample N + i share the teacher-side input and the label,
    so the student also sees uncorrupted inputs during adaptation.
    """
    return ParallelDataset(
        np.concatenate([data.x_teacher, data.x_teacher]),
        np.concatenate([data.x_student, data.x_teacher]),
        np.concatenate([data.labels, data.labels]),
    )


def generate_pseudo_labels(teacher: Network, features) -> np.ndarray:
    """Hard labels from the teacher itself: per-sample posterior argmax at T = 1."""
    logits, _ = forward(teacher, features)
    return softmax(logits, 1.0).argmax(axis=1).astype(np.int64)


def evaluate(net: Network, features, labels) -> float:
    """Classification accuracy of argmax predictions (lowest-index ties)."""
    x = as_matrix(features, "features")
    if x.shape[0] == 0:
        raise EmptyDatasetError("evaluate needs at least one sample")
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (x.shape[0],):
        raise DimensionMismatchError("labels are not aligned with features")
    logits, _ = forward(net, x)
    predictions = softmax(logits, 1.0).argmax(axis=1)
    return float((predictions == y).mean())


def _batch_ranges(n: int, batch_size: int):
    for start in range(0, n, batch_size):
        yield start, min(start + batch_size, n)


def _train(
    teacher: Network,
    x_teacher: np.ndarray,
    x_student: np.ndarray,
    labels: np.ndarray,
    schedule: AdaptationSchedule,
) -> tuple[Network, list[EpochStats]]:
    n = labels.shape[0]
    if n == 0:
        raise EmptyDatasetError("adaptation needs at least one sample")
    if labels.max() >= teacher.output_dim:
        raise InvalidParameterError(
            f"label {labels.max()} out of range for {teacher.output_dim} classes"
        )
    num_classes = teacher.output_dim
    student = init_student_from_teacher(teacher)

    # The teacher is frozen, so its accuracy on the training data and the
    # wrong_only mistake subset are both fixed for the whole run.
    teacher_probs_full = softmax(forward(teacher, x_teacher)[0], 1.0)
    teacher_acc = teacher_accuracy(teacher_probs_full, labels)
    if schedule.mode == "wrong_only":
        mistake_idx = np.flatnonzero(teacher_probs_full.argmax(axis=1) != labels)
        if mistake_idx.size == 0:
            raise EmptyDatasetError("wrong_only mode: the teacher makes no mistakes on this data")
    else:
        mistake_idx = None

    stats: list[EpochStats] = []
    for epoch in range(schedule.total_epochs):
        warmup = epoch < schedule.warmup_epochs
        phase_mode = "soft_only" if warmup else schedule.mode
        if phase_mode == "wrong_only":
            active = mistake_idx
        else:
            active = np.arange(n)
        order = active[stream(schedule.seed, "shuffle", epoch).permutation(active.size)]

        loss_sum = 0.0
        soft_units = 0.0
        seen = 0
        try:
            for start, stop in _batch_ranges(order.size, schedule.batch_size):
                idx = order[start:stop]
                xs, yb = x_student[idx], labels[idx]
                logits, trace = forward(student, xs)
                if phase_mode in ("hard_only", "wrong_only"):
                    loss, grad = cross_entropy_with_targets(
                        logits, one_hot(yb, num_classes), schedule.temperature
                    )
                else:
                    # Targets are recomputed from the frozen teacher each batch.
                    t_probs = softmax(forward(teacher, x_teacher[idx])[0], 1.0)
                    if phase_mode == "soft_only":
                        loss, grad = soft_ts_loss(
                            LabeledBatch(t_probs, yb, logits), schedule.temperature
                        )
                        soft_units += idx.size
                    elif phase_mode == "interpolated":
                        loss, grad = interpolated_loss(
                            LabeledBatch(t_probs, yb, logits), schedule.lam, schedule.temperature
                        )
                        soft_units += schedule.lam * idx.size
                    else:  # conditional
                        targets = conditional_targets(t_probs, yb)
                        loss, grad = conditional_loss(targets, logits, schedule.temperature)
                        soft_units += sum(t.teacher_correct for t in targets)
                if not np.isfinite(loss):
                    raise TrainingDivergedError(epoch)
                grads = backward(student, trace, grad)
                student = sgd_step(student, grads, schedule.lr)
                loss_sum += loss * idx.size
                seen += idx.size
        except NumericalError as exc:
            raise TrainingDivergedError(epoch, f"epoch {epoch}: {exc}") from exc
        stats.append(
            EpochStats(
                epoch=epoch,
                phase="warmup" if warmup else "main",
                loss=loss_sum / seen,
                teacher_accuracy=teacher_acc,
                soft_fraction=soft_units / seen,
            )
        )
    return student, stats


def domain_adapt(
    teacher: Network, data: ParallelDataset, schedule: AdaptationSchedule
) -> AdaptationReport:
    """Adapt a student to the target domain on parallel data.

    Warmup epochs train with soft teacher targets; the main phase uses
    the scheduled mode, with teacher posteriors always computed on the
    source-side inputs and correctness judged against the dataset labels.
    The teacher is never modified.
    """
    if len(data) == 0:
        raise EmptyDatasetError("domain_adapt needs a non-empty dataset")
    if data.x_teacher.shape[1] != teacher.input_dim:
        raise DimensionMismatchError(
            f"teacher-side features have dim {data.x_teacher.shape[1]}, teacher expects {teacher.input_dim}"
        )
    if data.x_student.shape[1] != teacher.input_dim:
        raise DimensionMismatchError(
            "student-side features must match the teacher input dim (student is teacher-initialized)"
        )
    start = time.perf_counter()
    student, stats = _train(teacher, data.x_teacher, data.x_student, data.labels, schedule)
    return AdaptationReport(
        epoch_stats=stats,
        student=student,
        mode=schedule.mode,
        wall_clock_sec=time.perf_counter() - start,
    )


def speaker_adapt(
    teacher: Network, features, labels, schedule: AdaptationSchedule
) -> AdaptationReport:
    """Adapt a student to one speaker's data, fed to teacher and student alike.

    No warmup phase is allowed here; conditional targets (or the
    interpolated blend) apply from the first epoch.  In wrong_only mode
    training is restricted to the samples the teacher misclassifies,
    with hard targets.
    """
    if schedule.warmup_epochs != 0:
        raise InvalidParameterError("speaker adaptation does not use a warmup phase")
    x = as_matrix(features, "features")
    if x.shape[0] == 0:
        raise EmptyDatasetError("speaker_adapt needs a non-empty dataset")
    if x.shape[1] != teacher.input_dim:
        raise DimensionMismatchError(
            f"features have dim {x.shape[1]}, teacher expects {teacher.input_dim}"
        )
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (x.shape[0],):
        raise DimensionMismatchError("labels are not aligned with features")
    start = time.perf_counter()
    student, stats = _train(teacher, x, x, y, schedule)
    return AdaptationReport(
        epoch_stats=stats,
        student=student,
        mode=schedule.mode,
        wall_clock_sec=time.perf_counter() - start,
    )
