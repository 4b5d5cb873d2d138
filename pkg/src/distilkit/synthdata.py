"""Deterministic synthetic benchmarks.

Class-conditional Gaussian "clean" data, corrupted parallel counterparts
for domain shift, and per-speaker affine variants for speaker
adaptation.  All generators are pure functions of their specs: the same
spec always yields bit-identical data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .adaptation import ParallelDataset
from .errors import DimensionMismatchError, InvalidParameterError
from .rng import child_seed, stream

__all__ = [
    "CORRUPTION_KINDS",
    "DatasetSpec",
    "CorruptionSpec",
    "SpeakerSpec",
    "ClassificationSet",
    "DomainScenario",
    "SpeakerMember",
    "SpeakerScenario",
    "BenchmarkSuite",
    "class_means",
    "make_clean",
    "split_per_class",
    "corrupt",
    "make_speaker",
    "benchmark_suite",
    "write_set_csv",
    "read_set_csv",
    "write_pairs_csv",
    "read_pairs_csv",
]

CORRUPTION_KINDS = ("additive_gaussian", "affine_shift", "feature_dropout")


@dataclass(frozen=True)
class DatasetSpec:
    """Gaussian-cluster classification task: unit within-class std, seeded means."""

    num_classes: int
    feature_dim: int
    samples_per_class: int
    class_separation: float  # minimum distance between class means, in within-class stds
    seed: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise InvalidParameterError("need at least 2 classes")
        if self.feature_dim < 1 or self.samples_per_class < 1:
            raise InvalidParameterError("feature_dim and samples_per_class must be >= 1")
        if not self.class_separation > 0:
            raise InvalidParameterError("class_separation must be > 0")


@dataclass(frozen=True)
class CorruptionSpec:
    """How the student-side copy of the data is degraded; severity 0 is identity."""

    kind: str
    severity: float
    seed: int

    def __post_init__(self):
        if self.kind not in CORRUPTION_KINDS:
            raise InvalidParameterError(f"kind must be one of {CORRUPTION_KINDS}, got {self.kind!r}")
        if self.severity < 0:
            raise InvalidParameterError(f"severity must be >= 0, got {self.severity}")


@dataclass(frozen=True, eq=False)
class SpeakerSpec:
    """Per-speaker affine transform x -> scale * x + offset plus sample counts."""

    speaker_id: int
    scale: np.ndarray
    offset: np.ndarray
    n_adapt: int
    n_test: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64))
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=np.float64))
        if self.scale.ndim != 1 or self.scale.shape != self.offset.shape:
            raise DimensionMismatchError("scale and offset must be 1-D and share a shape")
        if self.n_adapt < 1 or self.n_test < 1:
            raise InvalidParameterError("n_adapt and n_test must be >= 1")


@dataclass
class ClassificationSet:
    """Features with integer class labels."""

    features: np.ndarray  # (N, D)
    labels: np.ndarray  # (N,)

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise DimensionMismatchError("features must be 2-D and labels 1-D")
        if self.features.shape[0] != self.labels.shape[0]:
            raise DimensionMismatchError("features and labels are not aligned")

    def __len__(self) -> int:
        return self.labels.shape[0]


def class_means(spec: DatasetSpec) -> np.ndarray:
    """Seeded class means with pairwise distance >= class_separation.

    Candidates are drawn from a Gaussian whose scale puts typical pairwise
    distances slightly above the separation floor, then rejection-resampled
    against the accepted means, so the clusters stay close to the floor
    rather than spreading arbitrarily far apart.
    """
    rng = stream(spec.seed, "means")
    sigma = 1.25 * spec.class_separation / np.sqrt(2.0 * spec.feature_dim)
    means = []
    for _ in range(spec.num_classes):
        for _attempt in range(10_000):
            candidate = rng.normal(0.0, sigma, size=spec.feature_dim)
            if all(np.linalg.norm(candidate - m) >= spec.class_separation for m in means):
                means.append(candidate)
                break
        else:
            raise InvalidParameterError(
                f"could not place {spec.num_classes} means at separation {spec.class_separation}"
            )
    return np.stack(means)


def make_clean(spec: DatasetSpec) -> ClassificationSet:
    """Balanced isotropic Gaussian clusters, grouped by class, unit within-class std."""
    means = class_means(spec)
    blocks = []
    labels = []
    for c in range(spec.num_classes):
        rng = stream(spec.seed, "samples", c)
        blocks.append(means[c] + rng.standard_normal((spec.samples_per_class, spec.feature_dim)))
        labels.append(np.full(spec.samples_per_class, c, dtype=np.int64))
    return ClassificationSet(np.concatenate(blocks), np.concatenate(labels))


def split_per_class(data: ClassificationSet, n_first: int) -> tuple[ClassificationSet, ClassificationSet]:
    """Split into (first n_first of each class, the rest), preserving order."""
    first_idx = []
    rest_idx = []
    for c in np.unique(data.labels):
        idx = np.flatnonzero(data.labels == c)
        if idx.size < n_first:
            raise InvalidParameterError(f"class {c} has only {idx.size} samples, needs {n_first}")
        first_idx.append(idx[:n_first])
        rest_idx.append(idx[n_first:])
    first = np.concatenate(first_idx)
    rest = np.concatenate(rest_idx)
    return (
        ClassificationSet(data.features[first], data.labels[first]),
        ClassificationSet(data.features[rest], data.labels[rest]),
    )


def corrupt(data: ClassificationSet, spec: CorruptionSpec) -> ParallelDataset:
    """Pair every sample with a corrupted copy: x_teacher original, x_student degraded.

    Labels, count, and ordering are preserved; severity 0 leaves the
    student side elementwise equal to the teacher side.
    """
    x = data.features
    if spec.kind == "additive_gaussian":
        noise = stream(spec.seed, "noise").standard_normal(x.shape)
        corrupted = x + spec.severity * noise
    elif spec.kind == "affine_shift":
        rng = stream(spec.seed, "affine")
        direction = rng.standard_normal(x.shape[1])
        direction /= np.linalg.norm(direction)
        log_scale = spec.severity * rng.uniform(-0.1, 0.1, size=x.shape[1])
        corrupted = x * np.exp(log_scale) + spec.severity * direction
    else:  # feature_dropout
        p = min(spec.severity, 1.0)
        mask = stream(spec.seed, "dropout").random(x.shape) >= p
        corrupted = x * mask
    return ParallelDataset(x.copy(), corrupted, data.labels.copy())


def make_speaker(base: DatasetSpec, spk: SpeakerSpec) -> tuple[ClassificationSet, ClassificationSet]:
    """Fresh draws from the base class distributions under the speaker's affine map.

    Labels are assigned round-robin for balance; the adaptation and test
    sets come from distinct seed streams and are disjoint by construction.
    """
    means = class_means(base)
    if spk.scale.shape[0] != base.feature_dim:
        raise DimensionMismatchError(
            f"speaker transform has dim {spk.scale.shape[0]}, base data has {base.feature_dim}"
        )

    def draw(n: int, purpose: str) -> ClassificationSet:
        labels = np.arange(n, dtype=np.int64) % base.num_classes
        noise = stream(spk.seed, purpose).standard_normal((n, base.feature_dim))
        clean = means[labels] + noise
        return ClassificationSet(spk.scale * clean + spk.offset, labels)

    return draw(spk.n_adapt, "adapt"), draw(spk.n_test, "test")


# --- canonical benchmark scenarios --------------------------------------

DOMAIN_NUM_CLASSES = 4
DOMAIN_FEATURE_DIM = 8
DOMAIN_TRAIN_PER_CLASS = 500
DOMAIN_TEST_PER_CLASS = 200
DOMAIN_SEPARATION = 6.0
DOMAIN_NOISE_SEVERITY = 3.0
SPEAKER_COUNT = 5
SPEAKER_N_ADAPT = 200
SPEAKER_N_TEST = 400
SPEAKER_SCALE_RANGE = (0.8, 1.25)
# Calibrated so the clean-trained teacher lands in the imperfect regime on
# every speaker's adaptation set (accuracy well below 1 but far above
# chance); smaller offsets leave the teacher essentially perfect and the
# conditional selection inert.
SPEAKER_OFFSET_NORM = 12.0


@dataclass
class DomainScenario:
    """Clean/noisy parallel adaptation task with a shared clean base."""

    base_spec: DatasetSpec
    train_corruption: CorruptionSpec
    test_corruption: CorruptionSpec
    clean_train: ClassificationSet
    clean_test: ClassificationSet
    train_pairs: ParallelDataset
    test_pairs: ParallelDataset


@dataclass
class SpeakerMember:
    spec: SpeakerSpec
    adapt: ClassificationSet
    test: ClassificationSet


@dataclass
class SpeakerScenario:
    """Limited per-speaker adaptation task over affine-shifted copies of the base."""

    base_spec: DatasetSpec
    clean_train: ClassificationSet
    clean_test: ClassificationSet
    speakers: list[SpeakerMember]


@dataclass
class BenchmarkSuite:
    seed: int
    domain: DomainScenario
    speaker: SpeakerScenario


def benchmark_suite(seed: int) -> BenchmarkSuite:
    """The two canonical scenarios, both built over one clean base task.

    DOMAIN: 4 classes, dim 8, separation 6, 500 train / 200 test per class
    per domain, additive Gaussian corruption with severity 3.0 (train and
    test noise use distinct streams).  SPEAKER: the same base plus 5
    speakers with per-feature scales in [0.8, 1.25] and offsets of norm
    SPEAKER_OFFSET_NORM, 200 adaptation / 400 test samples each.
    """
    base = DatasetSpec(
        num_classes=DOMAIN_NUM_CLASSES,
        feature_dim=DOMAIN_FEATURE_DIM,
        samples_per_class=DOMAIN_TRAIN_PER_CLASS + DOMAIN_TEST_PER_CLASS,
        class_separation=DOMAIN_SEPARATION,
        seed=child_seed(seed, "base"),
    )
    pool = make_clean(base)
    clean_train, clean_test = split_per_class(pool, DOMAIN_TRAIN_PER_CLASS)

    train_corruption = CorruptionSpec("additive_gaussian", DOMAIN_NOISE_SEVERITY, child_seed(seed, "noise", 0))
    test_corruption = CorruptionSpec("additive_gaussian", DOMAIN_NOISE_SEVERITY, child_seed(seed, "noise", 1))
    domain = DomainScenario(
        base_spec=base,
        train_corruption=train_corruption,
        test_corruption=test_corruption,
        clean_train=clean_train,
        clean_test=clean_test,
        train_pairs=corrupt(clean_train, train_corruption),
        test_pairs=corrupt(clean_test, test_corruption),
    )

    members = []
    for k in range(SPEAKER_COUNT):
        rng = stream(seed, "speaker", k)
        scale = rng.uniform(*SPEAKER_SCALE_RANGE, size=base.feature_dim)
        direction = rng.standard_normal(base.feature_dim)
        offset = SPEAKER_OFFSET_NORM * direction / np.linalg.norm(direction)
        spk = SpeakerSpec(
            speaker_id=k,
            scale=scale,
            offset=offset,
            n_adapt=SPEAKER_N_ADAPT,
            n_test=SPEAKER_N_TEST,
            seed=child_seed(seed, "speaker-data", k),
        )
        adapt_set, test_set = make_speaker(base, spk)
        members.append(SpeakerMember(spk, adapt_set, test_set))
    speaker = SpeakerScenario(
        base_spec=base,
        clean_train=clean_train,
        clean_test=clean_test,
        speakers=members,
    )
    return BenchmarkSuite(seed=seed, domain=domain, speaker=speaker)


# --- CSV interchange -----------------------------------------------------
#
# Single sets: header `label,f0,f1,...`; parallel sets: header
# `label,t0,...,s0,...`.  Floats are printed at 17 significant digits so
# a write/read round trip is exact.


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_set_csv(path, data: ClassificationSet) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dim = data.features.shape[1]
        fh.write("label," + ",".join(f"f{j}" for j in range(dim)) + "\n")
        for label, row in zip(data.labels, data.features):
            fh.write(str(int(label)) + "," + ",".join(_fmt(v) for v in row) + "\n")


def read_set_csv(path) -> ClassificationSet:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "label" or not all(h.startswith("f") for h in header[1:]):
            raise InvalidParameterError(f"unexpected header for a labeled set: {header[:3]}...")
        labels = []
        rows = []
        for record in reader:
            labels.append(int(record[0]))
            rows.append([float(v) for v in record[1:]])
    return ClassificationSet(np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int64))


def write_pairs_csv(path, data: ParallelDataset) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dt = data.x_teacher.shape[1]
        ds = data.x_student.shape[1]
        header = ["label"] + [f"t{j}" for j in range(dt)] + [f"s{j}" for j in range(ds)]
        fh.write(",".join(header) + "\n")
        for label, xt, xs in zip(data.labels, data.x_teacher, data.x_student):
            values = [str(int(label))] + [_fmt(v) for v in xt] + [_fmt(v) for v in xs]
            fh.write(",".join(values) + "\n")


def read_pairs_csv(path) -> ParallelDataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dt = sum(1 for h in header if h.startswith("t"))
        ds = sum(1 for h in header if h.startswith("s"))
        if header[0] != "label" or dt == 0 or ds == 0 or 1 + dt + ds != len(header):
            raise InvalidParameterError(f"unexpected header for a parallel set: {header[:3]}...")
        labels = []
        teacher_rows = []
        student_rows = []
        for record in reader:
            labels.append(int(record[0]))
            teacher_rows.append([float(v) for v in record[1 : 1 + dt]])
            student_rows.append([float(v) for v in record[1 + dt :]])
    return ParallelDataset(
        np.array(teacher_rows, dtype=np.float64),
        np.array(student_rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
    )
