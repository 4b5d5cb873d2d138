"""distilkit: teacher-student training with conditional target selection.

A numpy toolkit for knowledge distillation under imperfect teachers:
soft, interpolated, and conditional teacher-student losses with exact
logit gradients, domain- and speaker-adaptation pipelines, seeded
synthetic benchmarks, and an experiment harness with a CLI.
"""

from .adaptation import (
    AdaptationReport,
    AdaptationSchedule,
    EpochStats,
    ParallelDataset,
    ParallelSample,
    augment_with_source_pairs,
    domain_adapt,
    evaluate,
    generate_pseudo_labels,
    init_student_from_teacher,
    speaker_adapt,
)
from .errors import (
    CheckpointError,
    ConfigError,
    DimensionMismatchError,
    DistilkitError,
    EmptyDatasetError,
    InvalidParameterError,
    NumericalError,
    TrainingDivergedError,
)
from .losses import (
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
from .numerics import (
    ForwardTrace,
    Gradients,
    Layer,
    Network,
    backward,
    flatten_probs,
    forward,
    grad_check,
    init_network,
    load_checkpoint,
    save_checkpoint,
    sgd_step,
    softmax,
    validate_prob_rows,
)
from .synthdata import (
    BenchmarkSuite,
    ClassificationSet,
    CorruptionSpec,
    DatasetSpec,
    SpeakerSpec,
    benchmark_suite,
    corrupt,
    make_clean,
    make_speaker,
)

__version__ = "0.1.0"
