"""Domain adaptation on the synthetic clean/noisy benchmark.

A teacher trained on clean Gaussian clusters degrades on a noise-corrupted
copy of the data.  A student initialized from the teacher adapts on
parallel (clean, noisy) pairs: soft warmup first, then conditional
targets judged against the ground truth.  Hard labels, pure soft
distillation, and the conditional scheme are compared on noisy test data.
Run:  python demos/03_domain_adaptation.py   (~20 s)
"""

import numpy as np

from distilkit import (
    AdaptationSchedule,
    augment_with_source_pairs,
    domain_adapt,
    evaluate,
)
from distilkit.harness import ExperimentConfig, load_scenario, train_teacher

config = ExperimentConfig(scenario="DOMAIN")
data = load_scenario(config)
suite = data.suite

print("training the clean-domain teacher...")
teacher, metrics = train_teacher(config, data)
print(f"  clean test accuracy: {metrics['clean_test_accuracy']:.4f}")
print(f"  noisy test accuracy: {metrics['noisy_test_accuracy']:.4f}   <- the domain gap")
print(f"  noisy train accuracy: {metrics['noisy_train_accuracy']:.4f}  (imperfect-teacher regime)")

# Adaptation data: noisy pairs plus clean-clean pairs so the student stays
# good on the source domain too.
train_pairs = augment_with_source_pairs(suite.domain.train_pairs)
noisy_test = suite.domain.test_pairs

results = {}
for mode, warmup in (("hard_only", 0), ("soft_only", 0), ("conditional", 10)):
    accs = []
    for seed in (1, 2, 3):
        schedule = AdaptationSchedule(
            conditional_epochs=20 - warmup,
            warmup_epochs=warmup,
            lr=0.02,
            batch_size=32,
            mode=mode,
            seed=seed,
        )
        report = domain_adapt(teacher, train_pairs, schedule)
        accs.append(evaluate(report.student, noisy_test.x_student, noisy_test.labels))
    results[mode] = (float(np.mean(accs)), accs)

print("\nnoisy-test accuracy after adaptation (mean over 3 seeds):")
for mode, (mean, accs) in results.items():
    print(f"  {mode:<12} {mean:.4f}   per seed: {[f'{a:.4f}' for a in accs]}")

print(
    "\nThe teacher memorizes its own clean training data, so the conditional"
    "\nphase sees only correct predictions here and matches pure soft"
    "\ndistillation; both sit above hard-label training.  The speaker demo"
    "\nshows the regime where the conditional selection actively differs."
)
