"""A walk through the distillation losses.

Four ways to train a student from a teacher's posteriors and the ground
truth: pure soft targets, pure hard labels, a fixed blend of the two,
and the conditional rule that trusts the teacher only when it is right.
Run:  python demos/01_losses.py
"""

import numpy as np

from distilkit import (
    LabeledBatch,
    conditional_loss,
    conditional_targets,
    hard_ce_loss,
    interpolated_loss,
    kl_divergence,
    soft_ts_loss,
)

# A tiny batch: 3 samples, 3 classes.  The teacher is confident and right
# on sample 0, unsure but right on sample 1, and confidently WRONG on 2.
teacher = np.array(
    [
        [0.90, 0.06, 0.04],
        [0.45, 0.35, 0.20],
        [0.10, 0.80, 0.10],
    ]
)
labels = np.array([0, 0, 0])
student_logits = np.array(
    [
        [2.0, 0.1, -0.3],
        [0.6, 0.4, 0.2],
        [0.2, 1.1, -0.5],
    ]
)
batch = LabeledBatch(teacher, labels, student_logits)

print("KL divergence between two rows:")
print(f"  KL(teacher[0] || teacher[1]) = {kl_divergence(teacher[0], teacher[1]):.6f}")
print(f"  KL(p || p)                   = {kl_divergence(teacher[0], teacher[0]):.2e}  (identity)")

soft, soft_grad = soft_ts_loss(batch)
hard, _ = hard_ce_loss(batch)
print(f"\nsoft teacher-student loss: {soft:.6f}")
print(f"hard cross-entropy loss:   {hard:.6f}")

# The interpolated loss is exactly the blend of the two, for any weight.
for lam in (0.0, 0.5, 1.0):
    mixed, _ = interpolated_loss(batch, lam)
    print(f"interpolated(lam={lam:3.1f}) = {mixed:.6f}   blend check: {(1-lam)*hard + lam*soft:.6f}")

# Conditional selection: soft where the teacher's argmax hits the label,
# the hard label elsewhere.  Sample 2's wrong teacher gets overridden.
targets = conditional_targets(teacher, labels)
for i, t in enumerate(targets):
    kind = "soft (teacher trusted)" if t.teacher_correct else "hard (backs off to label)"
    print(f"sample {i}: {kind} -> target {np.round(t.vector(3), 3)}")

cond, cond_grad = conditional_loss(targets, student_logits)
print(f"\nconditional loss: {cond:.6f}")

# Every loss gradient is w.r.t. the student logits and its rows sum to 0,
# the signature of a softmax cross-entropy gradient.
print(f"gradient rows sum to ~0: max |row sum| = {np.abs(cond_grad.sum(axis=1)).max():.2e}")
