"""Verifying analytic gradients with central finite differences.

The toolkit trains with closed-form logit gradients plus hand-rolled
backprop through the dense network; the checker compares every single
parameter's analytic derivative against (L(t+h) - L(t-h)) / 2h.
Run:  python demos/02_gradients_and_checking.py
"""

import numpy as np

from distilkit import LabeledBatch, backward, forward, grad_check, init_network, soft_ts_loss
from distilkit.harness import gradcheck_report

# Build a small 2-hidden-layer classifier and a random batch.
net = init_network([5, 12, 12, 3], seed=0)
rng = np.random.default_rng(0)
x = rng.normal(size=(8, 5))
teacher = rng.random((8, 3)) + 0.1
teacher /= teacher.sum(axis=1, keepdims=True)
labels = rng.integers(0, 3, size=8)


def closure(candidate):
    """Loss and full parameter gradients for one network candidate."""
    logits, trace = forward(candidate, x)
    loss, dlogits = soft_ts_loss(LabeledBatch(teacher, labels, logits))
    return loss, backward(candidate, trace, dlogits)


worst = grad_check(net, closure, step=1e-5)
print(f"soft loss on a {sum(p.weight.size + p.bias.size for p in net.layers)}-parameter net")
print(f"worst relative error over every parameter: {worst:.2e}")

# The same machinery, run over all five losses on a batch of random nets.
# This is what `distilkit gradcheck` prints.
print("\nfull report (2 random nets per loss):")
for name, value in gradcheck_report(num_nets=2).items():
    print(f"  {name:<14} {value:.2e}")
