"""Dense feed-forward numeric core.

Float64 matrices, a small fully-connected classifier (tanh hidden layers,
identity output with softmax applied separately), reverse-mode gradients
for the fixed topology, plain SGD, and a central-finite-difference
gradient checker.  Everything is a plain value; all operations are pure
functions of their inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    CheckpointError,
    DimensionMismatchError,
    InvalidParameterError,
    NumericalError,
)
from .rng import stream

__all__ = [
    "Layer",
    "Network",
    "ForwardTrace",
    "Gradients",
    "init_network",
    "forward",
    "softmax",
    "flatten_probs",
    "backward",
    "sgd_step",
    "grad_check",
    "get_params",
    "set_params",
    "validate_prob_rows",
    "checkpoint_dumps",
    "checkpoint_loads",
    "save_checkpoint",
    "load_checkpoint",
]

_ACTIVATIONS = ("tanh", "identity")

CHECKPOINT_VERSION = 1


def as_matrix(x, name: str = "array") -> np.ndarray:
    """Coerce to a C-contiguous float64 2-D array and require finite entries."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NumericalError(f"{name} contains non-finite entries")
    return arr


@dataclass
class Layer:
    """One dense layer: ``z = x @ weight.T + bias`` followed by the activation."""

    weight: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str = "tanh"

    def __post_init__(self):
        self.weight = np.ascontiguousarray(self.weight, dtype=np.float64)
        self.bias = np.ascontiguousarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise DimensionMismatchError("layer weight must be 2-D and bias 1-D")
        if self.bias.shape[0] != self.weight.shape[0]:
            raise DimensionMismatchError(
                f"bias length {self.bias.shape[0]} != weight rows {self.weight.shape[0]}"
            )
        if self.activation not in _ACTIVATIONS:
            raise InvalidParameterError(f"unknown activation {self.activation!r}")
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise NumericalError("layer parameters contain non-finite entries")

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    def copy(self) -> "Layer":
        return Layer(self.weight.copy(), self.bias.copy(), self.activation)


@dataclass
class Network:
    """A dense classifier; the last layer emits logits (identity activation)."""

    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise InvalidParameterError("network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise DimensionMismatchError(
                    f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def copy(self) -> "Network":
        return Network([layer.copy() for layer in self.layers])


@dataclass
class ForwardTrace:
    """Cached per-layer tensors for one forward pass on one batch."""

    layer_inputs: list[np.ndarray]  # input to each layer, layer_inputs[0] is the batch
    activated: list[np.ndarray]  # activated output of each layer
    batch_size: int


@dataclass
class Gradients:
    """Per-layer parameter gradients, same shapes as the network parameters."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise DimensionMismatchError("weights and biases lists differ in length")


def init_network(
    layer_dims: list[int] | tuple[int, ...], seed: int, hidden_activation: str = "tanh"
) -> Network:
    """Build a network with weights uniform in [-s, s], s = sqrt(6/(fan_in+fan_out)).

    ``layer_dims`` is (input_dim, hidden..., output_dim); biases start at zero.
    """
    if len(layer_dims) < 2:
        raise InvalidParameterError("layer_dims needs at least input and output dims")
    layers = []
    last = len(layer_dims) - 2
    for k, (fan_in, fan_out) in enumerate(zip(layer_dims, layer_dims[1:])):
        rng = stream(seed, "init", k)
        s = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-s, s, size=(fan_out, fan_in))
        act = hidden_activation if k < last else "identity"
        layers.append(Layer(weight, np.zeros(fan_out), act))
    return Network(layers)


def forward(net: Network, inputs) -> tuple[np.ndarray, ForwardTrace]:
    """Run the batch through the network, returning logits and a backward trace."""
    x = as_matrix(inputs, "inputs")
    if x.shape[1] != net.input_dim:
        raise DimensionMismatchError(
            f"inputs have {x.shape[1]} features, network expects {net.input_dim}"
        )
    layer_inputs = []
    activated = []
    h = x
    # Diverged weights overflow to inf here; the finiteness check below
    # turns that into a NumericalError, so the warning itself is noise.
    with np.errstate(over="ignore", invalid="ignore"):
        for layer in net.layers:
            layer_inputs.append(h)
            z = h @ layer.weight.T + layer.bias
            h = np.tanh(z) if layer.activation == "tanh" else z
            activated.append(h)
    logits = activated[-1]
    if not np.isfinite(logits).all():
        raise NumericalError("forward produced non-finite logits")
    return logits, ForwardTrace(layer_inputs, activated, x.shape[0])


def softmax(logits, temperature: float = 1.0) -> np.ndarray:
    """Row-wise softmax of logits / temperature, stabilized by max subtraction."""
    if not temperature > 0:
        raise InvalidParameterError(f"temperature must be > 0, got {temperature}")
    z = as_matrix(logits, "logits") / temperature
    # Finite rows with an extreme spread can overflow to -inf in the shift;
    # exp maps that to 0, which is the right limit, so mute the warning.
    with np.errstate(over="ignore"):
        z = z - z.max(axis=1, keepdims=True)
        p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    return p


def flatten_probs(probs: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Flatten probability rows by temperature: normalize p ** (1/T) per row.

    Equals softmax(logits / T) when ``probs`` came from softmax(logits).
    T = 1 returns the input unchanged so that default-temperature paths
    stay bit-identical.
    """
    if not temperature > 0:
        raise InvalidParameterError(f"temperature must be > 0, got {temperature}")
    if temperature == 1.0:
        return probs
    flat = np.asarray(probs, dtype=np.float64) ** (1.0 / temperature)
    return flat / flat.sum(axis=1, keepdims=True)


def backward(net: Network, trace: ForwardTrace, dloss_dlogits) -> Gradients:
    """Chain an upstream loss gradient w.r.t. logits back to all parameters.

    The upstream gradient is taken as d(loss)/d(logits) for whatever loss
    normalization the caller uses; no extra batch scaling is applied here.
    """
    g = as_matrix(dloss_dlogits, "dloss_dlogits")
    if len(trace.layer_inputs) != len(net.layers):
        raise DimensionMismatchError("trace does not match network depth")
    if g.shape != (trace.batch_size, net.output_dim):
        raise DimensionMismatchError(
            f"upstream gradient shape {g.shape} != ({trace.batch_size}, {net.output_dim})"
        )
    n_layers = len(net.layers)
    d_weights: list[np.ndarray | None] = [None] * n_layers
    d_biases: list[np.ndarray | None] = [None] * n_layers
    for k in range(n_layers - 1, -1, -1):
        layer = net.layers[k]
        h_in = trace.layer_inputs[k]
        if h_in.shape != (trace.batch_size, layer.in_dim):
            raise DimensionMismatchError(f"trace layer {k} input shape {h_in.shape} mismatch")
        if layer.activation == "tanh":
            h_out = trace.activated[k]
            g = g * (1.0 - h_out * h_out)
        d_weights[k] = g.T @ h_in
        d_biases[k] = g.sum(axis=0)
        if k > 0:
            g = g @ layer.weight
    return Gradients(d_weights, d_biases)  # type: ignore[arg-type]


def sgd_step(net: Network, grads: Gradients, lr: float) -> Network:
    """Return a new network with parameters theta - lr * grad."""
    if not lr > 0:
        raise InvalidParameterError(f"learning rate must be > 0, got {lr}")
    if len(grads.weights) != len(net.layers):
        raise DimensionMismatchError("gradient depth does not match network")
    new_layers = []
    for layer, dw, db in zip(net.layers, grads.weights, grads.biases):
        if dw.shape != layer.weight.shape or db.shape != layer.bias.shape:
            raise DimensionMismatchError("gradient shapes do not match layer parameters")
        if not (np.isfinite(dw).all() and np.isfinite(db).all()):
            raise NumericalError("non-finite gradient entries (training diverged?)")
        # An extreme step can overflow to inf here; Layer catches that as a
        # NumericalError, so silence the intermediate warning.
        with np.errstate(over="ignore"):
            new_layers.append(Layer(layer.weight - lr * dw, layer.bias - lr * db, layer.activation))
    return Network(new_layers)


def get_params(net: Network) -> np.ndarray:
    """Flatten all parameters into one vector (weights row-major, then bias, per layer)."""
    parts = []
    for layer in net.layers:
        parts.append(layer.weight.ravel())
        parts.append(layer.bias)
    return np.concatenate(parts)


def set_params(net: Network, vec: np.ndarray) -> Network:
    """Rebuild a network with the same shapes but parameters taken from ``vec``."""
    vec = np.asarray(vec, dtype=np.float64)
    layers = []
    pos = 0
    for layer in net.layers:
        w_size = layer.weight.size
        w = vec[pos : pos + w_size].reshape(layer.weight.shape).copy()
        pos += w_size
        b = vec[pos : pos + layer.bias.size].copy()
        pos += layer.bias.size
        layers.append(Layer(w, b, layer.activation))
    if pos != vec.size:
        raise DimensionMismatchError(f"parameter vector has {vec.size} entries, expected {pos}")
    return Network(layers)


def _flatten_grads(grads: Gradients) -> np.ndarray:
    parts = []
    for w, b in zip(grads.weights, grads.biases):
        parts.append(np.asarray(w).ravel())
        parts.append(np.asarray(b).ravel())
    return np.concatenate(parts)


def grad_check(net: Network, loss_closure, step: float = 1e-5) -> float:
    """Worst relative disagreement between analytic and central-difference gradients.

    ``loss_closure(net)`` must deterministically return ``(loss, Gradients)``.
    Each parameter is perturbed by +-step and the two-sided difference
    quotient is compared to the analytic gradient with denominator
    max(|analytic|, |numeric|, 1e-8).
    """
    if not (0 < step <= 1e-2):
        raise InvalidParameterError(f"step must be in (0, 1e-2], got {step}")
    _, grads = loss_closure(net)
    analytic = _flatten_grads(grads)
    theta = get_params(net)
    worst = 0.0
    for j in range(theta.size):
        bumped = theta.copy()
        bumped[j] = theta[j] + step
        loss_plus, _ = loss_closure(set_params(net, bumped))
        bumped[j] = theta[j] - step
        loss_minus, _ = loss_closure(set_params(net, bumped))
        numeric = (loss_plus - loss_minus) / (2.0 * step)
        denom = max(abs(analytic[j]), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic[j] - numeric) / denom)
    return worst


def validate_prob_rows(probs, atol: float = 1e-12) -> np.ndarray:
    """Check that every row is a categorical distribution; returns float64 array.

    Rows must be finite, entries within [0, 1] (up to ``atol``), and sum
    to 1 within ``atol``.
    """
    p = as_matrix(probs, "probabilities")
    if (p < -atol).any() or (p > 1.0 + atol).any():
        raise InvalidParameterError("probability entries outside [0, 1]")
    if p.shape[0] and np.abs(p.sum(axis=1) - 1.0).max() > atol:
        raise InvalidParameterError("probability rows do not sum to 1")
    return p


# --- checkpoint format -------------------------------------------------
#
# JSON document {version, input_dim, output_dim, layers:[{rows, cols,
# weights, bias, activation}]} with floats printed at 17 significant
# digits so that save -> load round-trips bit-exactly.  A handwritten
# emitter keeps the byte output deterministic.


def _fmt(x: float) -> str:
    if not np.isfinite(x):
        raise NumericalError("cannot serialize non-finite parameter")
    out = format(float(x), ".17g")
    # Keep a float literal so JSON parsers cannot read "-0" back as int 0.
    if "." not in out and "e" not in out:
        out += ".0"
    return out


def _fmt_array(values) -> str:
    return "[" + ", ".join(_fmt(v) for v in np.asarray(values).ravel()) + "]"


def checkpoint_dumps(net: Network) -> str:
    lines = [
        "{",
        f'  "version": {CHECKPOINT_VERSION},',
        f'  "input_dim": {net.input_dim},',
        f'  "output_dim": {net.output_dim},',
        '  "layers": [',
    ]
    for i, layer in enumerate(net.layers):
        comma = "," if i < len(net.layers) - 1 else ""
        lines.append(
            '    {"rows": %d, "cols": %d, "weights": %s, "bias": %s, "activation": "%s"}%s'
            % (layer.out_dim, layer.in_dim, _fmt_array(layer.weight), _fmt_array(layer.bias), layer.activation, comma)
        )
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def checkpoint_loads(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version: {doc.get('version')!r}")
    try:
        layers = []
        for entry in doc["layers"]:
            rows, cols = int(entry["rows"]), int(entry["cols"])
            weight = np.array(entry["weights"], dtype=np.float64).reshape(rows, cols)
            bias = np.array(entry["bias"], dtype=np.float64)
            layers.append(Layer(weight, bias, entry["activation"]))
        net = Network(layers)
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc
    if net.input_dim != int(doc["input_dim"]) or net.output_dim != int(doc["output_dim"]):
        raise CheckpointError("checkpoint dims disagree with layer shapes")
    return net


def save_checkpoint(net: Network, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(checkpoint_dumps(net))


def load_checkpoint(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return checkpoint_loads(fh.read())
