"""Dense feedforward network with hand-derived backpropagation.

No autodiff framework: the forward pass, the half-scaled mean squared
error J = (1/2m) sum_i ||y_i - f_i||^2, and its exact gradients are
written out layer by layer in plain NumPy, in double precision.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, ShapeError, ValidationError
from .textio import fmt, kv_value, parse_float, parse_int

LEAKY_RELU = "leakyrelu"
LINEAR = "linear"
_ACTIVATIONS = (LEAKY_RELU, LINEAR)


@dataclass
class DenseLayer:
    """Affine map plus activation: act(W x + b), W is (out, in)."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str = LEAKY_RELU
    alpha: float = 0.01

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.biases = np.asarray(self.biases, dtype=float)
        if self.weights.ndim != 2 or self.biases.ndim != 1:
            raise ShapeError("weights must be 2-D and biases 1-D")
        if self.biases.shape[0] != self.weights.shape[0]:
            raise ShapeError(
                f"bias length {self.biases.shape[0]} != output size {self.weights.shape[0]}"
            )
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation '{self.activation}'")
        if self.activation == LEAKY_RELU and self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValidationError("layer parameters must be finite")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class MimicNetwork:
    """Stack of dense layers; the reference motion net is 1-75-50-23."""

    layers: list
    input_dim: int

    def __post_init__(self):
        prev = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.in_dim != prev:
                raise ShapeError(f"layer {i} expects input {layer.in_dim}, previous gives {prev}")
            prev = layer.out_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


@dataclass
class GradientSet:
    """Loss gradients, same shapes as the network parameters."""

    weights: list
    biases: list


def leaky_relu(x, alpha: float = 0.01):
    """x for x >= 0, alpha*x otherwise; alpha must be positive."""
    if alpha <= 0:
        raise ConfigError("alpha must be positive")
    arr = np.asarray(x, dtype=float)
    out = np.where(arr >= 0, arr, alpha * arr)
    return float(out) if np.ndim(x) == 0 else out


def _leaky_relu_grad(z, alpha):
    # derivative at exactly 0 is fixed to 1 for determinism
    return np.where(z >= 0, 1.0, alpha)


def _as_batch(x, dim, what="input"):
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ShapeError(f"{what} must have {dim} components, got shape {np.shape(x)}")
    return arr, single


def forward(net: MimicNetwork, x):
    """Layer-by-layer evaluation; accepts one vector or a (m, in) batch."""
    a, single = _as_batch(x, net.input_dim)
    for layer in net.layers:
        z = a @ layer.weights.T + layer.biases
        a = leaky_relu(z, layer.alpha) if layer.activation == LEAKY_RELU else z
    return a[0] if single else a


def mse_loss(pred, target) -> float:
    """Half-scaled mean squared error over a batch: (1/2m) sum ||y - f||^2."""
    p = np.asarray(pred, dtype=float)
    y = np.asarray(target, dtype=float)
    if p.shape != y.shape:
        raise ShapeError(f"prediction shape {p.shape} != target shape {y.shape}")
    if p.ndim == 1:
        p, y = p[None, :], y[None, :]
    diff = y - p
    return float(0.5 * np.sum(diff * diff) / p.shape[0])


def forward_backward(net: MimicNetwork, x, y):
    """One full pass: returns (loss, predictions, GradientSet).

    Gradients are the exact analytic derivatives of mse_loss with
    respect to every weight and bias, accumulated over the batch.
    """
    xb, _ = _as_batch(x, net.input_dim)
    yb, _ = _as_batch(y, net.output_dim, what="target")
    if xb.shape[0] != yb.shape[0]:
        raise ShapeError(f"batch sizes differ: {xb.shape[0]} inputs vs {yb.shape[0]} targets")
    m = xb.shape[0]

    pre = []
    acts = [xb]
    a = xb
    for layer in net.layers:
        z = a @ layer.weights.T + layer.biases
        pre.append(z)
        a = leaky_relu(z, layer.alpha) if layer.activation == LEAKY_RELU else z
        acts.append(a)

    diff = acts[-1] - yb
    loss = float(0.5 * np.sum(diff * diff) / m)

    n_layers = len(net.layers)
    w_grads = [None] * n_layers
    b_grads = [None] * n_layers
    delta = diff / m  # dJ/d(layer output), propagated backwards
    for li in range(n_layers - 1, -1, -1):
        layer = net.layers[li]
        if layer.activation == LEAKY_RELU:
            delta = delta * _leaky_relu_grad(pre[li], layer.alpha)
        w_grads[li] = delta.T @ acts[li]
        b_grads[li] = delta.sum(axis=0)
        if li > 0:
            delta = delta @ layer.weights
    return loss, acts[-1], GradientSet(w_grads, b_grads)


def backward(net: MimicNetwork, x, y):
    """Batch loss and its gradient for every parameter."""
    loss, _, grads = forward_backward(net, x, y)
    return loss, grads


def param_count(net: MimicNetwork):
    """Per-layer parameter counts (weights + biases) and their total."""
    counts = [layer.out_dim * layer.in_dim + layer.out_dim for layer in net.layers]
    return counts, sum(counts)


def initialize(layer_sizes, seed: int = 0, alpha: float = 0.01, activations=None) -> MimicNetwork:
    """Seeded network: weights uniform in +/-sqrt(6/(in+out)), biases zero.

    layer_sizes is the full chain [input, hidden..., output]; hidden
    layers default to leaky ReLU and the last layer to linear.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ConfigError("need at least an input and an output size")
    if any(s <= 0 for s in sizes):
        raise ConfigError(f"layer sizes must be positive, got {sizes}")
    n_layers = len(sizes) - 1
    if activations is None:
        activations = [LEAKY_RELU] * (n_layers - 1) + [LINEAR]
    if len(activations) != n_layers:
        raise ConfigError(f"expected {n_layers} activations, got {len(activations)}")

    rng = np.random.default_rng(seed)
    layers = []
    for i in range(n_layers):
        fan_in, fan_out = sizes[i], sizes[i + 1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(DenseLayer(weights, np.zeros(fan_out), activations[i], alpha))
    return MimicNetwork(layers, input_dim=sizes[0])


# --- weight file format ----------------------------------------------------
# header: mimicnet layers=<k> input=<d> alpha=<float>
# per layer: 'layer out=<o> in=<i> act=<leakyrelu|linear>',
#            o lines of i weights, one line of o biases


def format_weights(net: MimicNetwork) -> str:
    alphas = {layer.alpha for layer in net.layers if layer.activation == LEAKY_RELU}
    if len(alphas) > 1:
        raise ValidationError("layers must share a single alpha to be saved")
    alpha = alphas.pop() if alphas else 0.01
    lines = [f"mimicnet layers={len(net.layers)} input={net.input_dim} alpha={fmt(alpha)}"]
    for layer in net.layers:
        lines.append(f"layer out={layer.out_dim} in={layer.in_dim} act={layer.activation}")
        for row in layer.weights:
            lines.append(" ".join(fmt(v) for v in row))
        lines.append(" ".join(fmt(v) for v in layer.biases))
    return "\n".join(lines) + "\n"


def parse_weights(text: str) -> MimicNetwork:
    lines = text.splitlines()
    if not lines:
        raise FormatError("line 1: missing mimicnet header")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "mimicnet":
        raise FormatError("line 1: expected 'mimicnet layers=<k> input=<d> alpha=<float>'")
    n_layers = parse_int(kv_value(head[1], "layers", 1), 1, "layers")
    input_dim = parse_int(kv_value(head[2], "input", 1), 1, "input")
    alpha = parse_float(kv_value(head[3], "alpha", 1), 1, "alpha")

    layers = []
    ln = 1
    for _ in range(n_layers):
        ln += 1
        if ln > len(lines):
            raise FormatError(f"line {ln}: missing layer header")
        head = lines[ln - 1].split()
        if len(head) != 4 or head[0] != "layer":
            raise FormatError(f"line {ln}: expected 'layer out=<o> in=<i> act=<...>'")
        out_dim = parse_int(kv_value(head[1], "out", ln), ln, "out")
        in_dim = parse_int(kv_value(head[2], "in", ln), ln, "in")
        act = kv_value(head[3], "act", ln)
        if act not in _ACTIVATIONS:
            raise FormatError(f"line {ln}: unknown activation '{act}'")
        rows = []
        for r in range(out_dim):
            ln += 1
            if ln > len(lines):
                raise FormatError(f"line {ln}: missing weight row")
            vals = [parse_float(v, ln, "weight") for v in lines[ln - 1].split()]
            if len(vals) != in_dim:
                raise FormatError(f"line {ln}: expected {in_dim} weights, found {len(vals)}")
            rows.append(vals)
        ln += 1
        if ln > len(lines):
            raise FormatError(f"line {ln}: missing bias row")
        biases = [parse_float(v, ln, "bias") for v in lines[ln - 1].split()]
        if len(biases) != out_dim:
            raise FormatError(f"line {ln}: expected {out_dim} biases, found {len(biases)}")
        layers.append(DenseLayer(np.array(rows), np.array(biases), act, alpha))
    return MimicNetwork(layers, input_dim=input_dim)


def save_weights(net: MimicNetwork, path):
    with open(path, "w") as f:
        f.write(format_weights(net))


def load_weights(path) -> MimicNetwork:
    with open(path) as f:
        return parse_weights(f.read())
