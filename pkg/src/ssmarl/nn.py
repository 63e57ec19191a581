"""Dense network engine: forward, exact backprop, Adam, softmax heads.

Everything here is plain float64 numpy. Networks are small value objects
(lists of weight/bias arrays) with ReLU hidden layers and an identity
output layer; policies put a softmax on top. No autodiff framework is
involved: gradients are hand-derived and validated against central finite
differences by `gradient_check`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Floor applied to policy probabilities so ratio denominators and logs stay
# finite even for saturated logits.
PROB_FLOOR = 1e-12


class ShapeError(ValueError):
    """Input, gradient, or parameter shapes do not match the network."""


@dataclass
class DenseNet:
    """Fully connected ReLU network with an identity output layer.

    weights[l] has shape (layer_sizes[l+1], layer_sizes[l]) and biases[l]
    has shape (layer_sizes[l+1],). All parameters are float64.

    With bounded_features set, the network reads inputs through a fixed
    dual-scale encoding [x / input_scale, tanh(x)]: the first component
    carries global position at unit range, the second resolves fine
    structure near zero with slope 1 and saturates far away. layer_sizes[0]
    is then twice the external input width.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_scale: float = 1.0
    bounded_features: bool = False

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        """External input width (before any feature encoding)."""
        if self.bounded_features:
            return self.layer_sizes[0] // 2
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class NetGradients:
    """Parameter gradients in the same layout as DenseNet, summed over the batch."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass
class AdamState:
    """First/second moment accumulators and step counter for one network."""

    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]
    step: int = 0


@dataclass
class GradientCheckResult:
    passed: bool
    max_rel_error: float
    worst_layer: int
    worst_kind: str  # "weight" or "bias"


def init_net(layer_sizes, rng: np.random.Generator,
             input_scale: float = 1.0,
             bounded_features: bool = False) -> DenseNet:
    """Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.

    input_scale is the typical magnitude of the network's inputs. Without
    bounded_features, the first layer's weights are divided by it so that
    wide-range inputs still produce unit-scale pre-activations at
    initialization (softmax heads start close to uniform instead of
    saturated); the reachable function class is unchanged — only the
    starting point moves.

    With bounded_features, the network instead reads the fixed encoding
    [x / input_scale, tanh(x)] (see DenseNet): the first linear layer is
    built twice as wide and no weight division is applied, since both
    feature components are already unit-range. This changes the function
    class: the tanh component gives the net first-class resolution near
    x = 0 that a plain net on wide-range inputs could only reach by growing
    very large first-layer weights.
    """
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ShapeError(f"need at least two positive layer sizes, got {sizes}")
    if not np.isfinite(input_scale) or input_scale <= 0:
        raise ValueError(f"input_scale must be positive, got {input_scale}")
    if bounded_features:
        sizes = (2 * sizes[0],) + sizes[1:]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    if not bounded_features:
        weights[0] /= float(input_scale)
    return DenseNet(sizes, weights, biases,
                    input_scale=float(input_scale),
                    bounded_features=bounded_features)


def encode_inputs(net: DenseNet, xb: np.ndarray) -> np.ndarray:
    """Apply the network's fixed input encoding to a validated batch."""
    if not net.bounded_features:
        return xb
    return np.concatenate([xb / net.input_scale, np.tanh(xb)], axis=1)


def clone_net(net: DenseNet) -> DenseNet:
    return DenseNet(
        net.layer_sizes,
        [w.copy() for w in net.weights],
        [b.copy() for b in net.biases],
        input_scale=net.input_scale,
        bounded_features=net.bounded_features,
    )


def copy_params_into(dst: DenseNet, src: DenseNet) -> None:
    """Overwrite dst's parameters with src's (shapes must already match)."""
    if dst.layer_sizes != src.layer_sizes:
        raise ShapeError(f"layer mismatch {dst.layer_sizes} vs {src.layer_sizes}")
    if (dst.bounded_features, dst.input_scale) != (src.bounded_features,
                                                   src.input_scale):
        raise ShapeError("input encoding mismatch between networks")
    for wd, ws in zip(dst.weights, src.weights):
        wd[...] = ws
    for bd, bs in zip(dst.biases, src.biases):
        bd[...] = bs


def _as_batch(x, dim: int):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        if x.shape[0] != dim:
            raise ShapeError(f"input length {x.shape[0]} != expected {dim}")
        return x[None, :], True
    if x.ndim == 2:
        if x.shape[1] != dim:
            raise ShapeError(f"input width {x.shape[1]} != expected {dim}")
        return x, False
    raise ShapeError(f"input must be 1-D or 2-D, got ndim={x.ndim}")


def forward(net: DenseNet, x) -> np.ndarray:
    """Apply the network. Accepts a single vector or a (batch, in_dim) matrix."""
    xb, squeeze = _as_batch(x, net.in_dim)
    h = encode_inputs(net, xb)
    last = net.n_layers - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if l != last:
            np.maximum(h, 0.0, out=h)
    return h[0] if squeeze else h


def forward_cached(net: DenseNet, x) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass keeping per-layer post-activation values for backward.

    Returns (output, activations) where activations[0] is the encoded input
    batch and activations[l] the post-ReLU output of hidden layer l.
    """
    xb, _ = _as_batch(x, net.in_dim)
    h = encode_inputs(net, xb)
    acts = [h]
    last = net.n_layers - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if l != last:
            np.maximum(h, 0.0, out=h)
            acts.append(h)
    return h, acts


def backward(net: DenseNet, x, out_grad) -> NetGradients:
    """Exact chain-rule gradients of sum_b <out_grad_b, f(x_b)> over parameters.

    out_grad must match the forward output shape for x. Gradients are summed
    over the batch; callers scale for means. ReLU uses the a.e. derivative
    (subgradient 0 at exactly 0).
    """
    xb, squeezed = _as_batch(x, net.in_dim)
    out, acts = forward_cached(net, xb)
    g = np.asarray(out_grad, dtype=np.float64)
    if squeezed and g.ndim == 1:
        g = g[None, :]
    if g.shape != out.shape:
        raise ShapeError(f"out_grad shape {g.shape} != output shape {out.shape}")

    dW = [None] * net.n_layers
    db = [None] * net.n_layers
    delta = g
    for l in range(net.n_layers - 1, -1, -1):
        dW[l] = delta.T @ acts[l]
        db[l] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ net.weights[l]
            delta = delta * (acts[l] > 0.0)
    return NetGradients(dW, db)


def zero_gradients(net: DenseNet) -> NetGradients:
    return NetGradients(
        [np.zeros_like(w) for w in net.weights],
        [np.zeros_like(b) for b in net.biases],
    )


def scale_gradients(grads: NetGradients, factor: float) -> NetGradients:
    return NetGradients(
        [w * factor for w in grads.weights],
        [b * factor for b in grads.biases],
    )


def accumulate_gradients(total: NetGradients, extra: NetGradients) -> None:
    for t, e in zip(total.weights, extra.weights):
        t += e
    for t, e in zip(total.biases, extra.biases):
        t += e


def adam_init(net: DenseNet) -> AdamState:
    return AdamState(
        [np.zeros_like(w) for w in net.weights],
        [np.zeros_like(w) for w in net.weights],
        [np.zeros_like(b) for b in net.biases],
        [np.zeros_like(b) for b in net.biases],
    )


def adam_step(
    net: DenseNet,
    grads: NetGradients,
    state: AdamState,
    lr: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> None:
    """One Adam descent step; mutates net and state in place.

    Raises ValueError on non-finite gradients, naming the offending layer.
    """
    for l, g in enumerate(grads.weights):
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite weight gradient in layer {l}")
    for l, g in enumerate(grads.biases):
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite bias gradient in layer {l}")

    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for param, g, m, v in (
        *zip(net.weights, grads.weights, state.m_weights, state.v_weights),
        *zip(net.biases, grads.biases, state.m_biases, state.v_biases),
    ):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def softmax_distribution(logits) -> np.ndarray:
    """Numerically stable softmax along the last axis.

    Valid for any finite logits (max is subtracted first); entries may hit
    exactly 0.0 when logit gaps exceed float range, but the vector always
    sums to 1.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0 or z.shape[-1] == 0:
        raise ValueError("softmax over empty logits")
    if not np.all(np.isfinite(z)):
        raise ValueError("softmax requires finite logits")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def policy_distribution(net: DenseNet, x) -> np.ndarray:
    """Softmax over the net's output logits, floored away from exact 0/1.

    The floor (PROB_FLOOR, then renormalize) keeps every probability strictly
    inside (0, 1) so ratio denominators and logs are always finite. Away from
    saturation the floor is inactive and this is plain softmax.
    """
    p = softmax_distribution(forward(net, x))
    p = np.maximum(p, PROB_FLOOR)
    return p / p.sum(axis=-1, keepdims=True)


def softmax_backward(probs: np.ndarray, dprobs: np.ndarray) -> np.ndarray:
    """Pull a gradient w.r.t. softmax outputs back to the logits.

    Works on matching (..., k) arrays: J^T d = p * (d - <p, d>).
    """
    inner = np.sum(probs * dprobs, axis=-1, keepdims=True)
    return probs * (dprobs - inner)


def central_difference(f, arrays: list[np.ndarray], h: float = 1e-5) -> list[np.ndarray]:
    """Central finite-difference gradient of scalar f() w.r.t. arrays.

    f is called with no arguments and must read the (mutated in place)
    arrays; this lets callers check gradients of arbitrary compositions.
    """
    out = []
    for arr in arrays:
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = f()
            flat[idx] = orig - h
            down = f()
            flat[idx] = orig
            gflat[idx] = (up - down) / (2.0 * h)
        out.append(g)
    return out


def gradient_check(
    net: DenseNet,
    x,
    loss_fn,
    loss_grad=None,
    h: float = 1e-5,
    tol: float = 1e-4,
) -> GradientCheckResult:
    """Compare backprop parameter gradients against central finite differences.

    loss_fn maps the net output (1-D, single input x) to a scalar; loss_grad,
    if given, maps the output to d loss / d output. Without loss_grad the
    output gradient itself is obtained by central differences on loss_fn.
    Relative error uses max(|fd|, |bp|, 1e-8) in the denominator so dead
    parameters do not divide by zero.
    """
    out = forward(net, x)
    if loss_grad is not None:
        og = np.asarray(loss_grad(out), dtype=np.float64)
    else:
        og = np.zeros_like(out)
        for k in range(out.size):
            bump = np.zeros_like(out)
            bump[k] = h
            og[k] = (loss_fn(out + bump) - loss_fn(out - bump)) / (2.0 * h)
    analytic = backward(net, x, og)

    def loss_now():
        return float(loss_fn(forward(net, x)))

    fd_w = central_difference(loss_now, net.weights, h)
    fd_b = central_difference(loss_now, net.biases, h)

    worst = 0.0
    worst_layer, worst_kind = 0, "weight"
    for l in range(net.n_layers):
        for kind, fd, bp in (("weight", fd_w[l], analytic.weights[l]),
                             ("bias", fd_b[l], analytic.biases[l])):
            denom = np.maximum(np.maximum(np.abs(fd), np.abs(bp)), 1e-8)
            rel = np.abs(fd - bp) / denom
            m = float(rel.max()) if rel.size else 0.0
            if m > worst:
                worst, worst_layer, worst_kind = m, l, kind
    return GradientCheckResult(worst <= tol, worst, worst_layer, worst_kind)


def save_net(net: DenseNet, path) -> None:
    """Write parameters as hex floats: lossless 64-bit round trip.

    Nets with the default input encoding keep the original "densenet 1"
    layout; nets with a non-default encoding add an `encoding` record under
    a "densenet 2" header (old readers fail loudly on the new header).
    """
    plain = not net.bounded_features and net.input_scale == 1.0
    lines = ["densenet 1" if plain else "densenet 2",
             "layers " + " ".join(str(s) for s in net.layer_sizes)]
    if not plain:
        lines.append(
            f"encoding {float(net.input_scale).hex()} {int(net.bounded_features)}"
        )
    for w, b in zip(net.weights, net.biases):
        lines.append("w " + " ".join(v.hex() for v in w.reshape(-1)))
        lines.append("b " + " ".join(v.hex() for v in b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_net(path) -> DenseNet:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] not in ("densenet 1", "densenet 2"):
        raise ValueError(f"{path}: not a densenet file (bad or missing header)")
    if len(lines) < 2 or not lines[1].startswith("layers "):
        raise ValueError(f"{path}: missing layer sizes on line 2")
    sizes = tuple(int(tok) for tok in lines[1].split()[1:])
    input_scale, bounded = 1.0, False
    row = 2
    if lines[0] == "densenet 2":
        if len(lines) < 3 or not lines[2].startswith("encoding "):
            raise ValueError(f"{path}: missing encoding record on line 3")
        tok = lines[2].split()
        if len(tok) != 3 or tok[2] not in ("0", "1"):
            raise ValueError(f"{path}: malformed encoding record")
        input_scale = float.fromhex(tok[1])
        bounded = tok[2] == "1"
        row = 3
    expected = row + 2 * (len(sizes) - 1)
    if len(lines) != expected:
        raise ValueError(
            f"{path}: truncated or padded file, expected {expected} lines got {len(lines)}"
        )
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        wtok = lines[row].split()
        btok = lines[row + 1].split()
        if wtok[0] != "w" or btok[0] != "b":
            raise ValueError(f"{path}: expected w/b records at line {row + 1}")
        if len(wtok) - 1 != fan_in * fan_out or len(btok) - 1 != fan_out:
            raise ValueError(f"{path}: wrong parameter count at line {row + 1}")
        weights.append(
            np.array([float.fromhex(t) for t in wtok[1:]]).reshape(fan_out, fan_in)
        )
        biases.append(np.array([float.fromhex(t) for t in btok[1:]]))
        row += 2
    return DenseNet(sizes, weights, biases,
                    input_scale=input_scale, bounded_features=bounded)
