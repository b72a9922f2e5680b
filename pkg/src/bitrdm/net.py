"""Dense ReLU feed-forward network with input gradients and attacks.

Keeps just enough machinery to study ReLU activation patterns: a forward
pass that records every hidden layer's post-ReLU output, reverse-mode
input gradients of the softmax cross-entropy loss, a deterministic SGD
trainer, and FGSM/PGD adversarial perturbations bounded in L-infinity.
The ReLU subgradient at exactly zero is taken as zero, matching the
convention that a zero output maps to bit 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError, ShapeError

MLP1_MAGIC = b"MLP1"


@dataclass(frozen=True)
class MlpNetwork:
    """Layer dimensions [m, h_1, ..., h_L, c] with per-transition weights.

    All hidden layers apply ReLU; the final transition emits raw logits.
    ``weights[i]`` has shape (layer_dims[i+1], layer_dims[i]) and acts on
    the left: z = W x + b.
    """

    layer_dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        if len(dims) < 2:
            raise ShapeError("need at least input and output dimensions")
        if any(d < 1 for d in dims):
            raise ShapeError(f"layer dimensions must be positive: {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ShapeError(
                f"{len(dims) - 1} layer transitions need as many weight "
                f"matrices and bias vectors"
            )
        ws, bs = [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.ascontiguousarray(w, dtype=np.float64)
            b = np.ascontiguousarray(b, dtype=np.float64)
            if w.shape != (dims[i + 1], dims[i]):
                raise ShapeError(
                    f"weight {i} must have shape {(dims[i + 1], dims[i])}, got {w.shape}"
                )
            if b.shape != (dims[i + 1],):
                raise ShapeError(
                    f"bias {i} must have shape {(dims[i + 1],)}, got {b.shape}"
                )
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def n_hidden_layers(self) -> int:
        return len(self.layer_dims) - 2

    @property
    def n_classes(self) -> int:
        return self.layer_dims[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]


@dataclass(frozen=True)
class ForwardTrace:
    """One forward pass: the input, every post-ReLU hidden vector, logits."""

    input: np.ndarray
    layer_outputs: tuple[np.ndarray, ...]
    logits: np.ndarray


@dataclass(frozen=True)
class AttackConfig:
    """L-infinity-bounded attack parameters.

    ``kind`` is "fgsm" or "pgd".  FGSM takes one epsilon-sized sign step;
    PGD takes ``pgd_steps`` steps of ``pgd_step_size``, projecting back
    onto the epsilon ball after each.  Outputs are always clipped to
    [clip_min, clip_max].
    """

    kind: str
    epsilon: float
    clip_min: float
    clip_max: float
    pgd_steps: int = 10
    pgd_step_size: float = 0.0

    def validate(self) -> None:
        if self.kind not in ("fgsm", "pgd"):
            raise ParameterError(f"unknown attack kind {self.kind!r}")
        if self.epsilon < 0.0:
            raise ParameterError(f"epsilon must be non-negative, got {self.epsilon}")
        if not self.clip_min < self.clip_max:
            raise ParameterError(
                f"clip range is empty: [{self.clip_min}, {self.clip_max}]"
            )
        if self.kind == "pgd":
            if self.pgd_steps < 1:
                raise ParameterError(f"pgd_steps must be >= 1, got {self.pgd_steps}")
            if self.pgd_step_size <= 0.0:
                raise ParameterError(
                    f"pgd_step_size must be positive, got {self.pgd_step_size}"
                )
            if self.pgd_step_size > self.epsilon:
                raise ParameterError("pgd_step_size must not exceed epsilon")


def forward(net: MlpNetwork, x: np.ndarray) -> ForwardTrace:
    """Run one input through the network, recording hidden outputs."""
    xv = np.asarray(x, dtype=np.float64)
    if xv.shape != (net.input_dim,):
        raise ShapeError(f"input must have shape ({net.input_dim},), got {xv.shape}")
    h = xv
    hidden = []
    for i in range(net.n_hidden_layers):
        h = np.maximum(net.weights[i] @ h + net.biases[i], 0.0)
        hidden.append(h)
    logits = net.weights[-1] @ h + net.biases[-1]
    return ForwardTrace(xv, tuple(hidden), logits)


def forward_batch(net: MlpNetwork, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Batched forward: list of per-layer (n, h_i) hidden outputs and logits."""
    xm = np.asarray(x, dtype=np.float64)
    if xm.ndim != 2 or xm.shape[1] != net.input_dim:
        raise ShapeError(f"batch must have shape (n, {net.input_dim})")
    h = xm
    hidden = []
    for i in range(net.n_hidden_layers):
        h = np.maximum(h @ net.weights[i].T + net.biases[i], 0.0)
        hidden.append(h)
    logits = h @ net.weights[-1].T + net.biases[-1]
    return hidden, logits


def hidden_layer_values(net: MlpNetwork, x: np.ndarray, layer: int) -> np.ndarray:
    """Post-ReLU outputs of hidden layer ``layer`` (1-based) for a batch."""
    if not 1 <= layer <= net.n_hidden_layers:
        raise ParameterError(
            f"layer must be in [1, {net.n_hidden_layers}], got {layer}"
        )
    hidden, _ = forward_batch(net, x)
    return hidden[layer - 1]


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def batch_losses_and_input_gradients(
    net: MlpNetwork, x: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Cross-entropy losses and d loss / d input for every row of x."""
    xm = np.asarray(x, dtype=np.float64)
    if xm.ndim != 2 or xm.shape[1] != net.input_dim:
        raise ShapeError(f"batch must have shape (n, {net.input_dim})")
    y = np.asarray(labels)
    if y.shape != (xm.shape[0],):
        raise ShapeError("need one label per input row")
    if y.size and (y.min() < 0 or y.max() >= net.n_classes):
        raise DataError(f"labels must be class indices below {net.n_classes}")

    hidden, logits = forward_batch(net, xm)
    log_probs = _log_softmax(logits)
    n = xm.shape[0]
    losses = -log_probs[np.arange(n), y]
    grad_logits = np.exp(log_probs)
    grad_logits[np.arange(n), y] -= 1.0
    g = grad_logits @ net.weights[-1]
    for i in range(net.n_hidden_layers - 1, -1, -1):
        g = g * (hidden[i] > 0.0)
        g = g @ net.weights[i]
    return losses, g


def loss_and_input_gradient(
    net: MlpNetwork, x: np.ndarray, label: int
) -> tuple[float, np.ndarray]:
    """Cross-entropy loss at (x, label) and its gradient with respect to x."""
    losses, grads = batch_losses_and_input_gradients(
        net, np.asarray(x, dtype=np.float64)[None, :], np.asarray([label])
    )
    return float(losses[0]), grads[0]


def _init_layers(dims: tuple[int, ...], rng) -> tuple[list, list]:
    # uniform(-a, a) for weights and biases alike; nonzero biases keep the
    # bit patterns sensitive to input magnitude, not just direction
    weights, biases = [], []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        a = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-a, a, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-a, a, size=fan_out))
    return weights, biases


def init_network(layer_dims, seed: int = 0) -> MlpNetwork:
    """Seeded uniform(-a, a) initialization, a = sqrt(6 / (fan_in + fan_out))."""
    dims = tuple(int(d) for d in layer_dims)
    weights, biases = _init_layers(dims, np.random.default_rng(seed))
    return MlpNetwork(dims, tuple(weights), tuple(biases))


def train_sgd(
    x: np.ndarray,
    y: np.ndarray,
    layer_dims,
    seed: int = 0,
    epochs: int = 50,
    lr: float = 0.05,
    batch_size: int = 32,
    history: list | None = None,
) -> MlpNetwork:
    """Mini-batch SGD on softmax cross-entropy, deterministic given seed.

    The initialization and the per-epoch shuffle order both come from one
    seeded generator, so identical calls return bitwise-identical
    networks.  If ``history`` is a list, (epoch, mean loss) pairs are
    appended to it.
    """
    xm = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.int64)
    if xm.ndim != 2 or xm.shape[0] == 0:
        raise DataError("training data must be a non-empty (n, m) matrix")
    dims = [int(d) for d in layer_dims]
    if xm.shape[1] != dims[0]:
        raise ShapeError(f"samples have {xm.shape[1]} features, network wants {dims[0]}")
    if yv.shape != (xm.shape[0],):
        raise ShapeError("need one label per training sample")
    if yv.min() < 0 or yv.max() >= dims[-1]:
        raise DataError(f"labels must be class indices below {dims[-1]}")
    if epochs < 0 or lr <= 0.0 or batch_size < 1:
        raise ParameterError("epochs must be >= 0, lr > 0, batch_size >= 1")

    rng = np.random.default_rng(seed)
    dims_t = tuple(dims)
    weights, biases = _init_layers(dims_t, rng)

    n = xm.shape[0]
    n_hidden = len(dims_t) - 2
    for epoch in range(epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb = xm[idx]
            yb = yv[idx]
            m = xb.shape[0]

            acts = [xb]
            h = xb
            for i in range(n_hidden):
                h = np.maximum(h @ weights[i].T + biases[i], 0.0)
                acts.append(h)
            logits = h @ weights[-1].T + biases[-1]
            log_probs = _log_softmax(logits)
            loss_sum += float(-log_probs[np.arange(m), yb].sum())

            delta = np.exp(log_probs)
            delta[np.arange(m), yb] -= 1.0
            delta /= m
            for i in range(len(weights) - 1, -1, -1):
                grad_w = delta.T @ acts[i]
                grad_b = delta.sum(axis=0)
                if i > 0:
                    delta = (delta @ weights[i]) * (acts[i] > 0.0)
                weights[i] -= lr * grad_w
                biases[i] -= lr * grad_b
        if history is not None:
            history.append((epoch + 1, loss_sum / n))
    return MlpNetwork(dims_t, tuple(weights), tuple(biases))


def attack(net: MlpNetwork, x: np.ndarray, label: int, cfg: AttackConfig) -> np.ndarray:
    """Adversarial counterpart of one input under the configured attack."""
    return attack_batch(
        net, np.asarray(x, dtype=np.float64)[None, :], np.asarray([label]), cfg
    )[0]


def attack_batch(
    net: MlpNetwork, x: np.ndarray, labels: np.ndarray, cfg: AttackConfig
) -> np.ndarray:
    """FGSM or PGD perturbation of every row, staying within the epsilon
    ball around the original and inside [clip_min, clip_max]."""
    cfg.validate()
    xm = np.asarray(x, dtype=np.float64)
    if xm.ndim != 2 or xm.shape[1] != net.input_dim:
        raise ShapeError(f"batch must have shape (n, {net.input_dim})")
    if xm.size and (xm.min() < cfg.clip_min or xm.max() > cfg.clip_max):
        raise DataError("inputs must already lie inside [clip_min, clip_max]")
    y = np.asarray(labels)

    if cfg.kind == "fgsm":
        _, grads = batch_losses_and_input_gradients(net, xm, y)
        adv = xm + cfg.epsilon * np.sign(grads)
        return np.clip(adv, cfg.clip_min, cfg.clip_max)

    lo = xm - cfg.epsilon
    hi = xm + cfg.epsilon
    adv = xm.copy()
    for _ in range(cfg.pgd_steps):
        _, grads = batch_losses_and_input_gradients(net, adv, y)
        adv = adv + cfg.pgd_step_size * np.sign(grads)
        adv = np.clip(adv, lo, hi)
        adv = np.clip(adv, cfg.clip_min, cfg.clip_max)
    return adv


def save_mlp1(net: MlpNetwork, path) -> None:
    """Write the "MLP1" format: per-transition f32 weights and biases."""
    with open(path, "wb") as fh:
        fh.write(MLP1_MAGIC)
        fh.write(struct.pack("<I", len(net.weights)))
        for w, b in zip(net.weights, net.biases):
            out_dim, in_dim = w.shape
            fh.write(struct.pack("<II", in_dim, out_dim))
            fh.write(w.astype("<f4").tobytes())
            fh.write(b.astype("<f4").tobytes())


def load_mlp1(path) -> MlpNetwork:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MLP1_MAGIC:
            raise DataError(f"{path}: bad magic {magic!r}, expected {MLP1_MAGIC!r}")
        (n_layers,) = struct.unpack("<I", fh.read(4))
        weights, biases, dims = [], [], []
        for t in range(n_layers):
            header = fh.read(8)
            if len(header) != 8:
                raise DataError(f"{path}: truncated MLP1 layer header")
            in_dim, out_dim = struct.unpack("<II", header)
            wbytes = fh.read(4 * in_dim * out_dim)
            bbytes = fh.read(4 * out_dim)
            if len(wbytes) != 4 * in_dim * out_dim or len(bbytes) != 4 * out_dim:
                raise DataError(f"{path}: truncated MLP1 layer payload")
            w = np.frombuffer(wbytes, dtype="<f4").reshape(out_dim, in_dim)
            b = np.frombuffer(bbytes, dtype="<f4")
            if t == 0:
                dims.append(in_dim)
            elif dims[-1] != in_dim:
                raise DataError(
                    f"{path}: layer {t} input dim {in_dim} does not chain "
                    f"with previous output dim {dims[-1]}"
                )
            dims.append(out_dim)
            weights.append(w.astype(np.float64))
            biases.append(b.astype(np.float64))
    return MlpNetwork(tuple(dims), tuple(weights), tuple(biases))
