"""Dense-network numerics: forward passes, exact reverse-mode gradients,
losses, and the Adam optimizer.

All arrays are float64. Networks are plain lists of `DenseLayer`; a
"stack" fed to `forward_backward` is implicitly followed by softmax and
cross-entropy, and gradients are computed for every parameter and for
the input vector itself.
"""

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "identity")

# Probability floor inside cross-entropy; keeps the loss finite on
# confident wrong predictions.
P_FLOOR = 1e-12


@dataclass
class DenseLayer:
    """Affine map plus elementwise activation: act(W @ x + b)."""

    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str = "relu"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"weights rows ({self.weights.shape[0]}) != bias length ({self.bias.shape[0]})"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class LayerGrads:
    d_weights: np.ndarray
    d_bias: np.ndarray


@dataclass
class Gradients:
    """Per-layer parameter gradients plus the gradient w.r.t. the input."""

    layers: list[LayerGrads]
    input_grad: np.ndarray


@dataclass
class AdamState:
    """First/second moment accumulators mirroring a parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """Apply one dense layer to a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != layer.in_dim:
        raise ValueError(f"expected input of length {layer.in_dim}, got shape {x.shape}")
    z = layer.weights @ x + layer.bias
    if layer.activation == "relu":
        return np.maximum(z, 0.0)
    return z


def softmax(z: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max-subtraction)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] < 1:
        raise ValueError("softmax expects a non-empty vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("softmax input must be finite")
    e = np.exp(z - np.max(z))
    return e / np.sum(e)


def cross_entropy(p: np.ndarray, label: int) -> float:
    """Negative log-likelihood of `label` under distribution `p`.

    The picked probability is floored at P_FLOOR so the loss stays finite.
    """
    p = np.asarray(p, dtype=np.float64)
    if not 0 <= label < p.shape[0]:
        raise ValueError(f"label {label} out of range for {p.shape[0]} classes")
    return float(-np.log(max(float(p[label]), P_FLOOR)))


def forward_backward(
    stack: list[DenseLayer], x: np.ndarray, label: int
) -> tuple[float, Gradients]:
    """Loss and exact reverse-mode gradients of softmax + cross-entropy.

    Returns gradients for every layer's weights/bias and for the input
    vector. The ReLU subgradient at 0 is taken as 0; when the floored
    branch of the cross-entropy is active the gradient is exactly zero
    (the loss is locally constant there).
    """
    if not stack:
        raise ValueError("empty layer stack")
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1 or a.shape[0] != stack[0].in_dim:
        raise ValueError(f"expected input of length {stack[0].in_dim}, got shape {a.shape}")

    pre: list[np.ndarray] = []  # pre-activation of each layer
    inputs: list[np.ndarray] = []  # input seen by each layer
    for layer in stack:
        if a.shape[0] != layer.in_dim:
            raise ValueError("layer dimensions do not chain")
        inputs.append(a)
        z = layer.weights @ a + layer.bias
        pre.append(z)
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z

    p = softmax(a)
    loss = cross_entropy(p, label)

    # Fused softmax/cross-entropy gradient w.r.t. the logits.
    if p[label] >= P_FLOOR:
        dz = p.copy()
        dz[label] -= 1.0
    else:
        dz = np.zeros_like(p)

    layer_grads: list[LayerGrads | None] = [None] * len(stack)
    for i in range(len(stack) - 1, -1, -1):
        layer = stack[i]
        if layer.activation == "relu":
            dz = dz * (pre[i] > 0.0)
        layer_grads[i] = LayerGrads(np.outer(dz, inputs[i]), dz.copy())
        dz = layer.weights.T @ dz

    return loss, Gradients(layer_grads, input_grad=dz)


def stack_params(stack: list[DenseLayer]) -> list[np.ndarray]:
    """Flatten a layer stack into [W1, b1, W2, b2, ...] (live views)."""
    params: list[np.ndarray] = []
    for layer in stack:
        params.append(layer.weights)
        params.append(layer.bias)
    return params


def grads_as_list(grads: Gradients) -> list[np.ndarray]:
    """Gradient arrays in the same order as `stack_params`."""
    out: list[np.ndarray] = []
    for lg in grads.layers:
        out.append(lg.d_weights)
        out.append(lg.d_bias)
    return out


def init_adam(params: list[np.ndarray]) -> AdamState:
    return AdamState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
    )


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """One Adam update with bias correction, applied in place."""
    if lr < 0:
        raise ValueError("learning rate must be >= 0")
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params/grads/state lengths differ")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not mirror parameter {p.shape}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
