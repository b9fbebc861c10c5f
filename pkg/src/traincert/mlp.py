"""Fully connected network with manual backpropagation.

Data flows column-wise: an input batch is an (n x d) matrix whose columns
are samples, a layer maps (n_k x d) to (m_k x d) via weight @ h + bias, and
the loss is the squared Frobenius residual divided by the number of columns.
No autodiff framework is involved; gradients are derived by hand and checked
against finite differences in the test suite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .linalg import Matrix, ShapeError, as_matrix, frob_norm_sq


class TrainingFault(RuntimeError):
    """Non-finite values reached the optimizer; the run cannot continue."""


class ActivationKind(enum.Enum):
    RELU = "relu"
    IDENTITY = "identity"

    def apply(self, z: Matrix) -> Matrix:
        if self is ActivationKind.RELU:
            return np.maximum(z, 0.0)
        return z

    def grad_mask(self, z: Matrix) -> Matrix:
        """Elementwise derivative; the ReLU subgradient at 0 is taken as 0."""
        if self is ActivationKind.RELU:
            return (z > 0.0).astype(np.float64)
        return np.ones_like(z)

    def feasible(self, y: Matrix) -> bool:
        """True when y lies in the activation's output range elementwise."""
        if self is ActivationKind.RELU:
            return bool(np.all(y >= 0.0))
        return True

    @staticmethod
    def parse(name: str) -> "ActivationKind":
        try:
            return ActivationKind(name.lower())
        except ValueError:
            raise ValueError(f"unknown activation {name!r}; use 'relu' or 'identity'") from None


@dataclass
class Layer:
    weight: Matrix
    bias: np.ndarray | None  # column vector (m x 1) or None
    activation: ActivationKind

    def copy(self) -> "Layer":
        return Layer(
            weight=self.weight.copy(),
            bias=None if self.bias is None else self.bias.copy(),
            activation=self.activation,
        )


@dataclass
class MlpParams:
    layers: list[Layer]

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def layer_dims(self) -> list[int]:
        dims = [self.layers[0].weight.shape[1]]
        dims.extend(layer.weight.shape[0] for layer in self.layers)
        return dims

    def copy(self) -> "MlpParams":
        return MlpParams([layer.copy() for layer in self.layers])

    def param_count(self) -> int:
        total = 0
        for layer in self.layers:
            total += layer.weight.size
            if layer.bias is not None:
                total += layer.bias.size
        return total


def default_activations(num_layers: int) -> list[ActivationKind]:
    """ReLU hidden layers, identity output so targets may be negative."""
    if num_layers == 1:
        return [ActivationKind.IDENTITY]
    return [ActivationKind.RELU] * (num_layers - 1) + [ActivationKind.IDENTITY]


def init_params(
    layer_dims: list[int],
    use_bias: bool,
    activations: list[ActivationKind] | None,
    seed: int,
) -> MlpParams:
    """Zero-mean weights with std 1/sqrt(fan_in); biases start at zero."""
    if len(layer_dims) < 2:
        raise ValueError(f"layer_dims needs at least 2 entries, got {layer_dims}")
    if any(dim < 1 for dim in layer_dims):
        raise ValueError(f"layer dimensions must be >= 1, got {layer_dims}")
    num_layers = len(layer_dims) - 1
    if activations is None:
        activations = default_activations(num_layers)
    if len(activations) != num_layers:
        raise ValueError(
            f"got {len(activations)} activations for {num_layers} layers"
        )
    rng = np.random.default_rng(seed)
    layers = []
    for k in range(num_layers):
        fan_in = layer_dims[k]
        fan_out = layer_dims[k + 1]
        weight = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))
        bias = np.zeros((fan_out, 1)) if use_bias else None
        layers.append(Layer(weight=weight, bias=bias, activation=activations[k]))
    return MlpParams(layers)


@dataclass
class ForwardResult:
    output: Matrix
    # layer_outputs[0] is the input; layer_outputs[k] the post-activation
    # output of layer k, so the list has depth+1 entries.
    layer_outputs: list[Matrix]


def _check_input(params: MlpParams, x: Matrix) -> Matrix:
    x = as_matrix(x, "input")
    expected = params.layers[0].weight.shape[1]
    if x.shape[0] != expected:
        raise ShapeError(
            f"input has {x.shape[0]} rows but layer 1 expects {expected}"
        )
    return x


def forward(params: MlpParams, x: Matrix) -> ForwardResult:
    x = _check_input(params, x)
    outputs = [x]
    h = x
    for idx, layer in enumerate(params.layers, start=1):
        if layer.weight.shape[1] != h.shape[0]:
            raise ShapeError(
                f"layer {idx} expects {layer.weight.shape[1]} rows, got {h.shape[0]}"
            )
        z = layer.weight @ h
        if layer.bias is not None:
            z = z + layer.bias
        h = layer.activation.apply(z)
        outputs.append(h)
    return ForwardResult(output=h, layer_outputs=outputs)


def loss_mse(output: Matrix, y: Matrix) -> float:
    """Squared Frobenius residual divided by the number of samples (columns).

    The same per-sample normalization is used for the certification bounds,
    which keeps loss and bounds directly comparable.
    """
    output = np.asarray(output, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if output.shape != y.shape:
        raise ShapeError(f"output shape {output.shape} != target shape {y.shape}")
    return frob_norm_sq(output - y) / y.shape[1]


@dataclass
class LayerGrads:
    weight: Matrix
    bias: np.ndarray | None


def backward(params: MlpParams, x: Matrix, y: Matrix) -> list[LayerGrads]:
    """Exact gradient of loss_mse with respect to every weight and bias."""
    x = _check_input(params, x)
    h = x
    pre_acts = []
    post_acts = [x]
    for layer in params.layers:
        z = layer.weight @ h
        if layer.bias is not None:
            z = z + layer.bias
        pre_acts.append(z)
        h = layer.activation.apply(z)
        post_acts.append(h)
    if h.shape != y.shape:
        raise ShapeError(f"output shape {h.shape} != target shape {y.shape}")
    d = y.shape[1]
    delta = (2.0 / d) * (h - y)
    grads: list[LayerGrads] = [None] * params.depth  # type: ignore[list-item]
    for k in range(params.depth - 1, -1, -1):
        layer = params.layers[k]
        delta = delta * layer.activation.grad_mask(pre_acts[k])
        grad_w = delta @ post_acts[k].T
        grad_b = delta.sum(axis=1, keepdims=True) if layer.bias is not None else None
        grads[k] = LayerGrads(weight=grad_w, bias=grad_b)
        if k > 0:
            delta = layer.weight.T @ delta
    return grads


@dataclass
class OptimizerState:
    kind: str  # "sgd" or "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    # Adam moment accumulators, shaped like the parameters.
    m: list[LayerGrads] = field(default_factory=list)
    v: list[LayerGrads] = field(default_factory=list)


def init_optimizer(kind: str, params: MlpParams, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> OptimizerState:
    kind = kind.lower()
    if kind not in ("sgd", "adam"):
        raise ValueError(f"unknown optimizer kind {kind!r}")
    state = OptimizerState(kind=kind, beta1=beta1, beta2=beta2, eps=eps)
    if kind == "adam":
        for layer in params.layers:
            zb = None if layer.bias is None else np.zeros_like(layer.bias)
            state.m.append(LayerGrads(np.zeros_like(layer.weight), zb))
            zb2 = None if layer.bias is None else np.zeros_like(layer.bias)
            state.v.append(LayerGrads(np.zeros_like(layer.weight), zb2))
    return state


def _check_finite_grads(grads: list[LayerGrads]) -> None:
    for idx, g in enumerate(grads, start=1):
        if not np.all(np.isfinite(g.weight)):
            raise TrainingFault(f"non-finite weight gradient in layer {idx}")
        if g.bias is not None and not np.all(np.isfinite(g.bias)):
            raise TrainingFault(f"non-finite bias gradient in layer {idx}")


def optimizer_step(
    params: MlpParams,
    grads: list[LayerGrads],
    state: OptimizerState,
    lr: float,
) -> tuple[MlpParams, OptimizerState]:
    """Apply one update in place and return the mutated params and state."""
    if lr < 0:
        raise ValueError(f"learning rate must be >= 0, got {lr}")
    _check_finite_grads(grads)
    state.step += 1
    if state.kind == "sgd":
        for layer, g in zip(params.layers, grads):
            layer.weight -= lr * g.weight
            if layer.bias is not None:
                layer.bias -= lr * g.bias
        return params, state
    t = state.step
    b1, b2, eps = state.beta1, state.beta2, state.eps
    corr1 = 1.0 - b1**t
    corr2 = 1.0 - b2**t
    for layer, g, m, v in zip(params.layers, grads, state.m, state.v):
        m.weight[...] = b1 * m.weight + (1 - b1) * g.weight
        v.weight[...] = b2 * v.weight + (1 - b2) * g.weight**2
        m_hat = m.weight / corr1
        v_hat = v.weight / corr2
        layer.weight -= lr * m_hat / (np.sqrt(v_hat) + eps)
        if layer.bias is not None:
            m.bias[...] = b1 * m.bias + (1 - b1) * g.bias
            v.bias[...] = b2 * v.bias + (1 - b2) * g.bias**2
            mb_hat = m.bias / corr1
            vb_hat = v.bias / corr2
            layer.bias -= lr * mb_hat / (np.sqrt(vb_hat) + eps)
    return params, state


def weight_change_norm(prev: MlpParams, new: MlpParams) -> float:
    """Root mean square parameter change between two snapshots."""
    if prev.depth != new.depth:
        raise ShapeError("parameter snapshots have different depths")
    total_sq = 0.0
    count = 0
    for a, b in zip(prev.layers, new.layers):
        if a.weight.shape != b.weight.shape:
            raise ShapeError(
                f"weight shapes differ: {a.weight.shape} vs {b.weight.shape}"
            )
        total_sq += frob_norm_sq(b.weight - a.weight)
        count += a.weight.size
        if (a.bias is None) != (b.bias is None):
            raise ShapeError("bias presence differs between snapshots")
        if a.bias is not None:
            total_sq += frob_norm_sq(b.bias - a.bias)
            count += a.bias.size
    return float(np.sqrt(total_sq) / np.sqrt(count))


@dataclass(frozen=True)
class LrSchedule:
    """Stepwise decay: eta0 * decay_factor ** (epochs_elapsed // period)."""

    eta0: float
    decay_factor: float = 1.0
    period_epochs: int = 50

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ValueError(f"eta0 must be > 0, got {self.eta0}")
        if not (0.0 < self.decay_factor <= 1.0):
            raise ValueError(f"decay_factor must be in (0, 1], got {self.decay_factor}")
        if self.period_epochs < 1:
            raise ValueError(f"period_epochs must be >= 1, got {self.period_epochs}")

    def value(self, epochs_elapsed: int) -> float:
        if epochs_elapsed < 0:
            raise ValueError(f"epochs_elapsed must be >= 0, got {epochs_elapsed}")
        return self.eta0 * self.decay_factor ** (epochs_elapsed // self.period_epochs)
