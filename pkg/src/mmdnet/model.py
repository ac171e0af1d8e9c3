"""Feed-forward mapping networks with hand-written reverse-mode gradients.

A network is a stack of dense layers ``h -> act(h @ W.T + b)``. The default
"linear network" is a single identity-activation layer. Channels of an
n-channel net all run through the same :class:`ModelParams` object, so the
weights are tied by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ACTIVATIONS = ("identity", "tanh", "relu")
CHECKPOINT_FORMAT = "mmdnet-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray | None  # (out,) or None when the layer has no offset
    activation: str = "identity"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}; expected one of {ACTIVATIONS}")
        self.weight = np.asarray(self.weight, dtype=np.float64)
        if self.weight.ndim != 2:
            raise ValueError("layer weight must be a matrix")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
            if self.bias.shape != (self.weight.shape[0],):
                raise ValueError(
                    f"bias shape {self.bias.shape} does not match weight rows {self.weight.shape[0]}"
                )

    @property
    def input_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class ModelParams:
    """Ordered layer stack of a mapping network ``R^d -> R^e``.

    The same class doubles as the container for parameter gradients and for
    optimizer accumulators, so that all three share one shape.
    """

    layers: list[Layer] = field(default_factory=list)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.output_dim != nxt.input_dim:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.output_dim} -> {nxt.input_dim}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    @property
    def is_linear(self) -> bool:
        return len(self.layers) == 1 and self.layers[0].activation == "identity"

    def arrays(self) -> list[np.ndarray]:
        """The parameter arrays in a fixed order (weight, bias, weight, ...)."""
        out = []
        for layer in self.layers:
            out.append(layer.weight)
            if layer.bias is not None:
                out.append(layer.bias)
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray]) -> ModelParams:
        """A new instance with the same structure holding ``arrays``."""
        it = iter(arrays)
        layers = []
        for layer in self.layers:
            w = next(it)
            b = next(it) if layer.bias is not None else None
            layers.append(Layer(np.array(w, dtype=np.float64), None if b is None else np.array(b, dtype=np.float64), layer.activation))
        leftover = list(it)
        if leftover:
            raise ValueError(f"{len(leftover)} unused arrays")
        return ModelParams(layers)

    def zeros_like(self) -> ModelParams:
        return self.with_arrays([np.zeros_like(a) for a in self.arrays()])

    def copy(self) -> ModelParams:
        return self.with_arrays(self.arrays())

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def from_flat(self, vector: np.ndarray) -> ModelParams:
        arrays, start = [], 0
        for a in self.arrays():
            arrays.append(np.asarray(vector[start:start + a.size]).reshape(a.shape))
            start += a.size
        if start != len(vector):
            raise ValueError(f"expected {start} values, got {len(vector)}")
        return self.with_arrays(arrays)


def linear_params(weight, bias=None) -> ModelParams:
    """Single identity-activation layer ``x -> W x + b``."""
    return ModelParams([Layer(weight, bias, "identity")])


def init_params(
    input_dim: int,
    output_dim: int,
    hidden: Sequence[int] = (),
    seed: int = 0,
    activation: str = "tanh",
    bias: bool = True,
) -> ModelParams:
    """Randomly initialised network.

    Weights are i.i.d. ``N(0, 1/fan_in)``, biases start at zero. Hidden layers
    use ``activation``; the output layer is always identity.
    """
    if input_dim < 1 or output_dim < 1 or any(h < 1 for h in hidden):
        raise ValueError("layer dimensions must be positive")
    rng = np.random.default_rng(seed)
    dims = [input_dim, *hidden, output_dim]
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        act = "identity" if i == len(dims) - 2 else activation
        w = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))
        layers.append(Layer(w, np.zeros(fan_out) if bias else None, act))
    return ModelParams(layers)


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "identity":
        return z
    if activation == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activation_grad(z: np.ndarray, h: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return 1.0 - h * h
    return (z > 0).astype(np.float64)


def _check_input(params: ModelParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ValueError(f"expected input of shape (m, {params.input_dim}), got {X.shape}")
    return X


def _forward_trace(params: ModelParams, X: np.ndarray):
    """Layer inputs and pre-activations, kept for the backward pass."""
    inputs, pre = [], []
    h = X
    for layer in params.layers:
        inputs.append(h)
        z = h @ layer.weight.T
        if layer.bias is not None:
            z = z + layer.bias
        pre.append(z)
        h = _activate(z, layer.activation)
    return h, inputs, pre


def forward(params: ModelParams, X) -> np.ndarray:
    """Apply the network to each row of ``X``."""
    X = _check_input(params, X)
    return _forward_trace(params, X)[0]


def backward(params: ModelParams, X, upstream) -> tuple[ModelParams, np.ndarray]:
    """Gradients of ``sum(upstream * forward(params, X))``.

    Returns:
        A ``ModelParams``-shaped gradient and the ``(m, d)`` input gradient.
    """
    X = _check_input(params, X)
    out, inputs, pre = _forward_trace(params, X)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != out.shape:
        raise ValueError(f"upstream shape {upstream.shape} does not match output {out.shape}")

    grads: list[np.ndarray] = []
    delta = upstream
    for layer, h_in, z in zip(reversed(params.layers), reversed(inputs), reversed(pre)):
        if layer.activation != "identity":
            delta = delta * _activation_grad(z, _activate(z, layer.activation), layer.activation)
        if layer.bias is not None:
            grads.append(delta.sum(axis=0))
        grads.append(delta.T @ h_in)
        delta = delta @ layer.weight
    grads.reverse()
    return params.with_arrays(grads), delta


@dataclass
class ChannelBatch:
    """Inputs for the channels of an n-channel net, one matrix per channel."""

    inputs: list[np.ndarray]

    def __post_init__(self):
        self.inputs = [np.asarray(x, dtype=np.float64) for x in self.inputs]
        if not self.inputs:
            raise ValueError("a channel batch needs at least one channel")
        widths = {x.shape[1] for x in self.inputs}
        if len(widths) != 1:
            raise ValueError(f"channels disagree on input width: {sorted(widths)}")

    def __len__(self):
        return len(self.inputs)


def n_channel_forward(params: ModelParams, batch: ChannelBatch) -> list[np.ndarray]:
    """Run every channel through the one shared network."""
    return [forward(params, x) for x in batch.inputs]


def save_checkpoint(params: ModelParams, path) -> None:
    """Write a JSON checkpoint.

    Arrays are stored row-major as flat lists of shortest round-trip decimals,
    so a save/load cycle is exact.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "format_version": CHECKPOINT_VERSION,
        "input_dim": params.input_dim,
        "output_dim": params.output_dim,
        "layers": [
            {
                "activation": layer.activation,
                "shape": list(layer.weight.shape),
                "weight": layer.weight.ravel(order="C").tolist(),
                "bias": None if layer.bias is None else layer.bias.tolist(),
            }
            for layer in params.layers
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path) -> ModelParams:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a checkpoint file")
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('format_version')}")
    layers = []
    for entry in doc["layers"]:
        w = np.array(entry["weight"], dtype=np.float64).reshape(entry["shape"])
        b = None if entry["bias"] is None else np.array(entry["bias"], dtype=np.float64)
        layers.append(Layer(w, b, entry["activation"]))
    params = ModelParams(layers)
    if (params.input_dim, params.output_dim) != (doc["input_dim"], doc["output_dim"]):
        raise ValueError(f"{path}: declared dimensions disagree with the stored layers")
    return params
