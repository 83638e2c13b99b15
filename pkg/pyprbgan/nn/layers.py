"""
MLP layers with Bernoulli unit masks

The deterministic weights are the variational parameters; one DropoutMaskSet
drawn from them is one sampled network. Masks zero whole units (weight
columns and their bias), never the input features and never the output layer.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from pydantic import BaseModel, Field, field_validator

from pyprbgan.autodiff import ops
from pyprbgan.autodiff.tensor import Node
from pyprbgan.core.errors import ConfigError, DimensionError

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.Generator, None]


class Activation(str, Enum):
    """Supported layer activations"""
    LEAKY_RELU = "leaky_relu"
    SIGMOID = "sigmoid"
    LINEAR = "linear"


class LayerSpec(BaseModel):
    """
    One fully connected layer

    Attributes:
        in_dim: Input width
        out_dim: Number of units
        activation: Activation applied to the layer output
        slope: Negative slope for leaky_relu
        maskable: Whether dropout masks apply to this layer's units
    """
    in_dim: int = Field(ge=1)
    out_dim: int = Field(ge=1)
    activation: Activation = Activation.LEAKY_RELU
    slope: float = Field(default=0.2, gt=0.0, lt=1.0)
    maskable: bool = True


def mlp_spec(
    in_dim: int,
    hidden_dim: int,
    out_dim: int,
    n_layers: int = 4,
    slope: float = 0.2
) -> List[LayerSpec]:
    """
    Build the spec of an n-layer fully connected network

    Hidden layers use leaky_relu and are maskable; the output layer is linear
    (raw logits / raw samples) and never masked.
    """
    if n_layers < 1:
        raise ConfigError(f"n_layers must be at least 1, got {n_layers}")

    layers = []
    width = in_dim
    for _ in range(n_layers - 1):
        layers.append(LayerSpec(in_dim=width, out_dim=hidden_dim,
                                activation=Activation.LEAKY_RELU, slope=slope))
        width = hidden_dim
    layers.append(LayerSpec(in_dim=width, out_dim=out_dim,
                            activation=Activation.LINEAR, maskable=False))
    return layers


def _check_chain(spec: Sequence[LayerSpec]) -> None:
    if not spec:
        raise ConfigError("Layer spec must not be empty")
    for i in range(1, len(spec)):
        if spec[i].in_dim != spec[i - 1].out_dim:
            raise DimensionError(
                f"Layer {i} in_dim {spec[i].in_dim} != layer {i - 1} out_dim "
                f"{spec[i - 1].out_dim}"
            )


@dataclass
class MlpParams:
    """
    Weights [in x out] and biases [out] of every layer, held as trainable leaves

    Attributes:
        spec: Layer chain the parameters belong to
        weights: Weight leaves, one per layer
        biases: Bias leaves, one per layer
    """
    spec: List[LayerSpec]
    weights: List[Node]
    biases: List[Node]

    def __post_init__(self) -> None:
        _check_chain(self.spec)
        for i, (layer, w, b) in enumerate(zip(self.spec, self.weights, self.biases)):
            if w.shape != (layer.in_dim, layer.out_dim) or b.shape != (layer.out_dim,):
                raise DimensionError(
                    f"Layer {i}: weight {w.shape} / bias {b.shape} do not match "
                    f"{layer.in_dim}x{layer.out_dim}"
                )

    @property
    def n_layers(self) -> int:
        return len(self.spec)

    def nodes(self) -> List[Node]:
        """All parameter leaves, ordered w0, b0, w1, b1, ..."""
        result = []
        for w, b in zip(self.weights, self.biases):
            result.extend([w, b])
        return result

    def values(self) -> List[np.ndarray]:
        return [n.value for n in self.nodes()]

    def grads(self) -> List[np.ndarray]:
        return [n.grad.copy() for n in self.nodes()]

    def zero_grad(self) -> None:
        for node in self.nodes():
            node.zero_grad()

    def frozen(self) -> "MlpParams":
        """View of the same values as constant leaves (no gradient flows in)"""
        return MlpParams(
            spec=self.spec,
            weights=[w.detach() for w in self.weights],
            biases=[b.detach() for b in self.biases],
        )

    def copy(self) -> "MlpParams":
        """Independent trainable copy"""
        return MlpParams(
            spec=list(self.spec),
            weights=[Node.parameter(w.value.copy()) for w in self.weights],
            biases=[Node.parameter(b.value.copy()) for b in self.biases],
        )

    @classmethod
    def from_values(cls, spec: List[LayerSpec], values: Sequence[np.ndarray]) -> "MlpParams":
        """Rebuild from the flat w0, b0, w1, b1, ... list produced by values()"""
        if len(values) != 2 * len(spec):
            raise DimensionError(f"Expected {2 * len(spec)} tensors, got {len(values)}")
        return cls(
            spec=list(spec),
            weights=[Node.parameter(values[2 * i]) for i in range(len(spec))],
            biases=[Node.parameter(values[2 * i + 1]) for i in range(len(spec))],
        )


@dataclass
class DropoutMaskSet:
    """
    One Bernoulli keep/drop vector per layer; None means an implicit all-ones mask

    A mask set is one sampled network from the variational family.
    """
    masks: List[Optional[np.ndarray]] = field(default_factory=list)

    @classmethod
    def ones(cls, spec: Sequence[LayerSpec]) -> "DropoutMaskSet":
        return cls(masks=[None] * len(spec))

    def for_layer(self, index: int) -> Optional[np.ndarray]:
        if index >= len(self.masks):
            return None
        return self.masks[index]

    def drop_fraction(self) -> float:
        """Fraction of maskable units dropped"""
        drawn = [m for m in self.masks if m is not None]
        if not drawn:
            return 0.0
        total = sum(m.size for m in drawn)
        return float(sum((m == 0).sum() for m in drawn) / total)


def _as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def xavier_init(spec: Sequence[LayerSpec], seed: SeedLike = None) -> MlpParams:
    """
    Xavier/Glorot uniform initialisation

    Weights ~ U(-sqrt(6/(in+out)), +sqrt(6/(in+out))), biases zero.

    Args:
        spec: Layer chain
        seed: Integer seed or Generator

    Returns:
        MlpParams with trainable leaves
    """
    _check_chain(spec)
    rng = _as_rng(seed)
    weights, biases = [], []
    for layer in spec:
        limit = np.sqrt(6.0 / (layer.in_dim + layer.out_dim))
        weights.append(Node.parameter(rng.uniform(-limit, limit, size=(layer.in_dim, layer.out_dim))))
        biases.append(Node.parameter(np.zeros(layer.out_dim)))
    logger.debug(f"Initialised {len(spec)}-layer MLP with Xavier uniform weights")
    return MlpParams(spec=list(spec), weights=weights, biases=biases)


def sample_mask_set(
    spec: Sequence[LayerSpec],
    p: float,
    rng: np.random.Generator,
    layer_probs: Optional[Sequence[float]] = None
) -> DropoutMaskSet:
    """
    Draw one Bernoulli mask per maskable layer

    Each maskable unit is kept independently with probability 1 - p.

    Args:
        spec: Layer chain
        p: Drop probability in [0, 1)
        rng: Generator the masks are drawn from
        layer_probs: Optional per-maskable-layer drop probabilities overriding p

    Returns:
        DropoutMaskSet

    Raises:
        ConfigError: If a drop probability is outside [0, 1)
    """
    maskable = [i for i, layer in enumerate(spec) if layer.maskable]
    if layer_probs is None:
        probs = [p] * len(maskable)
    else:
        probs = list(layer_probs)
        if len(probs) != len(maskable):
            raise ConfigError(
                f"layer_probs has {len(probs)} entries, network has {len(maskable)} maskable layers"
            )

    masks: List[Optional[np.ndarray]] = [None] * len(spec)
    for index, prob in zip(maskable, probs):
        if not 0.0 <= prob < 1.0:
            raise ConfigError(f"Drop probability must be in [0, 1), got {prob}")
        masks[index] = (rng.random(spec[index].out_dim) >= prob).astype(np.float64)
    return DropoutMaskSet(masks=masks)


def _activate(z: Node, layer: LayerSpec) -> Node:
    if layer.activation == Activation.LEAKY_RELU:
        return ops.leaky_relu(z, layer.slope)
    if layer.activation == Activation.SIGMOID:
        return ops.sigmoid(z)
    return z


def forward(
    params: MlpParams,
    masks: Optional[DropoutMaskSet],
    inputs: Union[Node, np.ndarray],
    return_features: bool = False
) -> Union[Node, Tuple[Node, Node]]:
    """
    Run one sampled network on a batch

    Per layer: h <- activation(h @ (W * column-mask) + b * mask). A dropped
    unit contributes exactly zero to the next layer.

    Args:
        params: Variational parameters
        masks: Mask set (None = deterministic network)
        inputs: [batch x in_dim] node or array
        return_features: Also return the penultimate activations

    Returns:
        Output node (raw, no squashing), or (output, features)

    Raises:
        DimensionError: If the input width does not match the first layer
    """
    h = ops.as_node(inputs)
    if h.value.ndim != 2 or h.shape[1] != params.spec[0].in_dim:
        raise DimensionError(
            f"Input shape {h.shape} does not match first layer in_dim {params.spec[0].in_dim}"
        )

    features = h
    for index, (layer, w, b) in enumerate(zip(params.spec, params.weights, params.biases)):
        features = h
        mask = masks.for_layer(index) if (masks is not None and layer.maskable) else None
        if mask is None:
            z = ops.add_bias(ops.matmul(h, w), b)
            h = _activate(z, layer)
        else:
            z = ops.add_bias(ops.matmul(h, ops.mask_columns(w, mask)), ops.mask_columns(b, mask))
            h = _activate(z, layer)
            if layer.activation == Activation.SIGMOID:
                # sigmoid(0) != 0, so the unit must be zeroed after activation too
                h = ops.mask_columns(h, mask)

    if return_features:
        return h, features
    return h
