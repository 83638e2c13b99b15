"""
MLP layers, dropout masks, optimizers and checkpoints for PyPrbGAN
"""

from pyprbgan.nn.layers import (
    Activation,
    LayerSpec,
    MlpParams,
    DropoutMaskSet,
    mlp_spec,
    xavier_init,
    sample_mask_set,
    forward,
)
from pyprbgan.nn.optim import OptimizerKind, OptimizerConfig, OptimizerState, apply_update
from pyprbgan.nn.checkpoint import save_params, load_params, save_tensors, load_tensors

__all__ = [
    "Activation",
    "LayerSpec",
    "MlpParams",
    "DropoutMaskSet",
    "mlp_spec",
    "xavier_init",
    "sample_mask_set",
    "forward",
    "OptimizerKind",
    "OptimizerConfig",
    "OptimizerState",
    "apply_update",
    "save_params",
    "load_params",
    "save_tensors",
    "load_tensors",
]
