"""Residual U-Net projection denoiser: model, losses, training, inference."""

from .checkpoint import load_weights, save_weights
from .infer import denoise_image, denoise_stack, pad_reflect_to, tile_offsets, triangle_window
from .losses import (
    FeatureNet,
    LossReport,
    build_featnet,
    l1_loss,
    perceptual_loss,
    total_loss,
)
from .model import (
    DenoiserConfig,
    ModelWeights,
    build_model,
    forward,
    forward_batch,
    parameter_shapes,
)
from .train import TrainConfig, extract_patches, split_pairs, train, write_history

__all__ = [
    "DenoiserConfig",
    "FeatureNet",
    "LossReport",
    "ModelWeights",
    "TrainConfig",
    "build_featnet",
    "build_model",
    "denoise_image",
    "denoise_stack",
    "extract_patches",
    "forward",
    "forward_batch",
    "l1_loss",
    "load_weights",
    "pad_reflect_to",
    "parameter_shapes",
    "perceptual_loss",
    "save_weights",
    "split_pairs",
    "tile_offsets",
    "total_loss",
    "train",
    "triangle_window",
    "write_history",
]
