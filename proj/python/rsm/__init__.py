"""Slot-based world models with reusable mechanisms."""

from ._core import (
    Dataset,
    FormatError,
    NumericError,
    ValidationError,
    WorldModel,
    contrastive_loss,
    default_config,
    evaluate,
    generate_dataset,
    load_dataset,
    load_world_model,
    make_config,
    train_world_model,
)

__all__ = [
    "Dataset",
    "FormatError",
    "NumericError",
    "ValidationError",
    "WorldModel",
    "contrastive_loss",
    "default_config",
    "evaluate",
    "generate_dataset",
    "load_dataset",
    "load_world_model",
    "make_config",
    "train_world_model",
]
