"""Test-time adaptation of optic disc and cup segmentation models.

Images and masks are float64 arrays shaped (channels, height, width).
Configuration arguments take dicts with the same fields as the JSON
experiment config; unknown fields raise ConfigError.
"""

from ._mcda import (
    CUP,
    DISC,
    ConfigError,
    Error,
    LoadError,
    Model,
    Sample,
    ShapeError,
    TrainingError,
    adapt,
    asd,
    dice_score,
    evaluate,
    format_table,
    hard_boundary,
    init_model,
    load_dataset,
    pretrain,
    pseudo_labels,
    sobel_magnitude,
    soft_boundary,
    synth,
    write_dataset,
)

__all__ = [
    "CUP",
    "DISC",
    "ConfigError",
    "Error",
    "LoadError",
    "Model",
    "Sample",
    "ShapeError",
    "TrainingError",
    "adapt",
    "asd",
    "dice_score",
    "evaluate",
    "format_table",
    "hard_boundary",
    "init_model",
    "load_dataset",
    "pretrain",
    "pseudo_labels",
    "sobel_magnitude",
    "soft_boundary",
    "synth",
    "write_dataset",
]
