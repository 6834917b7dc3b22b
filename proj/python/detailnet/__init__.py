"""Monocular depth estimation: dilated-conv feature extractor, attention
fusion decoder, and the point-cloud / bokeh renderers built on it."""

from ._detailnet import (
    ConfigError,
    DataError,
    FormatError,
    IoError,
    Network,
    ShapeError,
    UsageError,
    backproject,
    compute_metrics,
    conv2d,
    generate_synthetic,
    log_l1_loss,
    poly_lr,
    render_bokeh,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FormatError",
    "IoError",
    "Network",
    "ShapeError",
    "UsageError",
    "backproject",
    "compute_metrics",
    "conv2d",
    "generate_synthetic",
    "log_l1_loss",
    "poly_lr",
    "render_bokeh",
]

__version__ = "0.1.0"
