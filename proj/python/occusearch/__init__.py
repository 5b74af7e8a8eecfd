"""Occlusion-tolerant product image search."""

from ._occu import (
    Catalog,
    OccuError,
    canny,
    decode_png,
    diffusion_inpaint,
    encode_png,
    equalize_color,
    gaussian_blur,
    histogram_stretch,
    metadata,
    preprocess,
    similarity,
    to_grayscale,
)

__all__ = [
    "Catalog",
    "OccuError",
    "canny",
    "decode_png",
    "diffusion_inpaint",
    "encode_png",
    "equalize_color",
    "gaussian_blur",
    "histogram_stretch",
    "metadata",
    "preprocess",
    "similarity",
    "to_grayscale",
]
__version__ = "0.1.0"
