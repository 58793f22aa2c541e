"""Synthetic intrinsic-image toolkit: seeded room-scene generation, a direct
lighting renderer with exact (image, reflectance, shading) ground truth,
evaluation metrics, a Retinex baseline, losses and augmentation."""

from intrinsics.imgcore import (
    ImageBuffer,
    ImageError,
    IntrinsicTriple,
    compose_triple,
    load_triple,
    multiply_broadcast,
    read_pfm,
    write_pfm,
    write_png_preview,
)

__all__ = [
    "ImageBuffer",
    "ImageError",
    "IntrinsicTriple",
    "compose_triple",
    "load_triple",
    "multiply_broadcast",
    "read_pfm",
    "write_pfm",
    "write_png_preview",
]

__version__ = "0.1.0"
