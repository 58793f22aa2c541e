"""Pixel containers and float image file I/O shared by every other module.

Ground truth lives in linear light as float32. PFM is the storage format
(bit-exact round trips); PNG output is a gamma-encoded 8-bit preview only.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

# Max allowed per-pixel |image - reflectance * shading| for a valid triple.
PRODUCT_TOLERANCE = 1e-6

# Sanity bound on PFM dimensions (guards against absurd headers).
_MAX_PFM_DIM = 1 << 20


class ImageError(ValueError):
    """Malformed image data or image file."""


@dataclass(frozen=True)
class ImageBuffer:
    """Immutable H x W x C array of finite linear-light float32 values.

    C is 1 for shading-like buffers and 3 for reflectance and composite
    images. Range constraints (reflectance in [0, 1], shading >= 0) are
    enforced by the types that consume specific buffer roles.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ImageError(f"expected HxWx{{1,3}} pixel data, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ImageError(f"empty image of shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ImageError("non-finite pixel values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    def same_size(self, other: "ImageBuffer") -> bool:
        return self.height == other.height and self.width == other.width

    @staticmethod
    def full(height: int, width: int, value, channels: int = 3) -> "ImageBuffer":
        value = np.asarray(value, dtype=np.float32).reshape(-1)
        if value.size == 1:
            value = np.repeat(value, channels)
        if value.size != channels:
            raise ImageError(f"fill value has {value.size} channels, expected {channels}")
        return ImageBuffer(np.broadcast_to(value, (height, width, channels)).copy())


def multiply_broadcast(reflectance: ImageBuffer, shading: ImageBuffer) -> ImageBuffer:
    """Per-pixel product of a 3-channel reflectance and a 1-channel shading."""
    if reflectance.channels != 3:
        raise ImageError(f"reflectance must have 3 channels, got {reflectance.channels}")
    if shading.channels != 1:
        raise ImageError(f"shading must have 1 channel, got {shading.channels}")
    if not reflectance.same_size(shading):
        raise ImageError(
            f"size mismatch: {reflectance.height}x{reflectance.width} vs "
            f"{shading.height}x{shading.width}"
        )
    return ImageBuffer(reflectance.data * shading.data)


@dataclass(frozen=True)
class IntrinsicTriple:
    """An (image, reflectance, shading) set satisfying the product model.

    The composite image must equal reflectance * shading per pixel within
    PRODUCT_TOLERANCE; reflectance is 3-channel in [0, 1], shading is a
    single non-negative channel.
    """

    image: ImageBuffer
    reflectance: ImageBuffer
    shading: ImageBuffer
    scene_id: str
    view_index: int

    def __post_init__(self) -> None:
        if self.image.channels != 3 or self.reflectance.channels != 3:
            raise ImageError("image and reflectance must have 3 channels")
        if self.shading.channels != 1:
            raise ImageError("shading must have 1 channel")
        if not (self.image.same_size(self.reflectance) and self.image.same_size(self.shading)):
            raise ImageError("triple buffers must share width and height")
        if self.view_index not in (0, 1):
            raise ImageError(f"view_index must be 0 or 1, got {self.view_index}")
        r = self.reflectance.data
        if r.min() < 0.0 or r.max() > 1.0:
            raise ImageError("reflectance values outside [0, 1]")
        if self.shading.data.min() < 0.0:
            raise ImageError("negative shading values")
        err = self.max_product_error()
        if err > PRODUCT_TOLERANCE:
            raise ImageError(f"product model violated: max |I - R*S| = {err:.3e}")

    @property
    def height(self) -> int:
        return self.image.height

    @property
    def width(self) -> int:
        return self.image.width

    def max_product_error(self) -> float:
        prod = self.reflectance.data.astype(np.float64) * self.shading.data.astype(np.float64)
        return float(np.abs(self.image.data.astype(np.float64) - prod).max())


def compose_triple(
    reflectance: ImageBuffer, shading: ImageBuffer, scene_id: str, view_index: int
) -> IntrinsicTriple:
    """Build a triple whose image is defined as the product, so the model
    holds to float32 round-off by construction."""
    image = multiply_broadcast(reflectance, shading)
    return IntrinsicTriple(image, reflectance, shading, scene_id, view_index)


# ---------------------------------------------------------------------------
# PFM I/O
#
# Layout: "PF" (3ch) or "Pf" (1ch), "<width> <height>", scale line whose sign
# encodes endianness (-1.0 written: little-endian), then width*height*C float32
# in row-major order with rows stored bottom-to-top.
# ---------------------------------------------------------------------------


def _read_header_line(f) -> str:
    buf = bytearray()
    while True:
        c = f.read(1)
        if not c:
            raise ImageError("unexpected end of file in PFM header")
        if c == b"\n":
            break
        buf += c
        if len(buf) > 128:
            raise ImageError("oversized PFM header line")
    return buf.decode("ascii", errors="replace").strip()


def read_pfm(path) -> ImageBuffer:
    """Read a Portable FloatMap file into an ImageBuffer."""
    with open(path, "rb") as f:
        magic = _read_header_line(f)
        if magic == "PF":
            channels = 3
        elif magic == "Pf":
            channels = 1
        else:
            raise ImageError(f"not a PFM file (magic {magic!r})")
        dims = _read_header_line(f).split()
        if len(dims) != 2:
            raise ImageError(f"malformed PFM dimension line {dims!r}")
        try:
            width, height = int(dims[0]), int(dims[1])
        except ValueError as exc:
            raise ImageError(f"malformed PFM dimensions {dims!r}") from exc
        if not (0 < width <= _MAX_PFM_DIM and 0 < height <= _MAX_PFM_DIM):
            raise ImageError(f"PFM dimensions out of range: {width}x{height}")
        try:
            scale = float(_read_header_line(f))
        except ValueError as exc:
            raise ImageError("malformed PFM scale line") from exc
        if scale == 0.0:
            raise ImageError("PFM scale must be non-zero")
        count = width * height * channels
        payload = f.read(4 * count)
        if len(payload) != 4 * count:
            raise ImageError(f"truncated PFM payload: got {len(payload)} of {4 * count} bytes")
        if f.read(1):
            raise ImageError("trailing bytes after PFM payload")
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(payload, dtype=dtype).astype(np.float32, copy=False)
    if np.isnan(data).any():
        raise ImageError("NaN values in PFM payload")
    data = data.reshape(height, width, channels)
    # PFM rows run bottom-to-top on disk; the scale magnitude is ignored.
    return ImageBuffer(np.flipud(data))


def write_pfm(path, buffer: ImageBuffer) -> None:
    """Write an ImageBuffer as little-endian PFM (scale -1.0), bit-exactly."""
    magic = b"PF\n" if buffer.channels == 3 else b"Pf\n"
    header = magic + f"{buffer.width} {buffer.height}\n".encode("ascii") + b"-1.0\n"
    payload = np.flipud(buffer.data).astype("<f4", copy=False).tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def write_png_preview(path, buffer: ImageBuffer, gamma: float = 2.2) -> None:
    """Write an 8-bit preview: values clamped to [0, 1], encoded with 1/gamma."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    clamped = np.clip(buffer.data.astype(np.float64), 0.0, 1.0)
    encoded = np.rint(np.power(clamped, 1.0 / gamma) * 255.0).astype(np.uint8)
    if buffer.channels == 1:
        Image.fromarray(encoded[:, :, 0], mode="L").save(path, format="PNG")
    else:
        Image.fromarray(encoded, mode="RGB").save(path, format="PNG")


def load_triple(
    image_path, reflectance_path, shading_path, scene_id: str, view_index: int
) -> IntrinsicTriple:
    """Load a triple from three PFM files, re-verifying the product model."""
    return IntrinsicTriple(
        image=read_pfm(image_path),
        reflectance=read_pfm(reflectance_path),
        shading=read_pfm(shading_path),
        scene_id=scene_id,
        view_index=view_index,
    )


def triple_paths(directory, scene_id: str, view_index: int) -> dict[str, Path]:
    """File naming convention for one rendered view."""
    base = Path(directory)
    stem = f"{scene_id}_{view_index}"
    return {
        "img": base / f"{stem}_img.pfm",
        "ref": base / f"{stem}_ref.pfm",
        "sha": base / f"{stem}_sha.pfm",
        "msk": base / f"{stem}_msk.pfm",
        "png": base / f"{stem}_img.png",
    }
