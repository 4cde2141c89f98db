"""Byte streams to fixed-width RGB images and back.

Consecutive non-overlapping byte triplets become pixels; a trailing 1- or
2-byte remainder is zero-padded into its pixel. Pixels fill 256-wide rows
left to right, top to bottom, and the final partial row is padded with
(0, 0, 0). Padding is not invertible on its own, so lossless recovery needs
the original byte length, which the corpus manifest stores per artifact.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np
from PIL import Image

from ..errors import EmptyArtifactError, InvalidInputError

WIDTH = 256


class RgbImage:
    """Row-major 8-bit RGB raster, width fixed at 256."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        pixels = np.asarray(pixels, dtype=np.uint8)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise InvalidInputError(f"expected (H, W, 3) pixels, got {pixels.shape}")
        if pixels.shape[1] != WIDTH:
            raise InvalidInputError(f"width must be {WIDTH}, got {pixels.shape[1]}")
        if pixels.shape[0] < 1:
            raise InvalidInputError("height must be >= 1")
        self.pixels = pixels

    @property
    def width(self) -> int:
        return WIDTH

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])


def bytes_to_image(data: bytes) -> RgbImage:
    """Pack bytes into pixels, zero-padding the tail; height = ceil(ceil(n/3)/256)."""
    if isinstance(data, str):
        raise InvalidInputError("expected bytes, got str")
    data = bytes(data)
    if not data:
        raise EmptyArtifactError("cannot image an empty byte sequence")
    n_pixels = -(-len(data) // 3)
    height = -(-n_pixels // WIDTH)
    flat = np.zeros(height * WIDTH * 3, dtype=np.uint8)
    flat[: len(data)] = np.frombuffer(data, dtype=np.uint8)
    return RgbImage(flat.reshape(height, WIDTH, 3))


def image_to_bytes(img: RgbImage, byte_len: int) -> bytes:
    """Recover the first byte_len bytes; everything beyond must be zero pad."""
    flat = img.pixels.reshape(-1)
    if byte_len < 1 or byte_len > flat.size:
        raise InvalidInputError(
            f"byte_len {byte_len} outside 1..{flat.size} for this image"
        )
    if flat[byte_len:].any():
        raise InvalidInputError("nonzero bytes beyond byte_len; wrong length?")
    return flat[:byte_len].tobytes()


def write_png(img: RgbImage, path) -> None:
    """Deterministic 8-bit RGB PNG; atomic write (temp file then rename)."""
    path = str(path)
    pil = Image.fromarray(img.pixels, mode="RGB")
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".png.tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            # fixed compression level, no ancillary chunks: equal pixels, equal bytes
            pil.save(fh, format="PNG", compress_level=6)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_png(path) -> RgbImage:
    with Image.open(str(path)) as pil:
        arr = np.asarray(pil.convert("RGB"), dtype=np.uint8)
    return RgbImage(arr)
