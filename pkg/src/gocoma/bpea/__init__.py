"""Binary pre-executable artifacts: compilation, normalization, imaging."""

from .compile import (
    BpeaArtifact,
    LANGUAGES,
    compile_source,
    convert_source,
    normalize_fallback,
)
from .imaging import RgbImage, bytes_to_image, image_to_bytes, read_png, write_png

__all__ = [
    "BpeaArtifact",
    "LANGUAGES",
    "RgbImage",
    "bytes_to_image",
    "compile_source",
    "convert_source",
    "image_to_bytes",
    "normalize_fallback",
    "read_png",
    "write_png",
]
