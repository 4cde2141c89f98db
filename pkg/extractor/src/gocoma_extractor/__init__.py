"""Frozen embedding extraction to EMBR0001 record files."""

from .codeembed import ByteTokenizer, extract_code, load_code_model
from .imageembed import extract_image, load_vision_model, preprocess_image
from .records import (
    MODALITY_CODE,
    MODALITY_IMAGE,
    RecordError,
    read_embeddings,
    write_embeddings,
)
from .registry import CODE_MODELS, VISION_MODELS, ModelSpec, code_spec, vision_spec

__all__ = [
    "ByteTokenizer",
    "CODE_MODELS",
    "MODALITY_CODE",
    "MODALITY_IMAGE",
    "ModelSpec",
    "RecordError",
    "VISION_MODELS",
    "code_spec",
    "extract_code",
    "extract_image",
    "load_code_model",
    "load_vision_model",
    "preprocess_image",
    "read_embeddings",
    "vision_spec",
    "write_embeddings",
]
