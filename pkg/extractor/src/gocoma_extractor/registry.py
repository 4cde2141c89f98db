"""Model registry: which backbones we extract with and what they emit.

Code models produce one pooled vector per source file; the pooling rule
is part of the registry because the advertised dimension depends on it
(codet5p reaches 2304 only by concatenating first/mean/max of its 768-d
hidden states). Vision models are torchvision backbones with the final
classification layer removed; each entry pins the native input size the
image is resized to.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelSpec:
    name: str
    source: str  # HF repo id (code) or torchvision builder name (vision)
    dim: int
    pooling: str
    input_size: int | None = None  # vision only


CODE_MODELS = {
    "codebert": ModelSpec("codebert", "microsoft/codebert-base", 768, "cls"),
    "unixcoder": ModelSpec("unixcoder", "microsoft/unixcoder-base", 768, "cls"),
    "codet5p": ModelSpec(
        "codet5p", "Salesforce/codet5p-220m", 2304, "concat-first-mean-max"
    ),
    "qwen25coder": ModelSpec(
        "qwen25coder", "Qwen/Qwen2.5-Coder-3B", 2048, "last-token"
    ),
}

VISION_MODELS = {
    "vit": ModelSpec("vit", "vit_b_16", 768, "class-token", 224),
    "convnext": ModelSpec("convnext", "convnext_base", 1024, "global-avgpool", 224),
    "efficientnetv2": ModelSpec(
        "efficientnetv2", "efficientnet_v2_m", 1280, "global-avgpool", 480
    ),
    "maxvit": ModelSpec("maxvit", "maxvit_t", 512, "prelogits-tanh", 224),
}


def code_spec(name: str) -> ModelSpec:
    if name not in CODE_MODELS:
        raise KeyError(
            f"unknown code model {name!r}; choose from {sorted(CODE_MODELS)}"
        )
    return CODE_MODELS[name]


def vision_spec(name: str) -> ModelSpec:
    if name not in VISION_MODELS:
        raise KeyError(
            f"unknown vision model {name!r}; choose from {sorted(VISION_MODELS)}"
        )
    return VISION_MODELS[name]
