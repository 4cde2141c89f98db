"""Frozen vision-model embeddings for artifact images.

Each registry backbone is a torchvision model with its classification
layer swapped for identity, so the output is the penultimate feature
vector. Images are resized to the model's native input with bilinear
interpolation and ImageNet-normalized; the policy string is recorded in
the sidecar because no single convention exists for artifact images.
"""

from __future__ import annotations

import logging

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from torchvision import models as tvm
from torchvision.transforms import InterpolationMode
from torchvision.transforms import functional as TF

from .codeembed import write_sidecar
from .records import MODALITY_IMAGE, write_embeddings
from .registry import vision_spec

logger = logging.getLogger("gocoma_extractor")

_MEAN = [0.485, 0.456, 0.406]
_STD = [0.229, 0.224, 0.225]

_BUILDERS = {
    "vit": tvm.vit_b_16,
    "convnext": tvm.convnext_base,
    "efficientnetv2": tvm.efficientnet_v2_m,
    "maxvit": tvm.maxvit_t,
}


def _strip_classifier(name: str, model: torch.nn.Module) -> None:
    ident = torch.nn.Identity()
    if name == "vit":
        model.heads.head = ident
    elif name == "convnext":
        model.classifier[2] = ident
    elif name == "efficientnetv2":
        model.classifier[1] = ident
    elif name == "maxvit":
        model.classifier[5] = ident  # keep the pre-logits block
    else:
        raise KeyError(name)


def load_vision_model(name: str, pretrained: bool = True, seed: int = 0):
    """Return (feature model, revision tag); frozen, eval mode."""
    spec = vision_spec(name)
    if pretrained:
        model = _BUILDERS[name](weights="DEFAULT")
        tag = "torchvision-DEFAULT"
    else:
        torch.manual_seed(seed)
        model = _BUILDERS[name](weights=None)
        tag = f"random-init-seed-{seed}"
    _strip_classifier(name, model)
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model, tag


def preprocess_image(img: Image.Image, size: int) -> torch.Tensor:
    img = img.convert("RGB")
    img = TF.resize(img, [size, size], InterpolationMode.BILINEAR, antialias=True)
    return TF.normalize(TF.to_tensor(img), _MEAN, _STD)


def extract_image(
    items,
    model_name: str,
    out_path,
    labels: dict | None = None,
    default_label: int = 0,
    pretrained: bool = True,
    batch_size: int = 8,
    seed: int = 0,
):
    """Embed (id, png path) items; returns (written count, skipped ids).

    Undecodable images are skipped with a logged id rather than failing
    the shard.
    """
    items = list(items)
    if not items:
        raise ValueError("no image inputs to extract")
    spec = vision_spec(model_name)
    model, tag = load_vision_model(model_name, pretrained=pretrained, seed=seed)
    labels = labels or {}
    policy = f"bilinear-{spec.input_size}x{spec.input_size}-imagenet-norm"

    decoded, skipped = [], []
    for rec_id, path in items:
        try:
            with Image.open(path) as img:
                decoded.append((rec_id, preprocess_image(img, spec.input_size)))
        except (OSError, UnidentifiedImageError) as exc:
            logger.warning("skipping undecodable image %r (%s)", rec_id, exc)
            skipped.append(rec_id)
    if not decoded:
        raise ValueError("no decodable images")

    rows = []
    for start in range(0, len(decoded), batch_size):
        chunk = decoded[start : start + batch_size]
        batch = torch.stack([t for _, t in chunk])
        with torch.no_grad():
            feats = model(batch)
        if feats.shape[1] != spec.dim:
            raise RuntimeError(
                f"{model_name}: feature dim {feats.shape[1]} != registry {spec.dim}"
            )
        for i, (rec_id, _) in enumerate(chunk):
            label = int(labels.get(rec_id, default_label))
            rows.append(
                (rec_id, label, MODALITY_IMAGE, feats[i].numpy()[None, :].astype(np.float32))
            )

    n = write_embeddings(out_path, rows)
    write_sidecar(
        out_path, spec, tag, pretrained, "image", spec.dim, resize_policy=policy
    )
    return n, skipped
