"""Synthetic hierarchical dataset generation.

Each class is a leaf of a two-level factorization (coarse group, fine index).
The code modality only sees the coarse prototype: a cumulative path of
ceil(depth/2) node vectors specific to the group. The image modality only
sees the fine prototype: the remaining levels drawn from a bank SHARED across
groups, indexed by the within-group position. With several classes per group,
code alone cannot separate classmates inside a group and image alone cannot
separate classes in different groups that reuse the same bank entry; only the
joint (coarse, fine) pair identifies the leaf, which is exactly the
coarse-to-fine structure the fusion layer is meant to exploit.

depth 1 is the degenerate tree: every class is its own group AND its own bank
entry, so either modality alone is linearly separable.

Tokens are per-token random affine images of the prototype plus isotropic
noise. One seeded generator drives every draw in a fixed order, making equal
seeds produce byte-identical record files.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import InvalidInputError
from .manifest import DatasetManifest, ingest
from .records import EmbeddingRecord, write_records


def _validate(name, value, minimum):
    value = int(value)
    if value < minimum:
        raise InvalidInputError(f"{name} must be >= {minimum}, got {value}")
    return value


def synth_records(
    n_samples: int,
    n_classes: int,
    T_c: int = 2,
    T_v: int = 2,
    d_code: int = 8,
    d_img: int = 8,
    hierarchy_depth: int = 3,
    noise: float = 0.3,
    seed: int = 0,
):
    """Returns (code_records, image_records, class_names)."""
    n_samples = _validate("n_samples", n_samples, 1)
    n_classes = _validate("n_classes", n_classes, 2)
    T_c = _validate("T_c", T_c, 1)
    T_v = _validate("T_v", T_v, 1)
    d_code = _validate("d_code", d_code, 1)
    d_img = _validate("d_img", d_img, 1)
    depth = _validate("hierarchy_depth", hierarchy_depth, 1)
    noise = float(noise)
    if noise < 0 or not np.isfinite(noise):
        raise InvalidInputError(f"noise must be a finite non-negative real, got {noise}")

    rng = np.random.default_rng(seed)
    d_proto = max(4, depth + 2)

    if depth == 1:
        groups, per_group = n_classes, 1
        coarse_levels, fine_levels = 1, 1
        group_of = np.arange(n_classes)
        fine_of = np.arange(n_classes)  # every class owns a bank entry
        n_fine = n_classes
    else:
        groups = int(np.ceil(np.sqrt(n_classes)))
        per_group = int(np.ceil(n_classes / groups))
        coarse_levels = -(-depth // 2)
        fine_levels = depth - coarse_levels
        group_of = np.arange(n_classes) // per_group
        fine_of = np.arange(n_classes) % per_group
        n_fine = per_group

    # draw order: coarse paths, shared fine bank, token maps, per-sample noise
    coarse_nodes = rng.normal(size=(groups, coarse_levels, d_proto)) / np.sqrt(d_proto)
    coarse_proto = coarse_nodes.sum(axis=1) / np.sqrt(coarse_levels)
    fine_nodes = rng.normal(size=(n_fine, fine_levels, d_proto)) / np.sqrt(d_proto)
    fine_proto = fine_nodes.sum(axis=1) / np.sqrt(fine_levels)

    maps_code = rng.normal(size=(T_c, d_code, d_proto)) / np.sqrt(d_proto)
    maps_img = rng.normal(size=(T_v, d_img, d_proto)) / np.sqrt(d_proto)

    labels = np.arange(n_samples) % n_classes
    code_records, image_records = [], []
    for i in range(n_samples):
        k = int(labels[i])
        c_tok = np.einsum("tdp,p->td", maps_code, coarse_proto[group_of[k]])
        v_tok = np.einsum("tdp,p->td", maps_img, fine_proto[fine_of[k]])
        if noise > 0:
            c_tok = c_tok + noise * rng.normal(size=c_tok.shape) / np.sqrt(d_code)
            v_tok = v_tok + noise * rng.normal(size=v_tok.shape) / np.sqrt(d_img)
        rec_id = f"s{i:06d}"
        code_records.append(
            EmbeddingRecord(rec_id, k, "code", c_tok.astype(np.float32))
        )
        image_records.append(
            EmbeddingRecord(rec_id, k, "image", v_tok.astype(np.float32))
        )

    class_names = [f"class{k}" for k in range(n_classes)]
    return code_records, image_records, class_names


def synth_generate(
    n_samples: int,
    n_classes: int,
    T_c: int = 2,
    T_v: int = 2,
    d_code: int = 8,
    d_img: int = 8,
    hierarchy_depth: int = 3,
    noise: float = 0.3,
    seed: int = 0,
    out_dir: str = ".",
) -> DatasetManifest:
    """Generate, write code.embr / image.embr under out_dir, return manifest.

    The manifest carries no split yet; attach one with splits.apply_split.
    """
    code_records, image_records, class_names = synth_records(
        n_samples, n_classes, T_c, T_v, d_code, d_img, hierarchy_depth, noise, seed
    )
    os.makedirs(out_dir, exist_ok=True)
    code_path = os.path.join(out_dir, "code.embr")
    image_path = os.path.join(out_dir, "image.embr")
    write_records(code_path, code_records)
    write_records(image_path, image_records)
    return ingest([code_path, image_path], class_names=class_names)
