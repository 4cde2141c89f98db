"""Hyperbolic fusion layer and the baseline fusion strategies."""

from .gcsa import (
    AttentionMatrix,
    FusedEmbedding,
    GcsaConfig,
    GcsaParams,
    HyperbolicSequence,
    aggregate,
    attention_scores,
    compute_qkv,
    gcsa_backward,
    gcsa_forward,
    init_params,
    lift,
    load_checkpoint,
    pool_and_fuse,
    save_checkpoint,
)
from .baselines import (
    XAttnParams,
    baseline_concat,
    baseline_euclid_xattn,
    baseline_mobius_fuse,
    init_xattn_params,
)

__all__ = [
    "AttentionMatrix",
    "FusedEmbedding",
    "GcsaConfig",
    "GcsaParams",
    "HyperbolicSequence",
    "XAttnParams",
    "aggregate",
    "attention_scores",
    "baseline_concat",
    "baseline_euclid_xattn",
    "baseline_mobius_fuse",
    "compute_qkv",
    "gcsa_backward",
    "gcsa_forward",
    "init_params",
    "init_xattn_params",
    "lift",
    "load_checkpoint",
    "pool_and_fuse",
    "save_checkpoint",
]
