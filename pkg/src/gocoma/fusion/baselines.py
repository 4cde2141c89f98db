"""The three non-GCSA fusion strategies used in the comparison table.

concat: plain feature concatenation in flat space.
euclid-xattn: conventional scaled-dot-product cross-attention, one QKV triple
per direction, softmax over keys, mean-pooled, concatenated.
mobius: exp0 both vectors, one Mobius addition, log0 back.

All three accept tensors or arrays and keep the autodiff graph alive so the
downstream head can train any projection parameters jointly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..errors import InvalidInputError
from ..geometry import validate_curvature
from . import diffgeo


def baseline_concat(code_vec, img_vec) -> ad.Tensor:
    """[code || image] along the last axis; order fixed by convention."""
    code_vec, img_vec = ad.wrap(code_vec), ad.wrap(img_vec)
    if code_vec.data.shape[:-1] != img_vec.data.shape[:-1]:
        raise InvalidInputError(
            f"leading shapes differ: {code_vec.data.shape} vs {img_vec.data.shape}"
        )
    return ad.concatenate([code_vec, img_vec], axis=-1)


@dataclass
class XAttnParams:
    """One QKV triple per direction; plain linear maps, no biases."""

    W_Q_ci: ad.Tensor  # (d_model, d_code)  queries from code
    W_K_ci: ad.Tensor  # (d_model, d_img)
    W_V_ci: ad.Tensor  # (d_model, d_img)
    W_Q_ic: ad.Tensor  # (d_model, d_img)   queries from image
    W_K_ic: ad.Tensor  # (d_model, d_code)
    W_V_ic: ad.Tensor  # (d_model, d_code)

    def tensors(self) -> list:
        return [self.W_Q_ci, self.W_K_ci, self.W_V_ci, self.W_Q_ic, self.W_K_ic, self.W_V_ic]

    @property
    def d_model(self) -> int:
        return self.W_Q_ci.data.shape[0]


def init_xattn_params(d_code: int, d_img: int, d_model: int, seed: int) -> XAttnParams:
    rng = np.random.default_rng(seed)

    def w(d_in):
        bound = 1.0 / np.sqrt(d_in)
        return ad.Tensor(
            rng.uniform(-bound, bound, size=(d_model, d_in)), requires_grad=True
        )

    return XAttnParams(
        W_Q_ci=w(d_code), W_K_ci=w(d_img), W_V_ci=w(d_img),
        W_Q_ic=w(d_img), W_K_ic=w(d_code), W_V_ic=w(d_code),
    )


def _project(seq: ad.Tensor, W: ad.Tensor) -> ad.Tensor:
    return ad.matmul(seq, ad.swapaxes(W, -1, -2))


def _softmax_last(s: ad.Tensor) -> ad.Tensor:
    shift = s.data.max(axis=-1, keepdims=True)  # constant; softmax is shift-invariant
    e = ad.exp(s - shift)
    return e / ad.sum_(e, axis=-1, keepdims=True)


def _attend(q_seq, kv_seq, W_Q, W_K, W_V) -> ad.Tensor:
    """softmax(QK^T / sqrt(d)) V, mean-pooled over query positions."""
    q = _project(q_seq, W_Q)
    k = _project(kv_seq, W_K)
    v = _project(kv_seq, W_V)
    d_model = q.data.shape[-1]
    logits = ad.matmul(q, ad.swapaxes(k, -1, -2)) * (1.0 / np.sqrt(d_model))
    ctx = ad.matmul(_softmax_last(logits), v)  # (..., T_q, d_model)
    t_q = ctx.data.shape[-2]
    pooled = ad.sum_(ctx, axis=-2) * (1.0 / t_q)
    return pooled


def baseline_euclid_xattn(code_seq, img_seq, params: XAttnParams) -> ad.Tensor:
    """Both attention directions, mean-pooled and concatenated."""
    code_seq, img_seq = ad.wrap(code_seq), ad.wrap(img_seq)
    if code_seq.data.ndim < 2 or img_seq.data.ndim < 2:
        raise InvalidInputError("expected (..., T, d) token sequences")
    if params.W_Q_ci.data.shape[1] != code_seq.data.shape[-1]:
        raise InvalidInputError(
            f"W_Q_ci expects dim {params.W_Q_ci.data.shape[1]}, "
            f"got {code_seq.data.shape[-1]}"
        )
    ci = _attend(code_seq, img_seq, params.W_Q_ci, params.W_K_ci, params.W_V_ci)
    ic = _attend(img_seq, code_seq, params.W_Q_ic, params.W_K_ic, params.W_V_ic)
    return ad.concatenate([ci, ic], axis=-1)


def baseline_mobius_fuse(code_vec, img_vec, c: float, proj_code=None, proj_img=None) -> ad.Tensor:
    """log0(exp0(code) (+)_c exp0(img)); dims must match after projection."""
    c = validate_curvature(c)
    code_vec, img_vec = ad.wrap(code_vec), ad.wrap(img_vec)
    if proj_code is not None:
        code_vec = ad.matmul(code_vec, ad.swapaxes(ad.wrap(proj_code), -1, -2))
    if proj_img is not None:
        img_vec = ad.matmul(img_vec, ad.swapaxes(ad.wrap(proj_img), -1, -2))
    if code_vec.data.shape[-1] != img_vec.data.shape[-1]:
        raise InvalidInputError(
            f"dimension mismatch after projection: {code_vec.data.shape[-1]} vs "
            f"{img_vec.data.shape[-1]}; pass projection matrices for unequal dims"
        )
    fused = diffgeo.mobius_add(diffgeo.exp0(code_vec, c), diffgeo.exp0(img_vec, c), c)
    return diffgeo.log0(fused, c)
