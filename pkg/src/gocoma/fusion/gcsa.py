"""Geodesic cosine similarity attention over paired modality sequences.

The layer lifts Euclidean token sequences into the ball, projects them with
curvature-consistent linear maps, scores every (query, key) pair by
lambda * GCS, aggregates with Mobius scalar-weighted sums, pools, fuses the
two modalities with one final Mobius addition and maps the result back to the
tangent space at the origin.

Scores are used raw; no softmax is applied (a config flag can switch row
softmax on for ablation). Mobius addition is neither commutative nor
associative, so every fold here runs left to right in ascending token index.

Parameters live in Euclidean storage: weight matrices as-is, biases by their
tangent vectors log0(b), the temperature as a scalar. A plain first-order
optimizer therefore applies without manifold-aware transport.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..errors import InvalidInputError
from ..geometry import validate_curvature
from . import diffgeo

CHECKPOINT_MAGIC = b"GCSA0001"

# fixed metadata tail: d_model, d_code, d_img (see save_checkpoint)
_TAIL_FLOATS = 3


@dataclass
class GcsaConfig:
    d_model: int = 128
    curvature: float = 1.0
    softmax_scores: bool = False
    symmetric_values: bool = False


@dataclass
class HyperbolicSequence:
    """Ball-point tokens along axis -2; broadcasts over leading batch axes."""

    tokens: ad.Tensor
    curvature: float
    modality: str = "code"

    def __post_init__(self):
        self.tokens = ad.wrap(self.tokens)
        if self.tokens.data.ndim < 2 or self.tokens.data.shape[-2] < 1:
            raise InvalidInputError("sequence needs at least one token")
        self.curvature = validate_curvature(self.curvature)

    @property
    def length(self) -> int:
        return self.tokens.data.shape[-2]

    @property
    def dim(self) -> int:
        return self.tokens.data.shape[-1]


@dataclass
class AttentionMatrix:
    """Raw scores; s_img_code is computed independently, not transposed."""

    s_code_img: ad.Tensor  # (..., T_c, T_v)
    s_img_code: ad.Tensor  # (..., T_v, T_c)


@dataclass
class FusedEmbedding:
    z_hyp: ad.Tensor  # (..., d) ball point
    z_euc: ad.Tensor  # (..., d) tangent vector, log0(z_hyp)
    curvature: float


@dataclass
class GcsaParams:
    """Learnable state. Field order here is also the checkpoint field order."""

    W_Q: ad.Tensor
    b_Q_t: ad.Tensor
    W_K: ad.Tensor
    b_K_t: ad.Tensor
    W_V: ad.Tensor
    b_V_t: ad.Tensor
    lam: ad.Tensor
    curvature: float = 1.0
    # extra projection for the symmetric_values ablation; excluded from the
    # interchange checkpoint format
    W_Vc: ad.Tensor | None = None
    b_Vc_t: ad.Tensor | None = None

    def named(self) -> dict:
        out = {
            "W_Q": self.W_Q,
            "b_Q_t": self.b_Q_t,
            "W_K": self.W_K,
            "b_K_t": self.b_K_t,
            "W_V": self.W_V,
            "b_V_t": self.b_V_t,
            "lam": self.lam,
        }
        if self.W_Vc is not None:
            out["W_Vc"] = self.W_Vc
            out["b_Vc_t"] = self.b_Vc_t
        return out

    def tensors(self) -> list:
        return list(self.named().values())

    @property
    def d_model(self) -> int:
        return self.W_Q.data.shape[0]


def init_params(d_code: int, d_img: int, cfg: GcsaConfig, seed: int) -> GcsaParams:
    """Uniform(+-1/sqrt(d_in)) weights, origin biases, lambda = 1."""
    rng = np.random.default_rng(seed)
    dm = int(cfg.d_model)

    def w(d_in):
        bound = 1.0 / np.sqrt(d_in)
        return ad.Tensor(rng.uniform(-bound, bound, size=(dm, d_in)), requires_grad=True)

    def b():
        return ad.Tensor(np.zeros(dm), requires_grad=True)

    params = GcsaParams(
        W_Q=w(d_code),
        b_Q_t=b(),
        W_K=w(d_img),
        b_K_t=b(),
        W_V=w(d_img),
        b_V_t=b(),
        lam=ad.Tensor(np.asarray(1.0), requires_grad=True),
        curvature=validate_curvature(cfg.curvature),
    )
    if cfg.symmetric_values:
        params.W_Vc = w(d_code)
        params.b_Vc_t = b()
    return params


def lift(seq_euclidean, c: float, modality: str = "code", pre_scale: float = 1.0) -> HyperbolicSequence:
    """Tokenwise exp0 of (optionally pre-scaled) Euclidean tokens."""
    c = validate_curvature(c)
    seq = ad.wrap(seq_euclidean)
    if seq.data.size == 0:
        raise InvalidInputError("cannot lift an empty sequence")
    if seq.data.ndim < 2:
        raise InvalidInputError("expected (..., T, d) token sequences")
    pre_scale = float(pre_scale)
    if not np.isfinite(pre_scale) or pre_scale <= 0:
        raise InvalidInputError(f"pre_scale must be positive, got {pre_scale!r}")
    if pre_scale != 1.0:
        seq = seq * (1.0 / pre_scale)
    return HyperbolicSequence(diffgeo.exp0(seq, c), c, modality)


def _bias_point(b_t: ad.Tensor, c: float) -> ad.Tensor:
    return diffgeo.exp0(b_t, c)


def compute_qkv(code: HyperbolicSequence, img: HyperbolicSequence, p: GcsaParams):
    """Q from code tokens, K and V from image tokens, via Mobius linear maps."""
    if code.curvature != img.curvature or code.curvature != p.curvature:
        raise InvalidInputError("curvature mismatch between sequences and params")
    c = p.curvature
    if p.W_Q.data.shape[1] != code.dim or p.W_K.data.shape[1] != img.dim:
        raise InvalidInputError(
            f"projection shapes {p.W_Q.data.shape}/{p.W_K.data.shape} do not match "
            f"token dims {code.dim}/{img.dim}"
        )
    q = diffgeo.mobius_linear(p.W_Q, _bias_point(p.b_Q_t, c), code.tokens, c)
    k = diffgeo.mobius_linear(p.W_K, _bias_point(p.b_K_t, c), img.tokens, c)
    v = diffgeo.mobius_linear(p.W_V, _bias_point(p.b_V_t, c), img.tokens, c)
    out = (
        HyperbolicSequence(q, c, "code"),
        HyperbolicSequence(k, c, "image"),
        HyperbolicSequence(v, c, "image"),
    )
    if p.W_Vc is not None:
        vc = diffgeo.mobius_linear(p.W_Vc, _bias_point(p.b_Vc_t, c), code.tokens, c)
        return out + (HyperbolicSequence(vc, c, "code"),)
    return out


def _softmax_rows(s: ad.Tensor) -> ad.Tensor:
    shift = s.data.max(axis=-1, keepdims=True)  # constant; softmax is shift-invariant
    e = ad.exp(s - shift)
    return e / ad.sum_(e, axis=-1, keepdims=True)


def _squeeze_last(t: ad.Tensor) -> ad.Tensor:
    return ad.reshape(t, t.data.shape[:-1])


def attention_scores(
    Q: HyperbolicSequence,
    K: HyperbolicSequence,
    lam,
    softmax_scores: bool = False,
) -> AttentionMatrix:
    """s_code_img[i, j] = lam * GCS(Q_i, K_j); the reverse direction likewise."""
    if Q.curvature != K.curvature:
        raise InvalidInputError("curvature mismatch between Q and K")
    if Q.dim != K.dim:
        raise InvalidInputError(f"dimension mismatch: {Q.dim} vs {K.dim}")
    c = Q.curvature
    lam = ad.wrap(lam)

    q_rows = ad.expand_dims(Q.tokens, -2)  # (..., T_c, 1, d)
    k_cols = ad.expand_dims(K.tokens, -3)  # (..., 1, T_v, d)
    s_ci = _squeeze_last(diffgeo.gcs(q_rows, k_cols, c)) * lam

    k_rows = ad.expand_dims(K.tokens, -2)  # (..., T_v, 1, d)
    q_cols = ad.expand_dims(Q.tokens, -3)  # (..., 1, T_c, d)
    s_ic = _squeeze_last(diffgeo.gcs(k_rows, q_cols, c)) * lam

    if softmax_scores:
        s_ci = _softmax_rows(s_ci)
        s_ic = _softmax_rows(s_ic)
    return AttentionMatrix(s_code_img=s_ci, s_img_code=s_ic)


def aggregate(direction: str, scores: AttentionMatrix, operands: HyperbolicSequence) -> HyperbolicSequence:
    """Left-fold, ascending index, of score-scaled operands on the manifold.

    code->img consumes V (image side); img->code consumes Q by default
    (or V-of-code under the symmetric_values ablation, in which case the
    caller passes that sequence here).
    """
    if direction == "code->img":
        s = scores.s_code_img
        out_modality = "code"
    elif direction == "img->code":
        s = scores.s_img_code
        out_modality = "image"
    else:
        raise InvalidInputError(f"unknown direction {direction!r}")
    t_in = s.data.shape[-1]
    if t_in != operands.length:
        raise InvalidInputError(
            f"{t_in} score columns vs {operands.length} operand tokens"
        )
    c = operands.curvature
    acc = None
    for j in range(t_in):
        r_j = s[..., :, j : j + 1]  # (..., T_out, 1)
        x_j = operands.tokens[..., j : j + 1, :]  # (..., 1, d)
        term = diffgeo.mobius_scalar_mul(r_j, x_j, c)
        acc = term if acc is None else diffgeo.mobius_add(acc, term, c)
    return HyperbolicSequence(acc, c, out_modality)


def _pool(seq: HyperbolicSequence) -> ad.Tensor:
    """Left-fold Mobius sum of all tokens; returns (..., d)."""
    acc = seq.tokens[..., 0:1, :]
    for t in range(1, seq.length):
        acc = diffgeo.mobius_add(acc, seq.tokens[..., t : t + 1, :], seq.curvature)
    return ad.reshape(acc, acc.data.shape[:-2] + acc.data.shape[-1:])


def pool_and_fuse(z_code: HyperbolicSequence, z_img: HyperbolicSequence) -> FusedEmbedding:
    """Pool each modality, fuse pooled_code (+)_c pooled_img, map back."""
    if z_code.curvature != z_img.curvature:
        raise InvalidInputError("curvature mismatch between modalities")
    if z_code.dim != z_img.dim:
        raise InvalidInputError(f"dimension mismatch: {z_code.dim} vs {z_img.dim}")
    c = z_code.curvature
    z_hyp = diffgeo.mobius_add(_pool(z_code), _pool(z_img), c)
    return FusedEmbedding(z_hyp=z_hyp, z_euc=diffgeo.log0(z_hyp, c), curvature=c)


def gcsa_forward(
    code_euc,
    img_euc,
    p: GcsaParams,
    cfg: GcsaConfig | None = None,
    pre_scale_code: float = 1.0,
    pre_scale_img: float = 1.0,
) -> FusedEmbedding:
    """lift -> QKV -> scores -> aggregate both directions -> pool and fuse."""
    cfg = cfg or GcsaConfig(d_model=p.d_model, curvature=p.curvature)
    c = p.curvature
    code = lift(code_euc, c, "code", pre_scale_code)
    img = lift(img_euc, c, "image", pre_scale_img)
    qkv = compute_qkv(code, img, p)
    Q, K, V = qkv[:3]
    scores = attention_scores(Q, K, p.lam, softmax_scores=cfg.softmax_scores)
    z_code = aggregate("code->img", scores, V)
    img_operand = qkv[3] if len(qkv) == 4 else Q
    z_img = aggregate("img->code", scores, img_operand)
    return pool_and_fuse(z_code, z_img)


def gcsa_backward(fused: FusedEmbedding, upstream, p: GcsaParams) -> dict:
    """Seed z_euc with the upstream gradient; return named parameter grads."""
    for t in p.tensors():
        t.grad = None
    fused.z_euc.backward(np.asarray(upstream, dtype=np.float64))
    grads = {}
    for name, t in p.named().items():
        grads[name] = np.zeros_like(t.data) if t.grad is None else t.grad
    return grads


def save_checkpoint(path, p: GcsaParams) -> None:
    """Little-endian float64 container; see the field order in GcsaParams.

    The tail (d_model, d_code, d_img) encodes shapes so the reader can slice
    the flat stream without a separate header.
    """
    if p.W_Vc is not None:
        raise InvalidInputError(
            "the interchange checkpoint covers the default layer only, "
            "not symmetric_values variants"
        )
    d_model, d_code = p.W_Q.data.shape
    d_img = p.W_K.data.shape[1]
    fields = [
        p.W_Q.data.ravel(),
        p.b_Q_t.data.ravel(),
        p.W_K.data.ravel(),
        p.b_K_t.data.ravel(),
        p.W_V.data.ravel(),
        p.b_V_t.data.ravel(),
        np.atleast_1d(p.lam.data).ravel(),
        np.asarray([p.curvature, float(d_model), float(d_code), float(d_img)]),
    ]
    flat = np.concatenate(fields).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(flat.tobytes())


def load_checkpoint(path) -> GcsaParams:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise InvalidInputError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
        flat = np.frombuffer(fh.read(), dtype="<f8")
    if flat.size < _TAIL_FLOATS + 2:
        raise InvalidInputError("checkpoint truncated")
    d_model, d_code, d_img = (int(round(v)) for v in flat[-_TAIL_FLOATS:])
    sizes = [d_model * d_code, d_model, d_model * d_img, d_model, d_model * d_img, d_model, 1, 1]
    if sum(sizes) + _TAIL_FLOATS != flat.size:
        raise InvalidInputError(
            f"checkpoint holds {flat.size} floats, expected {sum(sizes) + _TAIL_FLOATS}"
        )
    parts = np.split(flat[:-_TAIL_FLOATS], np.cumsum(sizes)[:-1])
    leaf = lambda a, shape: ad.Tensor(a.reshape(shape).copy(), requires_grad=True)  # noqa: E731
    return GcsaParams(
        W_Q=leaf(parts[0], (d_model, d_code)),
        b_Q_t=leaf(parts[1], (d_model,)),
        W_K=leaf(parts[2], (d_model, d_img)),
        b_K_t=leaf(parts[3], (d_model,)),
        W_V=leaf(parts[4], (d_model, d_img)),
        b_V_t=leaf(parts[5], (d_model,)),
        lam=ad.Tensor(np.asarray(float(parts[6][0])), requires_grad=True),
        curvature=float(parts[7][0]),
    )
