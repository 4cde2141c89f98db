"""Classification heads over fused or raw embedding vectors.

CnnHead is the two-layer 1D-CNN baseline head: 64 then 128 filters, kernel 3,
rectifier activations, one max-pool of window 2 after the second convolution,
flatten, dropout, dense softmax. Pooling after each conv layer would need
input length >= 10; pooling once keeps the documented length-5 minimum valid,
so that is the shipped layout (window size configurable).

FcnHead is the fused-vector head: one hidden rectifier layer (width d_model
by default), dropout, dense softmax.

Both heads treat dropout as train-time only; evaluation passes are
deterministic. Weights initialize from uniform(+-1/sqrt(fan_in)), biases at
zero, drawn in declaration order from one seeded generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..errors import InvalidInputError

CHECKPOINT_MAGIC = b"CLSF0001"

_KIND_CNN = 1.0
_KIND_FCN = 2.0


def _softmax(logits: ad.Tensor) -> ad.Tensor:
    shift = logits.data.max(axis=-1, keepdims=True)  # constant; shift-invariant
    e = ad.exp(logits - shift)
    return e / ad.sum_(e, axis=-1, keepdims=True)


def _dropout(x: ad.Tensor, p: float, rng: np.random.Generator) -> ad.Tensor:
    if p <= 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p).astype(np.float64) / (1.0 - p)
    return x * keep


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return ad.Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def _zeros(shape):
    return ad.Tensor(np.zeros(shape), requires_grad=True)


def _pool_tokens(x: np.ndarray) -> np.ndarray:
    """Sequences (B, T, d) are averaged over tokens before entering a head."""
    if x.ndim == 3:
        return x.mean(axis=1)
    return x


@dataclass
class CnnHead:
    input_len: int
    n_classes: int
    dropout: float = 0.2
    filters1: int = 64
    filters2: int = 128
    kernel: int = 3
    pool: int = 2
    seed: int = 0
    params_: dict = field(default_factory=dict)

    def __post_init__(self):
        min_len = 2 * (self.kernel - 1) + 1
        if self.input_len < min_len:
            raise InvalidInputError(
                f"input length {self.input_len} < {min_len} needed for two "
                f"kernel-{self.kernel} convolutions"
            )
        if not self.params_:
            rng = np.random.default_rng(self.seed)
            k = self.kernel
            conv_len = self.input_len - 2 * (k - 1)
            flat = self.filters2 * (-(-conv_len // self.pool))
            self.params_ = {
                "w1": _uniform(rng, 1 * k, (self.filters1, 1, k)),
                "b1": _zeros(self.filters1),
                "w2": _uniform(rng, self.filters1 * k, (self.filters2, self.filters1, k)),
                "b2": _zeros(self.filters2),
                "W_fc": _uniform(rng, flat, (self.n_classes, flat)),
                "b_fc": _zeros(self.n_classes),
            }

    def params(self) -> list:
        return list(self.params_.values())

    def forward(self, x, train: bool = False, rng: np.random.Generator | None = None) -> ad.Tensor:
        if isinstance(x, ad.Tensor):  # upstream fusion output, graph attached
            if x.data.ndim == 1:
                x = ad.reshape(x, (1, x.data.shape[0]))
        else:
            arr = _pool_tokens(np.asarray(x, dtype=np.float64))
            if arr.ndim == 1:
                arr = arr[None, :]
            x = ad.wrap(arr)
        if x.data.shape[-1] != self.input_len:
            raise InvalidInputError(
                f"expected vectors of length {self.input_len}, got {x.data.shape[-1]}"
            )
        p = self.params_
        h = ad.expand_dims(x, 1)  # (B, 1, L)
        h = ad.relu(ad.conv1d(h, p["w1"], p["b1"]))
        h = ad.relu(ad.conv1d(h, p["w2"], p["b2"]))
        h = ad.maxpool1d(h, self.pool)
        b = h.data.shape[0]
        h = ad.reshape(h, (b, h.data.shape[1] * h.data.shape[2]))
        if train:
            if rng is None:
                raise InvalidInputError("training-mode forward needs an rng for dropout")
            h = _dropout(h, self.dropout, rng)
        logits = ad.matmul(h, ad.swapaxes(p["W_fc"], 0, 1)) + p["b_fc"]
        return _softmax(logits)


@dataclass
class FcnHead:
    d_in: int
    n_classes: int
    hidden: int = 128
    dropout: float = 0.2
    seed: int = 0
    params_: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.params_:
            rng = np.random.default_rng(self.seed)
            self.params_ = {
                "W1": _uniform(rng, self.d_in, (self.hidden, self.d_in)),
                "b1": _zeros(self.hidden),
                "W2": _uniform(rng, self.hidden, (self.n_classes, self.hidden)),
                "b2": _zeros(self.n_classes),
            }

    def params(self) -> list:
        return list(self.params_.values())

    def forward(self, x, train: bool = False, rng: np.random.Generator | None = None) -> ad.Tensor:
        if not isinstance(x, ad.Tensor):
            x = ad.wrap(np.asarray(x, dtype=np.float64))
        if x.data.ndim == 1:
            x = ad.reshape(x, (1, x.data.shape[0]))
        if x.data.shape[-1] != self.d_in:
            raise InvalidInputError(
                f"expected dim {self.d_in}, got {x.data.shape[-1]}"
            )
        p = self.params_
        h = ad.relu(ad.matmul(x, ad.swapaxes(p["W1"], 0, 1)) + p["b1"])
        if train:
            if rng is None:
                raise InvalidInputError("training-mode forward needs an rng for dropout")
            h = _dropout(h, self.dropout, rng)
        logits = ad.matmul(h, ad.swapaxes(p["W2"], 0, 1)) + p["b2"]
        return _softmax(logits)


def save_head(path, head) -> None:
    """CLSF0001 container: flat little-endian float64 params plus a shape tail."""
    if isinstance(head, CnnHead):
        tail = [
            float(head.input_len),
            float(head.n_classes),
            float(head.dropout),
            float(head.filters1),
            float(head.filters2),
            float(head.kernel),
            float(head.pool),
            _KIND_CNN,
        ]
    elif isinstance(head, FcnHead):
        tail = [
            float(head.d_in),
            float(head.n_classes),
            float(head.dropout),
            float(head.hidden),
            _KIND_FCN,
        ]
    else:
        raise InvalidInputError(f"unknown head type {type(head).__name__}")
    flat = np.concatenate(
        [t.data.ravel() for t in head.params()] + [np.asarray(tail)]
    ).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(flat.tobytes())


def load_head(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise InvalidInputError(f"bad magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
        flat = np.frombuffer(fh.read(), dtype="<f8")
    if flat.size < 1:
        raise InvalidInputError("checkpoint truncated")
    kind = flat[-1]
    if kind == _KIND_CNN:
        if flat.size < 8:
            raise InvalidInputError("checkpoint truncated")
        input_len, n_classes, dropout, f1, f2, k, pool = flat[-8:-1]
        head = CnnHead(
            input_len=int(input_len),
            n_classes=int(n_classes),
            dropout=float(dropout),
            filters1=int(f1),
            filters2=int(f2),
            kernel=int(k),
            pool=int(pool),
        )
        tail_n = 8
    elif kind == _KIND_FCN:
        if flat.size < 5:
            raise InvalidInputError("checkpoint truncated")
        d_in, n_classes, dropout, hidden = flat[-5:-1]
        head = FcnHead(
            d_in=int(d_in),
            n_classes=int(n_classes),
            dropout=float(dropout),
            hidden=int(hidden),
        )
        tail_n = 5
    else:
        raise InvalidInputError(f"unknown head kind {kind!r}")
    body = flat[:-tail_n]
    sizes = [t.data.size for t in head.params()]
    if sum(sizes) != body.size:
        raise InvalidInputError(
            f"checkpoint holds {body.size} parameter floats, expected {sum(sizes)}"
        )
    parts = np.split(body, np.cumsum(sizes)[:-1])
    for t, part in zip(head.params(), parts):
        t.data = part.reshape(t.data.shape).copy()
    return head
