"""Minimal reverse-mode differentiation over float64 numpy arrays.

A ``Tensor`` wraps an ndarray and records enough of the computation graph to
run one backward pass. The primitive set is exactly what the fusion layer and
the classifier heads need: elementwise arithmetic with broadcasting, matmul,
reductions, tanh/atanh/sqrt/exp/log/cos, relu, slicing, concatenation, a 1D
convolution and a 1D max-pool. Gradients are exact (no approximations), which
is what the finite-difference suites verify.

Graphs are built per forward call and discarded after ``backward``; parameters
are leaf tensors with ``requires_grad=True`` whose ``.grad`` accumulates.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalFailureError


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape``, undoing numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, (gs, ss) in enumerate(zip(g.shape, shape)):
        if ss == 1 and gs != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._vjp = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=np.float64)
        if grad.shape != self.data.shape:
            grad = grad.reshape(self.data.shape)

        # iterative topological order; fold chains can exceed the recursion limit
        topo, stack, seen = [], [(self, False)], set()
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))

        grads = {id(self): grad}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._vjp is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._vjp(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if not np.all(np.isfinite(pg)):
                    op = node._vjp.__qualname__.split(".")[0].lstrip("_")
                    raise NumericalFailureError(
                        f"non-finite gradient produced by op '{op}'"
                    )
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # -- operator sugar -------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])


def wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _node(data, parents, vjp) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._vjp = vjp
    return out


def add(a, b):
    a, b = wrap(a), wrap(b)
    return _node(
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)),
    )


def sub(a, b):
    a, b = wrap(a), wrap(b)
    return _node(
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)),
    )


def mul(a, b):
    a, b = wrap(a), wrap(b)
    return _node(
        a.data * b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        ),
    )


def div(a, b):
    a, b = wrap(a), wrap(b)
    return _node(
        a.data / b.data,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        ),
    )


def neg(a):
    a = wrap(a)
    return _node(-a.data, (a,), lambda g: (-g,))


def power(a, p):
    a = wrap(a)
    p = float(p)
    return _node(a.data**p, (a,), lambda g: (g * p * a.data ** (p - 1.0),))


def matmul(a, b):
    a, b = wrap(a), wrap(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul operands must be at least 2-D")
    out = a.data @ b.data

    def vjp(g):
        ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape)
        gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape)
        return ga, gb

    return _node(out, (a, b), vjp)


def sum_(a, axis=None, keepdims=False):
    a = wrap(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        gg = g
        if not keepdims:
            gg = np.expand_dims(gg, axis)
        return (np.broadcast_to(gg, a.data.shape).copy(),)

    return _node(out, (a,), vjp)


def _elementwise(a, fn, dfn):
    a = wrap(a)
    out = fn(a.data)
    vjp = lambda g: (g * dfn(a.data, out),)  # noqa: E731
    vjp.__qualname__ = f"{fn.__name__}.<locals>.vjp"
    return _node(out, (a,), vjp)


def tanh(a):
    return _elementwise(a, np.tanh, lambda x, y: 1.0 - y * y)


def atanh(a):
    return _elementwise(a, np.arctanh, lambda x, y: 1.0 / (1.0 - x * x))


def sqrt(a):
    return _elementwise(a, np.sqrt, lambda x, y: 0.5 / y)


def exp(a):
    return _elementwise(a, np.exp, lambda x, y: y)


def log(a):
    return _elementwise(a, np.log, lambda x, y: 1.0 / x)


def cos(a):
    return _elementwise(a, np.cos, lambda x, y: -np.sin(x))


def relu(a):
    return _elementwise(a, lambda x: np.maximum(x, 0.0), lambda x, y: (x > 0.0).astype(np.float64))


def clamp_min(a, lo: float):
    """max(a, lo); gradient is zero where the clamp binds."""
    a = wrap(a)
    out = np.maximum(a.data, lo)
    mask = (a.data > lo).astype(np.float64)
    return _node(out, (a,), lambda g: (g * mask,))


def clamp_max(a, hi: float):
    """min(a, hi); gradient is zero where the clamp binds."""
    a = wrap(a)
    out = np.minimum(a.data, hi)
    mask = (a.data < hi).astype(np.float64)
    return _node(out, (a,), lambda g: (g * mask,))


def where(cond, a, b):
    """Select by a constant boolean mask; gradients route to the taken branch."""
    cond = np.asarray(cond, dtype=bool)
    a, b = wrap(a), wrap(b)
    out = np.where(cond, a.data, b.data)

    def vjp(g):
        ga = _unbroadcast(np.where(cond, g, 0.0), a.data.shape)
        gb = _unbroadcast(np.where(cond, 0.0, g), b.data.shape)
        return ga, gb

    return _node(out, (a, b), vjp)


def getitem(a, idx):
    a = wrap(a)
    out = a.data[idx]

    def vjp(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, idx, g)
        return (ga,)

    return _node(out, (a,), vjp)


def reshape(a, shape):
    a = wrap(a)
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.data.shape),))


def swapaxes(a, ax1, ax2):
    a = wrap(a)
    return _node(
        np.swapaxes(a.data, ax1, ax2), (a,), lambda g: (np.swapaxes(g, ax1, ax2),)
    )


def expand_dims(a, axis):
    a = wrap(a)
    return _node(
        np.expand_dims(a.data, axis), (a,), lambda g: (g.reshape(a.data.shape),)
    )


def concatenate(tensors, axis=0):
    tensors = [wrap(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)

    def vjp(g):
        return tuple(np.split(g, np.cumsum(sizes)[:-1], axis=axis))

    return _node(out, tensors, vjp)


def stack(tensors, axis=0):
    tensors = [wrap(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g):
        pieces = np.split(g, len(tensors), axis=axis)
        return tuple(np.squeeze(p, axis=axis) for p in pieces)

    return _node(out, tensors, vjp)


def conv1d(x, w, b=None):
    """Valid cross-correlation. x: (B, C_in, L), w: (C_out, C_in, K), b: (C_out,)."""
    x, w = wrap(x), wrap(w)
    B, C_in, L = x.data.shape
    C_out, _, K = w.data.shape
    L_out = L - K + 1
    if L_out < 1:
        raise ValueError(f"input length {L} too short for kernel {K}")
    out = np.zeros((B, C_out, L_out))
    for k in range(K):
        out += np.einsum("bcl,oc->bol", x.data[:, :, k : k + L_out], w.data[:, :, k])
    if b is None:
        parents = (x, w)
    else:
        b = wrap(b)
        out += b.data[None, :, None]
        parents = (x, w, b)

    def vjp(g):
        gx = np.zeros_like(x.data)
        gw = np.zeros_like(w.data)
        for k in range(K):
            gx[:, :, k : k + L_out] += np.einsum("bol,oc->bcl", g, w.data[:, :, k])
            gw[:, :, k] = np.einsum("bol,bcl->oc", g, x.data[:, :, k : k + L_out])
        if b is None:
            return gx, gw
        return gx, gw, g.sum(axis=(0, 2))

    return _node(out, parents, vjp)


def maxpool1d(x, size: int):
    """Max-pool along the last axis, ceil mode (a short final window is kept)."""
    x = wrap(x)
    B, C, L = x.data.shape
    L_out = -(-L // size)
    pad = L_out * size - L
    padded = x.data
    if pad:
        padded = np.concatenate(
            [x.data, np.full((B, C, pad), -np.inf)], axis=-1
        )
    windows = padded.reshape(B, C, L_out, size)
    idx = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]

    def vjp(g):
        gp = np.zeros((B, C, L_out, size))
        np.put_along_axis(gp, idx[..., None], g[..., None], axis=-1)
        return (gp.reshape(B, C, L_out * size)[:, :, :L],)

    return _node(out, (x,), vjp)


def sqrt_guarded(a, min_out: float = 1e-12):
    """Exact sqrt forward; the gradient denominator is floored at ``min_out``.

    Keeps backward finite at 0 without perturbing forward values, which must
    stay bit-identical to a plain ``np.sqrt``.
    """
    a = wrap(a)
    out = np.sqrt(a.data)
    return _node(out, (a,), lambda g: (g * 0.5 / np.maximum(out, min_out),))


def norm_lastaxis(x):
    """sqrt(sum(x^2)) along the last axis, keepdims; gradient-safe at zero."""
    sq = sum_(mul(x, x), axis=-1, keepdims=True)
    return sqrt_guarded(sq)
