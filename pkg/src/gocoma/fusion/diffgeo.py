"""Differentiable twins of the ball operations.

Same formulas, same guard constants, same operation order as
:mod:`gocoma.geometry`, but built from :mod:`gocoma.autodiff` tensors so a
backward pass yields exact gradients. Forward values are bit-identical to the
plain-numpy module (the cross-equivalence suite asserts this), which is why
each function mirrors its twin line by line instead of sharing code: the
numpy module stays dependency-free and allocation-lean for inference, this
one records the graph.

All functions act on the last axis and broadcast over leading axes. Inputs
may be tensors or arrays; arrays are wrapped as constants.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..errors import DomainError
from ..geometry import ATANH_MAX, BALL_EPS, NEAR_ZERO, _DENOM_MIN, validate_curvature


def project_to_ball(x, c: float):
    c = validate_curvature(c)
    x = ad.wrap(x)
    n = ad.norm_lastaxis(x)
    limit = (1.0 - BALL_EPS) / np.sqrt(c)
    scale = ad.div(limit, ad.clamp_min(n, NEAR_ZERO))
    return ad.where(n.data >= limit, x * scale, x)


def exp0(v, c: float):
    c = validate_curvature(c)
    v = ad.wrap(v)
    n = ad.norm_lastaxis(v)
    safe = ad.clamp_min(n, NEAR_ZERO)
    factor = ad.tanh(safe * np.sqrt(c)) / (safe * np.sqrt(c))
    out = ad.where(n.data < NEAR_ZERO, v, factor * v)
    return project_to_ball(out, c)


def log0(x, c: float):
    c = validate_curvature(c)
    x = ad.wrap(x)
    n = ad.norm_lastaxis(x)
    if np.any(np.sqrt(c) * n.data >= 1.0):
        raise DomainError("log0 requires ||x|| < 1/sqrt(c)")
    safe = ad.clamp_min(n, NEAR_ZERO)
    arg = ad.clamp_max(safe * np.sqrt(c), ATANH_MAX)
    factor = ad.atanh(arg) / (safe * np.sqrt(c))
    return ad.where(n.data < NEAR_ZERO, x, factor * x)


def mobius_add(x, y, c: float):
    c = validate_curvature(c)
    x, y = ad.wrap(x), ad.wrap(y)
    x2 = ad.sum_(x * x, axis=-1, keepdims=True)
    y2 = ad.sum_(y * y, axis=-1, keepdims=True)
    xy = ad.sum_(x * y, axis=-1, keepdims=True)
    num = (xy * (2.0 * c) + 1.0 + y2 * c) * x + (-(x2 * c) + 1.0) * y
    den = xy * (2.0 * c) + 1.0 + x2 * (c * c) * y2
    out = num / ad.clamp_min(den, _DENOM_MIN)
    return project_to_ball(out, c)


def mobius_scalar_mul(r, x, c: float):
    c = validate_curvature(c)
    r, x = ad.wrap(r), ad.wrap(x)
    n = ad.norm_lastaxis(x)
    safe = ad.clamp_min(n, NEAR_ZERO)
    arg = ad.clamp_max(safe * np.sqrt(c), ATANH_MAX)
    factor = ad.tanh(r * ad.atanh(arg)) / (safe * np.sqrt(c))
    return project_to_ball(ad.where(n.data < NEAR_ZERO, r * x, factor * x), c)


def mobius_matvec(W, x, c: float):
    c = validate_curvature(c)
    W, x = ad.wrap(W), ad.wrap(x)
    return exp0(ad.matmul(log0(x, c), ad.swapaxes(W, -1, -2)), c)


def mobius_linear(W, b, x, c: float):
    """b is a ball point (already mapped through exp0 by the caller)."""
    return mobius_add(mobius_matvec(W, x, c), b, c)


def geodesic_dist(x, y, c: float):
    """Keepdims variant: output has a trailing size-1 axis."""
    c = validate_curvature(c)
    x = ad.wrap(x)
    diff = mobius_add(-x, y, c)
    n = ad.norm_lastaxis(diff)
    arg = ad.clamp_max(n * np.sqrt(c), ATANH_MAX)
    return ad.atanh(arg) * (2.0 / np.sqrt(c))


def gcs(x, y, c: float):
    """Geodesic similarity with a trailing size-1 axis."""
    c = validate_curvature(c)
    return ad.cos(geodesic_dist(x, y, c) * (np.sqrt(c) / 2.0))
