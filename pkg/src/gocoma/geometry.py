"""Poincare ball operations with numerical guards.

All functions act on the last axis of float64 arrays and broadcast over any
leading axes, so a single vector, a token sequence (T, d) or a batch of
sequences (B, T, d) go through the same code path. The ball of curvature
magnitude ``c`` is ``{x : c * ||x||^2 < 1}``; every operation that returns a
ball point re-projects its result so that ``||x|| <= (1 - BALL_EPS) / sqrt(c)``.

Guard conventions:
  * BALL_EPS = 1e-5 max-norm margin keeps atanh away from its pole.
  * Norms below NEAR_ZERO = 1e-12 take the analytic limit of the map
    (identity for exp0/log0, ``r * x`` for scalar multiplication).
  * atanh arguments are clamped to [0, 1 - 1e-12].

Everything here is a pure function; values are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError

BALL_EPS = 1e-5
NEAR_ZERO = 1e-12
ATANH_MAX = 1.0 - 1e-12
_DENOM_MIN = 1e-15


def validate_curvature(c: float) -> float:
    c = float(c)
    if not np.isfinite(c) or c <= 0.0:
        raise InvalidInputError(f"curvature must be a finite positive real, got {c!r}")
    return c


def _as_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def _norm(x: np.ndarray) -> np.ndarray:
    """Euclidean norm along the last axis, kept as a trailing size-1 axis."""
    return np.sqrt(np.sum(x * x, axis=-1, keepdims=True))


def max_norm(c: float) -> float:
    """Largest Euclidean norm a guarded ball point may have."""
    return (1.0 - BALL_EPS) / np.sqrt(c)


def is_in_ball(x, c: float) -> bool:
    c = validate_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    return bool(np.all(c * np.sum(x * x, axis=-1) < 1.0))


def project_to_ball(x, c: float) -> np.ndarray:
    """Rescale any point with sqrt(c)*||x|| >= 1 - BALL_EPS back onto the guard radius."""
    c = validate_curvature(c)
    x = _as_array(x, "x")
    n = _norm(x)
    limit = (1.0 - BALL_EPS) / np.sqrt(c)
    scale = limit / np.maximum(n, NEAR_ZERO)
    return np.where(n >= limit, x * scale, x)


def exp0(v, c: float) -> np.ndarray:
    """Exponential map at the origin: tanh(sqrt(c)||v||) * v / (sqrt(c)||v||)."""
    c = validate_curvature(c)
    v = _as_array(v, "v")
    n = _norm(v)
    safe = np.maximum(n, NEAR_ZERO)
    factor = np.tanh(np.sqrt(c) * safe) / (np.sqrt(c) * safe)
    out = np.where(n < NEAR_ZERO, v, factor * v)
    return project_to_ball(out, c)


def log0(x, c: float) -> np.ndarray:
    """Logarithmic map at the origin, inverse of :func:`exp0`.

    Raises DomainError for points on or outside the ball boundary.
    """
    c = validate_curvature(c)
    x = _as_array(x, "x")
    n = _norm(x)
    if np.any(np.sqrt(c) * n >= 1.0):
        raise DomainError("log0 requires ||x|| < 1/sqrt(c)")
    safe = np.maximum(n, NEAR_ZERO)
    arg = np.minimum(np.sqrt(c) * safe, ATANH_MAX)
    factor = np.arctanh(arg) / (np.sqrt(c) * safe)
    return np.where(n < NEAR_ZERO, x, factor * x)


def mobius_add(x, y, c: float) -> np.ndarray:
    """Gyrovector addition x (+)_c y, re-projected into the guarded ball."""
    c = validate_curvature(c)
    x = _as_array(x, "x")
    y = _as_array(y, "y")
    if x.shape[-1] != y.shape[-1]:
        raise InvalidInputError(
            f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}"
        )
    x2 = np.sum(x * x, axis=-1, keepdims=True)
    y2 = np.sum(y * y, axis=-1, keepdims=True)
    xy = np.sum(x * y, axis=-1, keepdims=True)
    num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
    den = 1.0 + 2.0 * c * xy + c * c * x2 * y2
    out = num / np.maximum(den, _DENOM_MIN)
    return project_to_ball(out, c)


def mobius_scalar_mul(r, x, c: float) -> np.ndarray:
    """Scaling along the geodesic through the origin: tanh(r atanh(sqrt(c)||x||)) x / (sqrt(c)||x||).

    ``r`` may be a scalar or an array broadcastable against ``x`` with a
    trailing size-1 axis (used for per-token attention weights).
    """
    c = validate_curvature(c)
    x = _as_array(x, "x")
    r = _as_array(r, "r")
    n = _norm(x)
    safe = np.maximum(n, NEAR_ZERO)
    arg = np.minimum(np.sqrt(c) * safe, ATANH_MAX)
    factor = np.tanh(r * np.arctanh(arg)) / (np.sqrt(c) * safe)
    out = np.where(n < NEAR_ZERO, r * x, factor * x)
    return project_to_ball(out, c)


def mobius_matvec(W, x, c: float) -> np.ndarray:
    """Matrix action on the ball: exp0(W log0(x)). W is (d_out, d_in)."""
    c = validate_curvature(c)
    W = _as_array(W, "W")
    x = _as_array(x, "x")
    if W.ndim != 2 or W.shape[1] != x.shape[-1]:
        raise InvalidInputError(
            f"matrix shape {W.shape} incompatible with vectors of dim {x.shape[-1]}"
        )
    return exp0(log0(x, c) @ W.T, c)


def mobius_linear(W, b, x, c: float) -> np.ndarray:
    """Curvature-consistent linear map (W (x)_c x) (+)_c b; b is a ball point."""
    c = validate_curvature(c)
    b = _as_array(b, "b")
    if not is_in_ball(b, c):
        raise InvalidInputError("bias must lie strictly inside the ball")
    return mobius_add(mobius_matvec(W, x, c), b, c)


def geodesic_dist(x, y, c: float) -> np.ndarray:
    """Geodesic distance (2/sqrt(c)) atanh(sqrt(c) ||(-x) (+)_c y||)."""
    c = validate_curvature(c)
    diff = mobius_add(-_as_array(x, "x"), y, c)
    n = np.sqrt(np.sum(diff * diff, axis=-1))
    arg = np.minimum(np.sqrt(c) * n, ATANH_MAX)
    return (2.0 / np.sqrt(c)) * np.arctanh(arg)


def gcs(x, y, c: float) -> np.ndarray:
    """Geodesic similarity cos((sqrt(c)/2) d_c(x, y)), bounded in [-1, 1]."""
    c = validate_curvature(c)
    return np.cos((np.sqrt(c) / 2.0) * geodesic_dist(x, y, c))


@dataclass(frozen=True)
class BallPoint:
    """A validated point strictly inside the curvature-c Poincare ball."""

    data: np.ndarray
    curvature: float

    def __post_init__(self):
        c = validate_curvature(self.curvature)
        arr = _as_array(self.data, "data")
        if not is_in_ball(arr, c):
            raise InvalidInputError("point lies on or outside the ball")
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "curvature", c)

    @classmethod
    def from_tangent(cls, v, c: float) -> "BallPoint":
        return cls(exp0(v, c), c)

    def to_tangent(self) -> np.ndarray:
        return log0(self.data, self.curvature)

    @property
    def dim(self) -> int:
        return self.data.shape[-1]
