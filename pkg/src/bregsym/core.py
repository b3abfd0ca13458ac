"""Bregman distances, switched-argument ratios and the ray reduction.

``bregman(f, x, y)`` is the distance of ``x`` from the anchor ``y``::

    D(x, y) = J(x) - J(y) - <xi_y, x - y>,   xi_y in dJ(y)

By default it is evaluated as ``(J(x) - <xi_y, x>) - (J(y) - <xi_y, y>)``;
the second bracket is exact for ``|.|`` (``|y| - sign(y) y == 0``), which keeps
the small distances of the abs counterexample free of cancellation error.
Families may override :meth:`Functional.distance` with a more accurate form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functionals import (
    Functional,
    HilbertQuadratic,
    PPower,
    as_point,
    check_selection,
    conjugate,
)

__all__ = [
    "UNBOUNDED",
    "TINY",
    "BregmanValue",
    "RayCoordinates",
    "bregman",
    "bregman_many",
    "symmetric_bregman",
    "switched_ratio",
    "switched_ratios",
    "dual_bregman_check",
    "ray_reduce",
    "componentwise_bregman",
]

#: distances below this are treated as zero when forming ratios
TINY = 1e-14
#: negativity allowed (relative to the size of the terms) before declaring non-convexity
NEG_TOL = 1e-12


class _Unbounded:
    """Sentinel for a ratio whose denominator vanishes but numerator does not."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "unbounded"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()


@dataclass(frozen=True)
class BregmanValue:
    value: float
    x: np.ndarray
    y: np.ndarray
    xi_y: np.ndarray

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class RayCoordinates:
    """Scale-reduced pair ``r = ||x|| / ||y||`` and direction cosine ``theta``."""

    r: float
    theta: float

    def __post_init__(self):
        if not self.r >= 0.0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if not -1.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [-1, 1], got {self.theta}")


def _as_batch(f: Functional, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if f.dim == 1 and X.size != 1 else X[None, :]
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError(f"expected points of shape (n, d), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("points have non-finite entries")
    f.check(X)
    return X


def _raw_bregman(f: Functional, X: np.ndarray, Y: np.ndarray, sel: float) -> np.ndarray:
    xi = f.gradient(Y, sel)
    d = f.distance(X, Y, sel)
    if not np.all(np.isfinite(d)):
        raise FloatingPointError("non-finite Bregman distance")
    scale = np.abs(f.value(X)) + np.abs(f.value(Y)) + np.abs(np.sum(xi * (X - Y), axis=-1))
    bad = d < -NEG_TOL * (1.0 + scale)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"negative Bregman distance {d[i]:.3e} for {f.family}: functional is not convex"
        )
    return np.maximum(d, 0.0)


def bregman_many(f: Functional, X, Y, sel: float = 0.0) -> np.ndarray:
    """Vectorized ``bregman`` over row-paired batches of shape ``(n, d)``."""
    X, Y = _as_batch(f, X), _as_batch(f, Y)
    if X.shape != Y.shape:
        raise ValueError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return _raw_bregman(f, X, Y, check_selection(sel))


def bregman(f: Functional, x, y, sel: float = 0.0) -> BregmanValue:
    x = as_point(x, f.dim)
    y = as_point(y, f.dim)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    sel = check_selection(sel)
    d = _raw_bregman(f, x[None, :], y[None, :], sel)
    return BregmanValue(float(d[0]), x, y, f.gradient(y, sel))


def symmetric_bregman(f: Functional, x, y, sel_x: float = 0.0, sel_y: float = 0.0) -> float:
    """``<xi_x - xi_y, x - y>``, the sum of both switched distances."""
    x = as_point(x, f.dim)
    y = as_point(y, f.dim)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    xi_x = f.gradient(x, check_selection(sel_x))
    xi_y = f.gradient(y, check_selection(sel_y))
    return max(float(np.dot(xi_x - xi_y, x - y)), 0.0)


def switched_ratios(f: Functional, X, Y, sel_x: float = 0.0, sel_y: float = 0.0):
    """Batched ``D(x, y) / D(y, x)``.

    Returns ``(num, den, ratio)``; ``ratio`` is 1 where both distances are
    below :data:`TINY` and ``inf`` where only the denominator is.
    """
    X, Y = _as_batch(f, X), _as_batch(f, Y)
    if X.shape != Y.shape:
        raise ValueError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    num = _raw_bregman(f, X, Y, check_selection(sel_y))
    den = _raw_bregman(f, Y, X, check_selection(sel_x))
    small_num = num < TINY
    small_den = den < TINY
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(small_den, np.inf, num / np.where(small_den, 1.0, den))
    ratio = np.where(small_num & small_den, 1.0, ratio)
    return num, den, ratio


def switched_ratio(f: Functional, x, y, sel_x: float = 0.0, sel_y: float = 0.0):
    """``D(x, y) / D(y, x)`` or :data:`UNBOUNDED`."""
    x = as_point(x, f.dim)
    y = as_point(y, f.dim)
    _, _, ratio = switched_ratios(f, x[None, :], y[None, :], sel_x, sel_y)
    r = float(ratio[0])
    return UNBOUNDED if math.isinf(r) else r


def dual_bregman_check(f: Functional, x, y) -> tuple[float, float]:
    """Both sides of ``D_J(x, y) = D_{J*}(xi_y, xi_x)``."""
    if not isinstance(f, (PPower, HilbertQuadratic)):
        raise ValueError(f"duality check needs a closed-form conjugate, got {f.family}")
    g = conjugate(f)
    x = as_point(x, f.dim)
    y = as_point(y, f.dim)
    lhs = bregman(f, x, y).value
    rhs = bregman(g, f.gradient(y), f.gradient(x)).value
    return lhs, rhs


def ray_reduce(f: Functional, x, y) -> RayCoordinates:
    """Reduce ``(x, y)`` to ``(r, theta)`` with ``z = x / ||y||``.

    For scalars ``theta = sign(y) sign(x)``; vectors use the Euclidean inner
    product of the unit vectors ``e_y`` and ``e_z``.
    """
    if not isinstance(f, PPower) or f.weights is not None:
        raise ValueError("ray reduction needs an unweighted PPower functional")
    x = as_point(x)
    y = as_point(y, x.size)
    ny = float(np.linalg.norm(y))
    if ny == 0.0:
        raise ValueError("ray reduction is undefined for y = 0")
    z = x / ny
    r = float(np.linalg.norm(z))
    if r == 0.0:
        return RayCoordinates(0.0, 0.0)
    if x.size == 1:
        theta = float(np.sign(y[0]) * np.sign(z[0]))
    else:
        theta = float(np.clip(np.dot(y / ny, z / r), -1.0, 1.0))
    return RayCoordinates(r, theta)


def componentwise_bregman(f: PPower, x, y) -> float:
    """Sum of scalar Bregman distances of ``(1/p) w_i |t|^p`` per coordinate.

    Written independently of :func:`bregman` (plain floats, textbook term
    order, compensated summation) so the two can cross-check each other.
    """
    if not isinstance(f, PPower):
        raise ValueError("componentwise decomposition needs a PPower functional")
    x = as_point(x, f.dim)
    y = as_point(y, x.size)
    p = f.p
    weights = f.weights or (1.0,) * x.size
    terms = []
    for xi, yi, w in zip(x.tolist(), y.tolist(), weights):
        slope = math.copysign(abs(yi) ** (p - 1.0), yi) if yi != 0.0 else 0.0
        terms.append(w * (abs(xi) ** p / p - abs(yi) ** p / p - slope * (xi - yi)))
    return math.fsum(terms)
