"""Catalog of convex functionals used for Bregman distance computations.

Every family here is separable: the value of a functional on a point is a
(weighted) sum over coordinates of a scalar convex function, and the gradient
acts coordinatewise. All methods therefore accept arrays whose last axis is
the point dimension, so batches of shape ``(n, d)`` are evaluated in one call.

p-powers are normalized as ``(1/p) * sum_i w_i |x_i|^p``. The switched-ratio
of Bregman distances is invariant under positive scaling of the functional,
so the symmetry constants for ``||x||^p`` apply unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Functional",
    "PPower",
    "HilbertQuadratic",
    "Abs",
    "HuberStd",
    "SqrtSmoothed",
    "CustomScalar",
    "NoConjugateError",
    "NotTwiceDifferentiableError",
    "as_point",
    "check_selection",
    "evaluate",
    "subgradient",
    "conjugate",
    "second_derivative",
    "quartic_example",
    "to_dict",
    "from_dict",
]


class NoConjugateError(ValueError):
    """Raised when a family has no closed-form convex conjugate."""


class NotTwiceDifferentiableError(ValueError):
    """Raised when a second derivative does not exist at the requested point."""


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite 1-d float array, optionally of a given size."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"a point must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite entries")
    if dim is not None and arr.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {arr.size}")
    return arr


def check_selection(s: float) -> float:
    s = float(s)
    if not -1.0 <= s <= 1.0:
        raise ValueError(f"kink selection must lie in [-1, 1], got {s}")
    return s


class Functional:
    """Base class. Subclasses implement the coordinatewise pieces."""

    family: str = ""
    #: fixed dimension, or None when any dimension is accepted
    dim: int | None = None

    def check(self, x: np.ndarray) -> None:
        if self.dim is not None and x.shape[-1] != self.dim:
            raise ValueError(
                f"dimension mismatch: {self.family} expects dim {self.dim}, "
                f"got {x.shape[-1]}"
            )

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x: np.ndarray, s: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def second(self, x: float) -> float:
        raise NotTwiceDifferentiableError(f"{self.family} has no second derivative")

    def distance(self, x: np.ndarray, y: np.ndarray, s: float = 0.0) -> np.ndarray:
        """Bregman distance of ``x`` from anchor ``y`` (batched, no checks)."""
        xi = self.gradient(y, s)
        return (self.value(x) - np.sum(xi * x, axis=-1)) - (self.value(y) - np.sum(xi * y, axis=-1))

    def conjugate(self) -> "Functional":
        raise NoConjugateError(f"no closed-form conjugate for family {self.family!r}")

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class PPower(Functional):
    """``J(x) = (1/p) sum_i w_i |x_i|^p`` for ``p > 1``.

    With ``weights=None`` this is the l^p case; nonnegative weights model a
    quadrature rule for a discretized L^p space.
    """

    p: float
    weights: tuple[float, ...] | None = None
    family = "ppower"

    def __post_init__(self):
        p = float(self.p)
        if not (p > 1.0 and math.isfinite(p)):
            raise ValueError(f"PPower requires p > 1, got {self.p}")
        object.__setattr__(self, "p", p)
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if not w or any(not (v >= 0.0 and math.isfinite(v)) for v in w):
                raise ValueError("weights must be finite and nonnegative")
            object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return None if self.weights is None else len(self.weights)

    @property
    def w(self):
        return 1.0 if self.weights is None else np.asarray(self.weights)

    def value(self, x):
        self.check(x)
        return np.sum(self.w * np.abs(x) ** self.p, axis=-1) / self.p

    def gradient(self, x, s=0.0):
        self.check(x)
        # sign(0) = 0 gives the e_x = 0 convention at the origin
        return self.w * np.sign(x) * np.abs(x) ** (self.p - 1.0)

    def second(self, x):
        if self.weights is not None and len(self.weights) != 1:
            raise NotTwiceDifferentiableError("second derivative is defined for scalar PPower only")
        w = 1.0 if self.weights is None else self.weights[0]
        if x == 0.0:
            if self.p < 2.0:
                raise NotTwiceDifferentiableError(
                    f"PPower with p={self.p} < 2 has no second derivative at 0"
                )
            return w if self.p == 2.0 else 0.0
        return w * (self.p - 1.0) * abs(x) ** (self.p - 2.0)

    def conjugate(self):
        q = self.p / (self.p - 1.0)
        if self.weights is None:
            return PPower(q)
        if any(v == 0.0 for v in self.weights):
            raise NoConjugateError("conjugate of a PPower with zero weights is not finite")
        return PPower(q, tuple(v ** (1.0 - q) for v in self.weights))

    def params(self):
        return {"p": self.p, "weights": None if self.weights is None else list(self.weights)}


@dataclass(frozen=True)
class HilbertQuadratic(Functional):
    """``J(x) = ||x||^2 / 2``; self-dual, gradient is the identity."""

    family = "hilbert"

    def value(self, x):
        return 0.5 * np.sum(x * x, axis=-1)

    def gradient(self, x, s=0.0):
        return np.array(x, dtype=float, copy=True)

    def second(self, x):
        return 1.0

    def conjugate(self):
        return self


@dataclass(frozen=True)
class Abs(Functional):
    """``J(x) = |x|`` on the real line; ``s`` picks the subgradient at 0."""

    family = "abs"
    dim = 1

    def value(self, x):
        self.check(x)
        return np.sum(np.abs(x), axis=-1)

    def gradient(self, x, s=0.0):
        self.check(x)
        s = check_selection(s)
        return np.where(x == 0.0, s, np.sign(x))

    def second(self, x):
        if x == 0.0:
            raise NotTwiceDifferentiableError("abs is not differentiable at 0")
        return 0.0


@dataclass(frozen=True)
class HuberStd(Functional):
    """Standard Huber function: ``x^2/2`` for ``|x| < 1``, ``|x| - 1/2`` outside."""

    family = "huber"
    dim = 1

    def value(self, x):
        self.check(x)
        a = np.abs(x)
        return np.sum(np.where(a < 1.0, 0.5 * x * x, a - 0.5), axis=-1)

    def gradient(self, x, s=0.0):
        self.check(x)
        return np.clip(x, -1.0, 1.0)

    def distance(self, x, y, s=0.0):
        # integral of |clip(t) - clip(y)| between y and x, split at -1 and 1;
        # avoids the cancellation of the generic formula near the kinks
        lo, hi = np.minimum(x, y), np.maximum(x, y)
        c = np.clip(y, -1.0, 1.0)
        left = (1.0 + c) * np.maximum(np.minimum(hi, -1.0) - lo, 0.0)
        right = (1.0 - c) * np.maximum(hi - np.maximum(lo, 1.0), 0.0)
        a = np.clip(lo, -1.0, 1.0)
        b = np.clip(hi, -1.0, 1.0)
        mid = np.where(
            c <= a,
            (b - a) * ((b - c) + (a - c)) / 2.0,
            np.where(
                c >= b,
                (b - a) * ((c - a) + (c - b)) / 2.0,
                ((c - a) ** 2 + (b - c) ** 2) / 2.0,
            ),
        )
        return np.sum(left + mid + right, axis=-1)

    def second(self, x):
        if abs(x) == 1.0:
            raise NotTwiceDifferentiableError("Huber has no second derivative at |x| = 1")
        return 1.0 if abs(x) < 1.0 else 0.0


@dataclass(frozen=True)
class SqrtSmoothed(Functional):
    """``J(x) = sqrt(x^2 + eps)``, a smooth surrogate of ``|x|``."""

    eps: float
    family = "sqrt"
    dim = 1

    def __post_init__(self):
        eps = float(self.eps)
        if not (eps > 0.0 and math.isfinite(eps)):
            raise ValueError(f"SqrtSmoothed requires eps > 0, got {self.eps}")
        object.__setattr__(self, "eps", eps)

    def value(self, x):
        self.check(x)
        return np.sum(np.sqrt(x * x + self.eps), axis=-1)

    def gradient(self, x, s=0.0):
        self.check(x)
        return x / np.sqrt(x * x + self.eps)

    def second(self, x):
        return self.eps / (x * x + self.eps) ** 1.5

    def params(self):
        return {"eps": self.eps}


@dataclass(frozen=True)
class CustomScalar(Functional):
    """Caller-supplied scalar function with first and second derivatives.

    The callables must accept numpy arrays elementwise. Convexity is the
    caller's responsibility; it is checked only where second derivatives are
    sampled (see :func:`bregsym.bounds.second_derivative_bound`).
    """

    fn: Callable = field(compare=False)
    d1: Callable = field(compare=False)
    d2: Callable = field(compare=False)
    name: str = "custom"
    family = "custom"
    dim = 1

    def value(self, x):
        self.check(x)
        return np.sum(self.fn(x), axis=-1)

    def gradient(self, x, s=0.0):
        self.check(x)
        return np.asarray(self.d1(x), dtype=float)

    def second(self, x):
        return float(self.d2(x))

    def params(self):
        return {"name": self.name}


def quartic_example() -> CustomScalar:
    """``J(x) = x^4/12 + x^2/2``, strongly convex with ``J'' = x^2 + 1``."""
    return CustomScalar(
        fn=lambda x: x**4 / 12.0 + x**2 / 2.0,
        d1=lambda x: x**3 / 3.0 + x,
        d2=lambda x: x**2 + 1.0,
        name="quartic",
    )


_CUSTOM_REGISTRY = {"quartic": quartic_example}


def evaluate(f: Functional, x) -> float:
    x = as_point(x, f.dim)
    return float(f.value(x))


def subgradient(f: Functional, x, sel: float = 0.0) -> np.ndarray:
    """Element of the subdifferential of ``f`` at ``x``.

    ``sel`` is only used at kinks (``Abs`` at 0); every other family returns
    its unique gradient.
    """
    x = as_point(x, f.dim)
    check_selection(sel)
    return f.gradient(x, sel)


def conjugate(f: Functional) -> Functional:
    return f.conjugate()


def second_derivative(f: Functional, x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("non-finite input")
    return f.second(x)


_FAMILIES = {
    "ppower": lambda params: PPower(
        params["p"], None if params.get("weights") is None else tuple(params["weights"])
    ),
    "hilbert": lambda params: HilbertQuadratic(),
    "abs": lambda params: Abs(),
    "huber": lambda params: HuberStd(),
    "sqrt": lambda params: SqrtSmoothed(params["eps"]),
}

_ALLOWED_PARAMS = {
    "ppower": {"p", "weights"},
    "hilbert": set(),
    "abs": set(),
    "huber": set(),
    "sqrt": {"eps"},
    "custom": {"name"},
}


def to_dict(f: Functional) -> dict:
    """JSON descriptor ``{"family": ..., "params": {...}}``."""
    if isinstance(f, CustomScalar) and f.name not in _CUSTOM_REGISTRY:
        raise ValueError(f"custom functional {f.name!r} is not serializable")
    return {"family": f.family, "params": f.params()}


def from_dict(d: dict) -> Functional:
    try:
        family = d["family"]
    except (KeyError, TypeError):
        raise ValueError("functional descriptor needs a 'family' key") from None
    extra = set(d) - {"family", "params"}
    if extra:
        raise ValueError(f"unknown descriptor fields: {sorted(extra)}")
    params = d.get("params") or {}
    if family not in _ALLOWED_PARAMS:
        raise ValueError(f"unknown functional family {family!r}")
    unknown = set(params) - _ALLOWED_PARAMS[family]
    if unknown:
        raise ValueError(f"unknown parameters for {family}: {sorted(unknown)}")
    if family == "custom":
        name = params.get("name")
        if name not in _CUSTOM_REGISTRY:
            raise ValueError(f"unknown custom functional {name!r}")
        return _CUSTOM_REGISTRY[name]()
    try:
        return _FAMILIES[family](params)
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc.args[0]!r} for {family}") from None
