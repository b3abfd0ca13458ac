"""Closed-form symmetry constants and the ray ratio function analysis.

For ``J = (1/p)|x|^p`` and ``1 < p < 2`` the switched ratio on the ray
``(r, theta)`` is ``f/g`` with::

    f(r, theta) = r^p / p + (1 - 1/p) - r theta
    g(r, theta) = 1/p + (1 - 1/p) r^p - r^(p-1) theta

``p >= 2`` is handled through the conjugate exponent ``t = p/(p-1) < 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RayCoordinates
from .functionals import Functional, NotTwiceDifferentiableError

__all__ = [
    "BoundBundle",
    "RatioFunctionParams",
    "theoretical_cp",
    "reduced_exponent",
    "refined_cp_bounds",
    "bound_bundle",
    "fg_value",
    "fg_arrays",
    "fg_ratio",
    "fg_ratio_grid",
    "fg_ratio_sup",
    "eta_from_c",
    "c_from_eta",
    "monotone_lipschitz_constant",
    "second_derivative_range",
    "second_derivative_bound",
    "sqrt_example_constant",
    "localization_constant",
    "zero_anchor_ratio",
]

#: f and g below this are replaced by the continuous extension f/g = 1
EXTENSION_TOL = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _check_p(p: float) -> float:
    p = float(p)
    if not (p > 1.0 and math.isfinite(p)):
        raise ValueError(f"p must be a finite number > 1, got {p}")
    return p


def theoretical_cp(p: float) -> float:
    """``C_p = 2 max(1/(p-1), p-1)``."""
    p = _check_p(p)
    return 2.0 * max(1.0 / (p - 1.0), p - 1.0)


def reduced_exponent(p: float) -> float:
    """``t = p`` on ``(1, 2)``, else the conjugate exponent ``p/(p-1)``."""
    p = _check_p(p)
    return p if p < 2.0 else p / (p - 1.0)


def _golden_max(h, a: float, b: float, iters: int = 100) -> tuple[float, float]:
    """Golden-section search for the max of a unimodal ``h`` on ``[a, b]``."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    hc, hd = h(c), h(d)
    for _ in range(iters):
        if hc >= hd:
            b, d, hd = d, c, hc
            c = b - _GOLDEN * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + _GOLDEN * (b - a)
            hd = h(d)
        if b - a < 1e-14 * (1.0 + abs(a)):
            break
    x = 0.5 * (a + b)
    return x, h(x)


def refined_cp_bounds(p: float, n_grid: int = 4001, log_r_max: float = 12.0) -> tuple[float, float]:
    """Two-sided estimate ``1/(t-1) <= C_p <= max_{r>=1} h(r) / (t-1)``.

    ``h(r) = (r^(t-1) + 1) / (r^(t-1) + r^(t-2))`` is maximized on a log grid
    over ``[1, 10^log_r_max]`` and polished by golden section in ``log r``.
    """
    t = reduced_exponent(p)
    s = t - 1.0
    lower = 1.0 / s

    def h_log(u):
        r = np.exp(u)
        return (r**s + 1.0) / (r**s + r ** (s - 1.0))

    u = np.linspace(0.0, log_r_max * math.log(10.0), n_grid)
    hv = h_log(u)
    i = int(np.argmax(hv))
    lo, hi = u[max(i - 1, 0)], u[min(i + 1, n_grid - 1)]
    _, hbest = _golden_max(lambda v: float(h_log(v)), lo, hi)
    hmax = max(float(hv[i]), hbest, 1.0)
    return lower, lower * hmax


@dataclass(frozen=True)
class BoundBundle:
    cp: float
    refined_lower: float
    refined_upper: float
    eta: float

    def __post_init__(self):
        if not self.refined_lower <= self.refined_upper <= self.cp * (1 + 1e-12):
            raise ValueError(f"inconsistent bounds: {self}")


def bound_bundle(p: float) -> BoundBundle:
    cp = theoretical_cp(p)
    lower, upper = refined_cp_bounds(p)
    return BoundBundle(cp, lower, upper, eta_from_c(cp))


@dataclass(frozen=True)
class RatioFunctionParams:
    p: float
    r: float
    theta: float

    def __post_init__(self):
        if not 1.0 < self.p < 2.0:
            raise ValueError(f"ratio functions need 1 < p < 2, got {self.p}")
        if not self.r >= 0.0:
            raise ValueError(f"r must be >= 0, got {self.r}")
        if not -1.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [-1, 1], got {self.theta}")


def fg_arrays(p: float, r, theta):
    """Broadcasting evaluation of ``(f, g)``; accepts any ``p > 1``."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    rp = r**p
    f = rp / p + (1.0 - 1.0 / p) - r * theta
    g = 1.0 / p + (1.0 - 1.0 / p) * rp - r ** (p - 1.0) * theta
    return f, g


def fg_value(params: RatioFunctionParams) -> tuple[float, float]:
    f, g = fg_arrays(params.p, params.r, params.theta)
    return float(f), float(g)


def fg_ratio_grid(p: float, r, theta) -> np.ndarray:
    """``f/g`` with the value 1 filled in where both vanish (``r = 1, theta = 1``)."""
    f, g = fg_arrays(p, r, theta)
    both = (np.abs(f) < EXTENSION_TOL) & (np.abs(g) < EXTENSION_TOL)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = f / np.where(both, 1.0, g)
    return np.where(both, 1.0, q)


def fg_ratio(params: RatioFunctionParams) -> float:
    return float(fg_ratio_grid(params.p, params.r, params.theta))


def fg_ratio_sup(
    p: float,
    n_r: int = 1000,
    n_theta: int = 21,
    r_min: float = 1e-6,
    r_max: float = 1e6,
    refine: int = 201,
) -> tuple[float, RayCoordinates]:
    """Grid maximum of ``f/g`` over ``r in [0, r_max]``, ``theta in [-1, 1]``.

    The grid is ``{0}`` plus ``n_r`` log-spaced radii and ``n_theta`` equally
    spaced angles (endpoints included). The best cell is refined on a local
    ``refine x refine`` grid and polished by golden section in ``log r``. The
    ``r -> inf`` limit ``1/(p-1)`` competes as a candidate with ``r = inf``.
    Ties go to the smaller ``r``, then the smaller ``theta``.
    """
    if not 1.0 < p < 2.0:
        raise ValueError(f"ratio functions need 1 < p < 2, got {p}")
    if n_r < 2 or n_theta < 2 or not 0.0 < r_min < r_max:
        raise ValueError("malformed grid")
    r = np.concatenate(([0.0], np.logspace(math.log10(r_min), math.log10(r_max), n_r)))
    th = np.linspace(-1.0, 1.0, n_theta)
    q = fg_ratio_grid(p, r[:, None], th[None, :])
    i, j = np.unravel_index(int(np.argmax(q)), q.shape)
    best, best_r, best_th = float(q[i, j]), float(r[i]), float(th[j])

    if refine >= 2 and i > 0:
        lo = math.log(r[max(i - 1, 1)])
        hi = math.log(r[min(i + 1, len(r) - 1)])
        rl = np.exp(np.linspace(lo, hi, refine))
        tl = np.linspace(th[max(j - 1, 0)], th[min(j + 1, n_theta - 1)], refine)
        ql = fg_ratio_grid(p, rl[:, None], tl[None, :])
        a, b = np.unravel_index(int(np.argmax(ql)), ql.shape)
        if ql[a, b] > best:
            best, best_r, best_th = float(ql[a, b]), float(rl[a]), float(tl[b])
        # polish along r at the chosen angle
        la = math.log(rl[max(a - 1, 0)])
        lb = math.log(rl[min(a + 1, refine - 1)])
        if lb > la:
            u, val = _golden_max(lambda v: float(fg_ratio_grid(p, math.exp(v), best_th)), la, lb)
            if val > best:
                best, best_r = val, math.exp(u)

    tail = 1.0 / (p - 1.0)
    if tail > best:
        return tail, RayCoordinates(math.inf, best_th)
    return best, RayCoordinates(best_r, best_th)


def eta_from_c(c: float) -> float:
    """``eta = C / (C + 1)``."""
    c = float(c)
    if not (c > 0.0 and math.isfinite(c)):
        raise ValueError(f"C must be positive and finite, got {c}")
    return c / (c + 1.0)


def c_from_eta(eta: float) -> float:
    """``C = eta / (1 - eta)``."""
    eta = float(eta)
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    return eta / (1.0 - eta)


def monotone_lipschitz_constant(c0: float, L: float) -> float:
    """Symmetry constant ``L / c0`` for a strongly monotone, Lipschitz gradient."""
    if not c0 > 0.0:
        raise ValueError(f"monotonicity modulus must be positive, got {c0}")
    if not L >= c0:
        raise ValueError(f"Lipschitz constant {L} is below the monotonicity modulus {c0}")
    return L / c0


def second_derivative_range(f: Functional, a: float, b: float, n: int = 1001) -> tuple[float, float]:
    """Grid ``(inf J'', sup J'')`` on ``[a, b]``; raises unless ``J'' > 0`` throughout."""
    if not b > a:
        raise ValueError(f"need b > a, got [{a}, {b}]")
    if n < 100:
        raise ValueError(f"need at least 100 grid points, got {n}")
    xs = np.linspace(a, b, n)
    try:
        d2 = np.array([f.second(float(x)) for x in xs])
    except NotTwiceDifferentiableError as exc:
        raise ValueError(f"second derivative unavailable on [{a}, {b}]: {exc}") from None
    if not np.all(d2 > 0.0):
        x_bad = xs[int(np.argmin(d2))]
        raise ValueError(f"J'' <= 0 at x = {x_bad:g}: functional is not strongly convex here")
    return float(d2.min()), float(d2.max())


def second_derivative_bound(f: Functional, a: float, b: float, n: int = 1001) -> float:
    """Grid estimate of ``sup J'' / inf J''`` on ``[a, b]``."""
    lo, hi = second_derivative_range(f, a, b, n)
    return hi / lo


def sqrt_example_constant(eps: float, R: float) -> tuple[float, float]:
    """For ``sqrt(x^2 + eps)`` on ``|x| <= R``: exact ``sqrt(1 + R^2/eps)`` and ``1 + R/sqrt(eps)``."""
    if not (eps > 0.0 and R > 0.0):
        raise ValueError("eps and R must be positive")
    return math.sqrt(1.0 + R * R / eps), 1.0 + R / math.sqrt(eps)


def localization_constant(eps: float, R: float, c_m0: float) -> float:
    """Constant on ``{||x - y|| <= R}`` from one on ``{||x - y|| <= eps}``."""
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not R > eps:
        raise ValueError(f"need R > eps, got R={R}, eps={eps}")
    if not c_m0 > 0.0:
        raise ValueError(f"local constant must be positive, got {c_m0}")
    return (R - eps) / eps + R * c_m0 / eps


def zero_anchor_ratio(p: float) -> float:
    """``D(x, 0) / D(0, x) = 1/(p-1)`` for ``(1/p)|x|^p`` and any ``x != 0``."""
    p = _check_p(p)
    return 1.0 / (p - 1.0)
