"""Empirical estimation of switched-ratio suprema and counterexample generators.

Sampling is reproducible: every sampler draws from its own child of
``SeedSequence(seed)``, and each draws row-major arrays, so the first ``n``
pairs of a run with ``n' > n`` samples are identical to those of a run with
``n`` samples.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bd
from .core import UNBOUNDED, TINY, bregman, switched_ratios
from .functionals import (
    Abs,
    CustomScalar,
    Functional,
    HilbertQuadratic,
    HuberStd,
    PPower,
    SqrtSmoothed,
    to_dict,
)

__all__ = [
    "DomainSpec",
    "RatioWitness",
    "SymmetryReport",
    "VERDICTS",
    "theoretical_bounds",
    "sample_sup_ratio",
    "adversarial_refine",
    "counterexample_abs",
    "counterexample_huber",
    "verify_theorem_main3",
]

BOUNDED = "bounded-within-theory"
EXCEEDS = "exceeds-theory"
UNBOUNDED_DETECTED = "unbounded-detected"
INCONCLUSIVE = "inconclusive"
VERDICTS = (BOUNDED, EXCEEDS, UNBOUNDED_DETECTED, INCONCLUSIVE)

DEFAULT_SLACK = 1e-9
DEFAULT_UNBOUNDED_RATIO = 1e6
# ray sampler ranges
_RAY_R = (1e-6, 1e6)
_LOG_DECADES = 12.0


@dataclass(frozen=True)
class DomainSpec:
    """Sampling region for pairs ``(x, y)``.

    ``box``: every coordinate of x and y in ``[center - radius, center + radius]``.
    ``ball``: x in the box, ``||x - y|| <= radius``.
    ``ray``: ``y = e_1`` and ``x = r (theta e_1 + sqrt(1 - theta^2) e_2)`` with
    ``r`` in ``r_range`` and ``theta`` drawn from ``thetas``.
    """

    kind: str = "box"
    dim: int = 1
    radius: float = 1.0
    center: float = 0.0
    r_range: tuple[float, float] = _RAY_R
    thetas: tuple[float, ...] = (-1.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("box", "ball", "ray"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim}")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not math.isfinite(self.center):
            raise ValueError("center must be finite")
        lo, hi = self.r_range
        if not 0.0 < lo < hi < math.inf:
            raise ValueError(f"bad ray range {self.r_range}")
        if not self.thetas or any(not -1.0 <= t <= 1.0 for t in self.thetas):
            raise ValueError(f"ray angles must lie in [-1, 1], got {self.thetas}")
        if self.kind == "ray" and self.dim == 1 and any(abs(t) != 1.0 for t in self.thetas):
            raise ValueError("scalar rays only admit theta in {-1, 1}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "r_range", (float(lo), float(hi)))
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.kind == "ray":
            d.update(r_range=list(self.r_range), thetas=list(self.thetas))
        else:
            d.update(radius=self.radius, center=self.center)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        allowed = {"kind", "dim", "radius", "center", "r_range", "thetas"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown domain fields: {sorted(unknown)}")
        kw = dict(d)
        if "r_range" in kw:
            kw["r_range"] = tuple(kw["r_range"])
        if "thetas" in kw:
            kw["thetas"] = tuple(kw["thetas"])
        return cls(**kw)

    def clip(self, X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Project candidate pairs into the domain; returns ``(X, Y, keep)``."""
        if self.kind == "box":
            lo, hi = self.center - self.radius, self.center + self.radius
            X, Y = np.clip(X, lo, hi), np.clip(Y, lo, hi)
            return X, Y, np.ones(len(X), dtype=bool)
        if self.kind == "ball":
            lo, hi = self.center - self.radius, self.center + self.radius
            X = np.clip(X, lo, hi)
            keep = np.linalg.norm(X - Y, axis=-1) <= self.radius
            return X, Y, keep
        raise ValueError("ray domains are refined in (r, theta), not by clipping")


@dataclass(frozen=True)
class RatioWitness:
    x: tuple[float, ...]
    y: tuple[float, ...]
    d_xy: float
    d_yx: float
    ratio: object  # float or UNBOUNDED

    @property
    def value(self) -> float:
        """Ratio as a float (``inf`` for unbounded), for comparisons."""
        return math.inf if self.ratio is UNBOUNDED else float(self.ratio)

    def to_dict(self) -> dict:
        return {
            "x": list(self.x),
            "y": list(self.y),
            "d_xy": self.d_xy,
            "d_yx": self.d_yx,
            "ratio": "unbounded" if self.ratio is UNBOUNDED else self.ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RatioWitness":
        ratio = UNBOUNDED if d["ratio"] == "unbounded" else float(d["ratio"])
        return cls(tuple(d["x"]), tuple(d["y"]), float(d["d_xy"]), float(d["d_yx"]), ratio)


def _witness(x, y, num, den, ratio) -> RatioWitness:
    r = float(ratio)
    return RatioWitness(
        tuple(float(v) for v in x),
        tuple(float(v) for v in y),
        float(num),
        float(den),
        UNBOUNDED if math.isinf(r) else r,
    )


@dataclass(frozen=True)
class SymmetryReport:
    functional: dict
    domain: dict
    samples: int
    seed: int
    witness: RatioWitness
    bound: float | None
    bounds: dict
    verdict: str
    evaluated: int = 0
    exceed_count: int = 0
    refine_rounds: int = 0
    schema: int = field(default=1)

    @property
    def sup(self) -> float:
        return self.witness.value

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "functional": self.functional,
            "domain": self.domain,
            "samples": self.samples,
            "seed": self.seed,
            "evaluated": self.evaluated,
            "refine_rounds": self.refine_rounds,
            "empirical_sup": self.witness.to_dict(),
            "bound": self.bound,
            "bounds": self.bounds,
            "exceed_count": self.exceed_count,
            "verdict": self.verdict,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SymmetryReport":
        if d.get("schema") != 1:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(
            functional=d["functional"],
            domain=d["domain"],
            samples=int(d["samples"]),
            seed=int(d["seed"]),
            witness=RatioWitness.from_dict(d["empirical_sup"]),
            bound=None if d["bound"] is None else float(d["bound"]),
            bounds=dict(d["bounds"]),
            verdict=d["verdict"],
            evaluated=int(d["evaluated"]),
            exceed_count=int(d["exceed_count"]),
            refine_rounds=int(d["refine_rounds"]),
        )


def theoretical_bounds(f: Functional, dom: DomainSpec) -> tuple[float | None, dict]:
    """Applicable symmetry constant for ``f`` on ``dom`` plus supporting values.

    Returns ``(None, {})`` for families with no finite constant (the abs and
    Huber counterexamples) or where no constant is known for the domain.
    """
    if isinstance(f, HilbertQuadratic):
        return 1.0, {"hilbert": 1.0}
    if isinstance(f, PPower):
        b = bd.bound_bundle(f.p)
        return b.cp, {
            "cp": b.cp,
            "refined_lower": b.refined_lower,
            "refined_upper": b.refined_upper,
            "eta": b.eta,
        }
    if dom.kind != "box" or dom.dim != 1:
        return None, {}
    a, b = dom.center - dom.radius, dom.center + dom.radius
    if isinstance(f, SqrtSmoothed):
        R = max(abs(a), abs(b))
        # sup of sqrt(y^2 + eps) / sqrt(x^2 + eps) over the interval
        m = 0.0 if a <= 0.0 <= b else min(abs(a), abs(b))
        direct = math.sqrt((R * R + f.eps) / (m * m + f.eps))
        lo, hi = bd.second_derivative_range(f, a, b)
        return direct, {
            "direct": direct,
            "direct_upper": bd.sqrt_example_constant(f.eps, R)[1] if m == 0.0 else direct,
            "second_derivative": bd.monotone_lipschitz_constant(lo, hi),
        }
    if isinstance(f, CustomScalar):
        lo, hi = bd.second_derivative_range(f, a, b)
        c = bd.monotone_lipschitz_constant(lo, hi)
        return c, {"c0": lo, "L": hi, "lipschitz_over_monotone": c}
    return None, {}


def _sample_pairs(f: Functional, dom: DomainSpec, n: int, seed: int, probe_scales: bool = False):
    """All candidate pairs for a run, in a fixed order."""
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(6)]
    d, R, c = dom.dim, dom.radius, dom.center
    xs, ys = [], []

    if dom.kind == "ray":
        lo, hi = np.log(dom.r_range[0]), np.log(dom.r_range[1])
        r = np.exp(lo + (hi - lo) * streams[0].random(n))
        th = np.asarray(dom.thetas)[streams[1].integers(len(dom.thetas), size=n)]
        y = np.zeros((n, d))
        y[:, 0] = 1.0
        x = np.zeros((n, d))
        x[:, 0] = r * th
        if d > 1:
            x[:, 1] = r * np.sqrt(np.clip(1.0 - th * th, 0.0, 1.0))
        return x, y

    U = streams[0].random((n, 2, d))
    x = c + R * (2.0 * U[:, 0] - 1.0)
    if dom.kind == "box":
        y = c + R * (2.0 * U[:, 1] - 1.0)
    else:
        g = streams[1].standard_normal((n, d))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        rad = R * streams[2].random(n) ** (1.0 / d)
        y = x + g * rad[:, None]
    xs.append(x)
    ys.append(y)

    if isinstance(f, PPower) and c == 0.0:
        # ray-structured pairs: log-uniform ratios |x_i| / |y_i| with random signs
        V = streams[3].random((n, 5, d))
        lr0, lr1 = np.log(_RAY_R[0]), np.log(_RAY_R[1])
        my = np.exp(np.log(1e-3) * V[:, 0])
        ry = np.exp(lr0 + (lr1 - lr0) * V[:, 1])
        yr = np.where(V[:, 2] < 0.5, -1.0, 1.0) * my
        xr = np.where(V[:, 3] < 0.5, -1.0, 1.0) * my * ry
        if dom.kind == "box":
            scale = R / np.maximum(np.max(np.abs(np.concatenate([xr, yr], axis=1)), axis=1), 1e-300)
        else:
            scale = R / np.maximum(np.linalg.norm(xr - yr, axis=1), 1e-300)
        scale = scale * np.maximum(V[:, 4, 0], 1e-3)
        xs.append(xr * scale[:, None])
        ys.append(yr * scale[:, None])

    if probe_scales:
        # log-magnitude pairs: probe coordinates at many scales near the center
        W = streams[4].random((n, 4, d))
        sx = np.where(W[:, 0] < 0.5, -1.0, 1.0)
        sy = np.where(W[:, 1] < 0.5, -1.0, 1.0)
        xl = c + sx * R * 10.0 ** (-_LOG_DECADES * W[:, 2])
        yl = c + sy * R * 10.0 ** (-_LOG_DECADES * W[:, 3])
        if dom.kind == "ball":
            keep = np.linalg.norm(xl - yl, axis=1) <= R
            xl, yl = xl[keep], yl[keep]
        xs.append(xl)
        ys.append(yl)

    # deterministic anchors: coordinates from {c - R, c - R/2, c, c + R/2, c + R}
    levels = c + R * np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    if d <= 2:
        grid = np.array(np.meshgrid(*[levels] * d, indexing="ij")).reshape(d, -1).T
    else:
        grid = np.repeat(levels[:, None], d, axis=1)
    ia, ib = np.meshgrid(np.arange(len(grid)), np.arange(len(grid)), indexing="ij")
    xa, ya = grid[ia.ravel()], grid[ib.ravel()]
    if dom.kind == "ball":
        keep = np.linalg.norm(xa - ya, axis=1) <= R
        xa, ya = xa[keep], ya[keep]
    xs.append(xa)
    ys.append(ya)
    return np.concatenate(xs), np.concatenate(ys)


def _evaluate(f: Functional, X: np.ndarray, Y: np.ndarray, threads: int):
    if threads <= 1 or len(X) < 2 * threads:
        return switched_ratios(f, X, Y)
    chunks = np.array_split(np.arange(len(X)), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda idx: switched_ratios(f, X[idx], Y[idx]), chunks))
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


def _stencil(d: int) -> np.ndarray:
    """Unit moves of the pair ``(x, y)`` in ``R^(2d)``."""
    if d == 1:
        moves = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
        return np.array(moves, dtype=float).reshape(-1, 2, 1)
    eye = np.eye(2 * d)
    return np.concatenate([eye, -eye]).reshape(-1, 2, d)


def _refine_path(f: Functional, dom: DomainSpec, w: RatioWitness, rounds: int) -> list[RatioWitness]:
    """Greedy local search; returns the witnesses of every accepted improvement."""
    path = []
    if w.ratio is UNBOUNDED or rounds <= 0:
        return path
    x = np.array(w.x, dtype=float)
    y = np.array(w.y, dtype=float)
    best = w.value

    if dom.kind == "ray":
        r = float(np.linalg.norm(x))
        cos = float(x[0] / r) if r > 0 else dom.thetas[0]
        step = 1.0
        lo, hi = np.log(dom.r_range[0]), np.log(dom.r_range[1])
        for _ in range(rounds):
            for _ in range(8):
                cand = np.clip(np.log(max(r, dom.r_range[0])) + step * np.array([-1.0, 1.0]), lo, hi)
                rc = np.exp(cand)
                X = np.zeros((2, dom.dim))
                X[:, 0] = rc * cos
                if dom.dim > 1:
                    X[:, 1] = rc * math.sqrt(max(1.0 - cos * cos, 0.0))
                Y = np.zeros_like(X)
                Y[:, 0] = 1.0
                num, den, q = switched_ratios(f, X, Y)
                k = int(np.argmax(q))
                if not q[k] > best * (1.0 + 1e-12):
                    break
                best, r = float(q[k]), float(rc[k])
                path.append(_witness(X[k], Y[k], num[k], den[k], q[k]))
                if math.isinf(best):
                    return path
            step /= 2.0
        return path

    moves = _stencil(dom.dim)
    step = max(float(np.max(np.abs(x - y))), TINY) / 2.0
    for _ in range(rounds):
        for _ in range(8):
            X = x[None, :] + step * moves[:, 0]
            Y = y[None, :] + step * moves[:, 1]
            X, Y, keep = dom.clip(X, Y)
            if not np.any(keep):
                break
            X, Y = X[keep], Y[keep]
            num, den, q = switched_ratios(f, X, Y)
            k = int(np.argmax(q))
            if not q[k] > best * (1.0 + 1e-12):
                break
            best, x, y = float(q[k]), X[k], Y[k]
            path.append(_witness(x, y, num[k], den[k], q[k]))
            if math.isinf(best):
                return path
        step /= 2.0
    return path


def adversarial_refine(f: Functional, dom: DomainSpec, witness: RatioWitness, rounds: int = 30) -> RatioWitness:
    """Local search around ``witness`` that never lowers its ratio.

    Each round tries greedy moves of ``x`` and ``y`` at the current radius and
    then halves it. Ray domains are searched in ``log r`` with the angle fixed.
    """
    path = _refine_path(f, dom, witness, rounds)
    return path[-1] if path else witness


def _detect_unbounded(candidates: list[RatioWitness], threshold: float) -> tuple[bool, int]:
    """Look for three ratios above ``threshold`` that grow as their denominators shrink.

    Sorting by denominator (descending) turns this into finding a strictly
    increasing triple of ratios; equal denominators are ordered by descending
    ratio so they cannot chain with each other.
    """
    big = [w for w in candidates if w.value > threshold]
    ordered = sorted(big, key=lambda w: (-w.d_yx, -w.value))
    first = second = math.inf
    for w in ordered:
        v = w.value
        if v <= first:
            first = v
        elif v <= second:
            second = v
        else:
            return True, len(big)
    return False, len(big)


def _run(f, dom, n, seed, bound, details, refine_rounds, threads, slack, unbounded_ratio):
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    if f.dim is not None and f.dim != dom.dim:
        raise ValueError(f"dimension mismatch: {f.family} has dim {f.dim}, domain has {dom.dim}")
    if dom.kind == "ray" and not isinstance(f, (PPower, HilbertQuadratic)):
        raise ValueError("ray domains are only meaningful for p-power functionals")
    if refine_rounds is None:
        refine_rounds = 40 if bound is None else 0

    X, Y = _sample_pairs(f, dom, n, seed, probe_scales=bound is None)
    num, den, q = _evaluate(f, X, Y, threads)
    k = int(np.argmax(q))
    best = _witness(X[k], Y[k], num[k], den[k], q[k])

    big = np.flatnonzero(q > unbounded_ratio)
    candidates = [_witness(X[i], Y[i], num[i], den[i], q[i]) for i in big]
    path = _refine_path(f, dom, best, refine_rounds)
    candidates += path
    if path and path[-1].value > best.value:
        best = path[-1]

    detected, count = _detect_unbounded(candidates, unbounded_ratio)
    if bound is not None:
        verdict = EXCEEDS if best.value > bound * (1.0 + slack) else BOUNDED
    else:
        verdict = UNBOUNDED_DETECTED if detected else INCONCLUSIVE

    return SymmetryReport(
        functional=_describe(f),
        domain=dom.to_dict(),
        samples=n,
        seed=seed,
        witness=best,
        bound=bound,
        bounds=details,
        verdict=verdict,
        evaluated=len(X) + len(path),
        exceed_count=int(len(big)) + sum(w.value > unbounded_ratio for w in path),
        refine_rounds=refine_rounds,
    )


def _describe(f: Functional) -> dict:
    try:
        return to_dict(f)
    except ValueError:
        return {"family": f.family, "params": f.params()}


def sample_sup_ratio(
    f: Functional,
    dom: DomainSpec,
    n: int,
    seed: int = 0,
    refine_rounds: int | None = None,
    threads: int = 1,
    slack: float = DEFAULT_SLACK,
    unbounded_ratio: float = DEFAULT_UNBOUNDED_RATIO,
) -> SymmetryReport:
    """Seeded estimate of ``sup D(x, y) / D(y, x)`` over ``dom``.

    Draws ``n`` uniform pairs, ``n`` ray-structured pairs for p-powers, ``n``
    log-magnitude pairs for families without a finite constant, and a small
    anchor grid. The empirical sup is a lower bound for the true constant.
    ``refine_rounds=None`` refines the best witness only for families without
    a finite theoretical constant, so that reports for the others are monotone
    in ``n``.
    """
    bound, details = theoretical_bounds(f, dom)
    return _run(f, dom, n, seed, bound, details, refine_rounds, threads, slack, unbounded_ratio)


def verify_theorem_main3(
    f: Functional,
    interval: tuple[float, float],
    n: int,
    seed: int = 0,
    threads: int = 1,
    slack: float = DEFAULT_SLACK,
) -> SymmetryReport:
    """Check the sampled sup on ``[a, b]`` against ``sup J'' / inf J''``."""
    if not isinstance(f, (CustomScalar, SqrtSmoothed, HilbertQuadratic)):
        raise ValueError(f"needs a twice differentiable scalar functional, got {f.family}")
    a, b = map(float, interval)
    lo, hi = bd.second_derivative_range(f, a, b)
    bound = bd.monotone_lipschitz_constant(lo, hi)
    dom = DomainSpec("box", dim=1, radius=(b - a) / 2.0, center=(a + b) / 2.0)
    details = {"c0": lo, "L": hi, "lipschitz_over_monotone": bound}
    if isinstance(f, SqrtSmoothed):
        details["direct"] = theoretical_bounds(f, dom)[1]["direct"]
    return _run(f, dom, n, seed, bound, details, 0, threads, slack, DEFAULT_UNBOUNDED_RATIO)


def counterexample_abs(x: float, eps: float) -> tuple[float, float, float]:
    """Distances for ``J = |.|`` at the pair ``(x, -eps)``.

    Returns ``(D(x, -eps), D(-eps, x), ratio)``, which equal ``(2x, 2eps, x/eps)``.
    """
    if not (x > 0.0 and eps > 0.0):
        raise ValueError("x and eps must be positive")
    f = Abs()
    d_switch = bregman(f, [x], [-eps]).value
    d_orig = bregman(f, [-eps], [x]).value
    return d_switch, d_orig, d_switch / d_orig


def counterexample_huber(x: float, eps: float) -> tuple[float, float, float]:
    """Distances for the standard Huber function at ``(x, 1 - eps)``, ``x > 1``.

    Returns ``(D(x, y), D(y, x), ratio)``; the closed forms are
    ``eps (x - 1) + eps^2 / 2``, ``eps^2 / 2`` and ``1 + 2 (x - 1) / eps``.
    """
    if not x > 1.0:
        raise ValueError(f"need x > 1, got {x}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"need 0 < eps < 1, got {eps}")
    f = HuberStd()
    y = 1.0 - eps
    d_switch = bregman(f, [x], [y]).value
    d_orig = bregman(f, [y], [x]).value
    return d_switch, d_orig, d_switch / d_orig
