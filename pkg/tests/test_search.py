import json
import math

import numpy as np
import pytest

from bregsym.bounds import fg_ratio_sup, theoretical_cp
from bregsym.core import UNBOUNDED, bregman
from bregsym.functionals import (
    Abs,
    CustomScalar,
    HilbertQuadratic,
    HuberStd,
    PPower,
    SqrtSmoothed,
    quartic_example,
)
from bregsym.search import (
    BOUNDED,
    INCONCLUSIVE,
    UNBOUNDED_DETECTED,
    DomainSpec,
    RatioWitness,
    SymmetryReport,
    adversarial_refine,
    counterexample_abs,
    counterexample_huber,
    sample_sup_ratio,
    theoretical_bounds,
    verify_theorem_main3,
)

from .conftest import mp_bregman


def witness_for(f, x, y):
    num = bregman(f, x, y).value
    den = bregman(f, y, x).value
    return RatioWitness(tuple(x), tuple(y), num, den, num / den)


# -- sample_sup_ratio ---------------------------------------------------------


def test_hilbert_sup_is_one():
    rep = sample_sup_ratio(HilbertQuadratic(), DomainSpec("box", dim=3, radius=10.0), 10_000, seed=7)
    assert rep.sup == pytest.approx(1.0, abs=1e-9)
    assert rep.verdict == BOUNDED
    assert rep.bound == 1.0


def test_ppower_sup_in_bracket():
    f = PPower(1.5)
    rep = sample_sup_ratio(f, DomainSpec("box", radius=100.0), 100_000, seed=42)
    oracle, _ = fg_ratio_sup(1.5)
    assert 2.0 - 0.05 <= rep.sup <= 4.0
    assert rep.sup <= oracle * (1 + 1e-9)
    assert rep.verdict == BOUNDED
    assert rep.bounds["refined_upper"] == pytest.approx(1 + math.sqrt(2))


def test_abs_unbounded_detected():
    rep = sample_sup_ratio(Abs(), DomainSpec("box", radius=1.0), 100_000, seed=1)
    assert rep.verdict == UNBOUNDED_DETECTED or rep.sup > 100
    assert rep.verdict == UNBOUNDED_DETECTED
    assert rep.bound is None


def test_huber_unbounded_on_large_box():
    rep = sample_sup_ratio(HuberStd(), DomainSpec("box", radius=10.0), 20_000, seed=3)
    assert rep.verdict == UNBOUNDED_DETECTED


def test_huber_inside_quadratic_region_is_inconclusive():
    # on |x| <= 1 Huber is x^2 / 2, so no divergence can be found
    rep = sample_sup_ratio(HuberStd(), DomainSpec("box", radius=1.0), 5_000, seed=3)
    assert rep.verdict == INCONCLUSIVE
    assert rep.sup == pytest.approx(1.0, abs=1e-9)


def test_deterministic():
    f, dom = PPower(1.3), DomainSpec("box", radius=50.0)
    a = sample_sup_ratio(f, dom, 20_000, seed=11)
    b = sample_sup_ratio(f, dom, 20_000, seed=11)
    assert a == b
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert sample_sup_ratio(f, dom, 20_000, seed=12).witness != a.witness


@pytest.mark.parametrize("f, dom", [
    (PPower(1.5), DomainSpec("box", radius=10.0)),
    (PPower(3.0, (1.0, 2.0)), DomainSpec("ball", dim=2, radius=3.0)),
    (Abs(), DomainSpec("box", radius=1.0)),
])
def test_threads_match_serial(f, dom):
    a = sample_sup_ratio(f, dom, 30_000, seed=5, threads=1)
    b = sample_sup_ratio(f, dom, 30_000, seed=5, threads=4)
    assert a == b


SOUND_CASES = [
    (PPower(1.1), DomainSpec("box", radius=100.0)),
    (PPower(1.5), DomainSpec("box", dim=3, radius=5.0)),
    (PPower(2.5), DomainSpec("ball", dim=2, radius=4.0)),
    (PPower(5.0), DomainSpec("box", radius=100.0)),
    (PPower(1.5, (0.5, 3.0)), DomainSpec("box", dim=2, radius=10.0)),
    (HilbertQuadratic(), DomainSpec("ball", dim=10, radius=2.0)),
    (SqrtSmoothed(0.01), DomainSpec("box", radius=1.0)),
    (SqrtSmoothed(1.0), DomainSpec("box", radius=5.0, center=2.0)),
    (quartic_example(), DomainSpec("box", radius=1.0)),
    (quartic_example(), DomainSpec("box", radius=3.0, center=-1.0)),
]


@pytest.mark.parametrize("f, dom", SOUND_CASES, ids=lambda v: getattr(v, "family", None) or v.kind)
def test_soundness(f, dom):
    rep = sample_sup_ratio(f, dom, 20_000, seed=0)
    assert rep.bound is not None
    assert rep.sup <= rep.bound * (1 + 1e-9)
    assert rep.verdict == BOUNDED


def test_soundness_with_refinement():
    # refinement must not push past the cap either
    for p in (1.2, 1.5, 3.0):
        rep = sample_sup_ratio(PPower(p), DomainSpec("box", radius=100.0), 5_000, seed=2, refine_rounds=30)
        assert rep.sup <= theoretical_cp(p) * (1 + 1e-9)


@pytest.mark.parametrize("f", [PPower(1.5), PPower(3.0), SqrtSmoothed(0.1), quartic_example(), Abs()])
def test_monotone_in_sample_count(f):
    dom = DomainSpec("box", radius=2.0)
    sups = [sample_sup_ratio(f, dom, n, seed=9, refine_rounds=0).sup for n in (10, 100, 1000, 10_000)]
    assert all(b >= a for a, b in zip(sups, sups[1:]))


def test_sqrt_sup_monotone_in_radius():
    # the true constant sqrt(1 + R^2 / eps) grows with R, and so must the estimate
    sups = [
        sample_sup_ratio(SqrtSmoothed(0.01), DomainSpec("box", radius=R), 20_000, seed=4, refine_rounds=0).sup
        for R in (0.1, 0.5, 1.0, 2.0)
    ]
    assert all(b >= a for a, b in zip(sups, sups[1:]))


def test_ray_domain():
    dom = DomainSpec("ray", dim=2, r_range=(1e-3, 1e3), thetas=(-1.0, 0.0, 1.0))
    rep = sample_sup_ratio(PPower(1.5), dom, 10_000, seed=0)
    oracle, _ = fg_ratio_sup(1.5, r_min=1e-3, r_max=1e3)
    assert rep.sup <= oracle * (1 + 1e-9)
    assert rep.sup >= 0.95 * oracle


def test_ray_domain_rejects_other_families():
    with pytest.raises(ValueError, match="ray"):
        sample_sup_ratio(Abs(), DomainSpec("ray", dim=1), 10)


def test_errors():
    with pytest.raises(ValueError, match="dimension"):
        sample_sup_ratio(Abs(), DomainSpec("box", dim=2), 10)
    with pytest.raises(ValueError, match="dimension"):
        sample_sup_ratio(PPower(1.5, (1.0, 1.0)), DomainSpec("box", dim=3), 10)
    with pytest.raises(ValueError):
        sample_sup_ratio(PPower(1.5), DomainSpec(), 0)


@pytest.mark.parametrize("kwargs", [
    {"kind": "sphere"},
    {"dim": 0},
    {"radius": 0.0},
    {"radius": -1.0},
    {"center": math.inf},
    {"kind": "ray", "r_range": (0.0, 1.0)},
    {"kind": "ray", "r_range": (2.0, 1.0)},
    {"kind": "ray", "thetas": (1.5,)},
    {"kind": "ray", "thetas": ()},
])
def test_domain_validation(kwargs):
    with pytest.raises(ValueError):
        DomainSpec(**kwargs)


def test_domain_round_trip():
    for dom in (DomainSpec(), DomainSpec("ball", 3, 2.5, 1.0), DomainSpec("ray", 2, r_range=(1e-2, 1e2))):
        assert DomainSpec.from_dict(dom.to_dict()) == dom
    with pytest.raises(ValueError):
        DomainSpec.from_dict({"kind": "box", "colour": 1})


def test_theoretical_bounds_per_family():
    assert theoretical_bounds(HilbertQuadratic(), DomainSpec())[0] == 1.0
    assert theoretical_bounds(PPower(1.5), DomainSpec())[0] == 4.0
    c, d = theoretical_bounds(SqrtSmoothed(0.01), DomainSpec(radius=1.0))
    assert c == pytest.approx(math.sqrt(101))
    assert d["second_derivative"] == pytest.approx(101**1.5, rel=1e-12)
    assert theoretical_bounds(quartic_example(), DomainSpec(radius=1.0))[0] == pytest.approx(2.0)
    assert theoretical_bounds(Abs(), DomainSpec()) == (None, {})
    assert theoretical_bounds(SqrtSmoothed(0.01), DomainSpec("ball"))[0] is None


# -- report -------------------------------------------------------------------


@pytest.mark.parametrize("f, dom", [
    (PPower(1.5), DomainSpec("box", radius=100.0)),
    (Abs(), DomainSpec("box", radius=1.0)),
    (quartic_example(), DomainSpec()),
])
def test_report_json_round_trip(f, dom):
    rep = sample_sup_ratio(f, dom, 2_000, seed=3)
    text = json.dumps(rep.to_dict())
    back = SymmetryReport.from_dict(json.loads(text))
    assert back == rep
    assert json.loads(text)["schema"] == 1


def test_report_rejects_other_schema():
    d = sample_sup_ratio(PPower(2.0), DomainSpec(), 10).to_dict()
    d["schema"] = 2
    with pytest.raises(ValueError, match="schema"):
        SymmetryReport.from_dict(d)


def test_witness_unbounded_serializes():
    w = RatioWitness((1.0,), (0.0,), 1.0, 0.0, UNBOUNDED)
    d = w.to_dict()
    assert d["ratio"] == "unbounded"
    assert RatioWitness.from_dict(d) == w
    assert math.isinf(w.value)


def test_witness_consistent_with_distances():
    rep = sample_sup_ratio(PPower(1.5), DomainSpec(radius=10.0), 5_000, seed=8)
    w = rep.witness
    assert w.ratio == pytest.approx(w.d_xy / w.d_yx, rel=1e-15)
    assert bregman(PPower(1.5), w.x, w.y).value == w.d_xy


# -- adversarial_refine -------------------------------------------------------


def test_refine_hilbert_unchanged():
    f = HilbertQuadratic()
    w = witness_for(f, [1.0, 2.0], [0.5, -1.0])
    out = adversarial_refine(f, DomainSpec(dim=2, radius=3.0), w, rounds=10)
    assert out.value == pytest.approx(1.0, abs=1e-12)


def test_refine_ppower_increases_toward_sup():
    f = PPower(1.5)
    dom = DomainSpec(radius=100.0)
    w = witness_for(f, [-50.0], [2.0])
    out = adversarial_refine(f, dom, w, rounds=40)
    oracle, arg = fg_ratio_sup(1.5)
    assert out.value > w.value
    assert out.value <= oracle * (1 + 1e-9)
    assert out.value >= 2.0


def test_refine_abs_strictly_increases():
    f = Abs()
    w = witness_for(f, [1.0], [-0.01])
    out = adversarial_refine(f, DomainSpec(radius=1.0), w, rounds=20)
    assert out.value > w.value
    assert abs(out.y[0]) < 0.01


def test_refine_never_decreases(rng):
    f = SqrtSmoothed(0.1)
    dom = DomainSpec(radius=2.0)
    for x, y in rng.uniform(-2, 2, size=(20, 2, 1)):
        w = witness_for(f, x, y)
        assert adversarial_refine(f, dom, w, rounds=5).value >= w.value
        assert adversarial_refine(f, dom, w, rounds=0) == w


# -- counterexamples ----------------------------------------------------------


@pytest.mark.parametrize("x, eps, expected", [
    (1.0, 0.01, (2.0, 0.02, 100.0)),
    (1.0, 1.0, (2.0, 2.0, 1.0)),
    (5.0, 1e-6, (10.0, 2e-6, 5e6)),
])
def test_counterexample_abs(x, eps, expected):
    got = counterexample_abs(x, eps)
    for g, e in zip(got, expected):
        assert g == pytest.approx(e, rel=1e-12)


def test_counterexample_abs_matches_oracle():
    for x, eps in ((1.0, 0.3), (2.5, 1e-4)):
        d_switch, d_orig, _ = counterexample_abs(x, eps)
        assert d_switch == pytest.approx(float(mp_bregman(Abs(), [x], [-eps])), rel=1e-12)
        assert d_orig == pytest.approx(float(mp_bregman(Abs(), [-eps], [x])), rel=1e-12)


@pytest.mark.parametrize("x, eps, ratio", [(2.0, 0.1, 21.0), (2.0, 0.01, 201.0), (3.0, 0.5, 9.0)])
def test_counterexample_huber(x, eps, ratio):
    d_switch, d_orig, q = counterexample_huber(x, eps)
    assert q == pytest.approx(ratio, rel=1e-10)
    assert d_switch == pytest.approx(eps * (x - 1) + eps**2 / 2, rel=1e-10)
    assert d_orig == pytest.approx(eps**2 / 2, rel=1e-10)
    assert d_switch == pytest.approx(float(mp_bregman(HuberStd(), [x], [1 - eps])), rel=1e-10)
    assert d_orig == pytest.approx(float(mp_bregman(HuberStd(), [1 - eps], [x])), rel=1e-10)


def test_counterexample_huber_eps_to_one():
    qs = [counterexample_huber(2.0, e)[2] for e in (0.9, 0.99, 0.999999)]
    assert all(b < a for a, b in zip(qs, qs[1:]))
    assert qs[-1] == pytest.approx(3.0, rel=1e-5)


@pytest.mark.parametrize("args", [(0.0, 0.1), (1.0, 0.0), (-1.0, 1.0)])
def test_counterexample_abs_errors(args):
    with pytest.raises(ValueError):
        counterexample_abs(*args)


@pytest.mark.parametrize("args", [(1.0, 0.1), (2.0, 0.0), (2.0, 1.0)])
def test_counterexample_huber_errors(args):
    with pytest.raises(ValueError):
        counterexample_huber(*args)


# -- L / c0 check -------------------------------------------------------------


def test_verify_main3_hilbert():
    rep = verify_theorem_main3(HilbertQuadratic(), (-1.0, 1.0), 5_000)
    assert rep.bound == 1.0
    assert rep.sup == pytest.approx(1.0, abs=1e-9)
    assert rep.verdict == BOUNDED


def test_verify_main3_quartic():
    rep = verify_theorem_main3(quartic_example(), (-1.0, 1.0), 20_000, seed=1)
    assert rep.bound == pytest.approx(2.0, rel=1e-12)
    assert rep.sup <= 2.0
    assert rep.verdict == BOUNDED
    # brute-force pair grid gives the same picture
    t = np.linspace(-1, 1, 201)
    X, Y = np.meshgrid(t, t)
    f = quartic_example()
    num = f.value(X[..., None]) - f.value(Y[..., None]) - f.d1(Y) * (X - Y)
    den = f.value(Y[..., None]) - f.value(X[..., None]) - f.d1(X) * (Y - X)
    ok = den > 1e-12
    assert np.max(num[ok] / den[ok]) <= 2.0


def test_verify_main3_sqrt():
    rep = verify_theorem_main3(SqrtSmoothed(0.01), (-1.0, 1.0), 20_000, seed=1)
    assert rep.sup <= math.sqrt(101) * (1 + 1e-9)
    assert rep.sup <= 101**1.5
    assert rep.bounds["direct"] == pytest.approx(math.sqrt(101))
    assert rep.verdict == BOUNDED


def test_verify_main3_rejects_non_convex():
    concave = CustomScalar(fn=lambda x: -(x**2), d1=lambda x: -2 * x, d2=lambda x: -2.0 + 0 * x, name="c")
    with pytest.raises(ValueError):
        verify_theorem_main3(concave, (-1.0, 1.0), 10)
    with pytest.raises(ValueError):
        verify_theorem_main3(Abs(), (-1.0, 1.0), 10)
