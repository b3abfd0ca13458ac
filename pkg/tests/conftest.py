import mpmath
import numpy as np
import pytest

from bregsym.functionals import (
    Abs,
    HilbertQuadratic,
    HuberStd,
    PPower,
    SqrtSmoothed,
    quartic_example,
)

# functional, dimension, sampling radius
CONVEX_FAMILIES = [
    (PPower(1.2), 1, 10.0),
    (PPower(1.5), 3, 10.0),
    (PPower(3.0), 2, 5.0),
    (PPower(1.5, (0.5, 2.0, 1.0)), 3, 10.0),
    (HilbertQuadratic(), 4, 10.0),
    (Abs(), 1, 10.0),
    (HuberStd(), 1, 5.0),
    (SqrtSmoothed(0.01), 1, 10.0),
    (quartic_example(), 1, 3.0),
]


def family_id(case):
    f = case[0]
    return f"{f.family}-{getattr(f, 'p', '')}-{getattr(f, 'weights', '') and 'w'}-d{case[1]}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def mp_value(f, x):
    """High precision value of a catalog functional (independent oracle)."""
    x = [mpmath.mpf(float(v)) for v in np.atleast_1d(x)]
    fam = f.family
    if fam == "ppower":
        w = f.weights or (1,) * len(x)
        p = mpmath.mpf(f.p)
        return sum(mpmath.mpf(wi) * abs(t) ** p for wi, t in zip(w, x)) / p
    if fam == "hilbert":
        return sum(t * t for t in x) / 2
    if fam == "abs":
        return abs(x[0])
    if fam == "huber":
        t = x[0]
        return t * t / 2 if abs(t) < 1 else abs(t) - mpmath.mpf(1) / 2
    if fam == "sqrt":
        return mpmath.sqrt(x[0] ** 2 + mpmath.mpf(f.eps))
    if fam == "custom":
        t = x[0]
        return t**4 / 12 + t**2 / 2
    raise AssertionError(fam)


def mp_gradient(f, x, s=0.0):
    x = [mpmath.mpf(float(v)) for v in np.atleast_1d(x)]
    fam = f.family
    if fam == "ppower":
        w = f.weights or (1,) * len(x)
        p = mpmath.mpf(f.p)
        return [mpmath.mpf(wi) * mpmath.sign(t) * abs(t) ** (p - 1) for wi, t in zip(w, x)]
    if fam == "hilbert":
        return list(x)
    if fam == "abs":
        return [mpmath.mpf(s) if x[0] == 0 else mpmath.sign(x[0])]
    if fam == "huber":
        return [max(-1, min(1, x[0]))]
    if fam == "sqrt":
        return [x[0] / mpmath.sqrt(x[0] ** 2 + mpmath.mpf(f.eps))]
    if fam == "custom":
        return [x[0] ** 3 / 3 + x[0]]
    raise AssertionError(fam)


def mp_bregman(f, x, y, s=0.0):
    """``J(x) - J(y) - <xi_y, x - y>`` evaluated with 50 significant digits."""
    with mpmath.workdps(50):
        xi = mp_gradient(f, y, s)
        xs = [mpmath.mpf(float(v)) for v in np.atleast_1d(x)]
        ys = [mpmath.mpf(float(v)) for v in np.atleast_1d(y)]
        return mp_value(f, x) - mp_value(f, y) - sum(a * (b - c) for a, b, c in zip(xi, xs, ys))


# -- acceptance summary -------------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marks = getattr(report, "criterion", None)
    if marks is None:
        return
    number, title = marks
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": 0, "failed": []})
    if report.passed:
        entry["passed"] += 1
    else:
        entry["failed"].append(report.nodeid.split("::")[-1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "FAIL" if e["failed"] else "PASS"
        line = f"[{status}] criterion {number}: {e['title']} ({e['passed']} passed, {len(e['failed'])} failed)"
        if e["failed"]:
            line += " failing: " + ", ".join(e["failed"])
        terminalreporter.write_line(line)
