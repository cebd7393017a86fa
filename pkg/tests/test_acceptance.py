"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from asplund.convolution import minkowski_combine, sup_convolution, sup_convolution_bruteforce
from asplund.generators import (
    FamilySpec,
    gen_convex_body,
    gen_log_concave,
    gen_p_concave,
    gen_random_mask,
    make_common_projection_boxes,
    make_equal_max_section_pair,
    make_equal_projection_integral_pair,
    make_equal_projection_pair,
    make_equal_projection_volume_pair,
)
from asplund.gridfn import Grid, GridFn, GridSet, integrate
from asplund.means import dual_exponent, mp_mean
from asplund.transform import project, steiner_fn
from asplund.verify import (
    HOLDS,
    HOLDS_WITHIN_TOL,
    check_bbl,
    check_linear_refinement,
    check_pl,
    check_symmetrization_props,
    lambda_scan,
)

OK = (HOLDS, HOLDS_WITHIN_TOL)
LAMBDAS = ["1/4", "1/2", "3/4"]
INF = math.inf
LOG_CONCAVE = ("gaussian-like", "max-affine-exponential")


def _rng(label: int) -> np.random.Generator:
    return np.random.default_rng([20261017, label])


def _seed(rng) -> int:
    return int(rng.integers(2**63))


def _assert_ok(report, context):
    assert report.verdict in OK and report.margin >= -report.tol, (context, report)


def _random_box(rng, grid: Grid) -> tuple[GridSet, float]:
    """A lattice box inside ``grid`` and its exact volume."""
    mask = np.ones((), dtype=bool)
    volume = Fraction(1)
    for axis in range(grid.ndim):
        n = grid.shape[axis]
        a = int(rng.integers(0, n))
        b = int(rng.integers(a + 1, n + 1))
        line = np.zeros(n, dtype=bool)
        line[a:b] = True
        mask = np.multiply.outer(mask, line)
        volume *= (b - a) * grid.step[axis]
    return GridSet(grid, mask), volume


@pytest.mark.criterion(1, "indicator exactness")
def test_criterion_01_indicator_exactness():
    rng = _rng(1)
    start = time.perf_counter()
    grids = [Grid.cube(4, 256, 1), Grid((-2, 0), (2, 4), (64, 64))]
    for trial in range(100):
        grid = grids[trial % 2]
        lam = Fraction(LAMBDAS[trial % 3])
        (a, va), (b, vb) = _random_box(rng, grid), _random_box(rng, grid)
        # widths combine linearly for boxes
        sides_a = [int(a.mask.any(axis=tuple(j for j in range(grid.ndim) if j != i)).sum())
                   for i in range(grid.ndim)]
        sides_b = [int(b.mask.any(axis=tuple(j for j in range(grid.ndim) if j != i)).sum())
                   for i in range(grid.ndim)]
        expected = math.prod(
            float(((1 - lam) * sa + lam * sb) * h)
            for sa, sb, h in zip(sides_a, sides_b, grid.step))
        assert float(va) == pytest.approx(math.prod(s * float(h) for s, h in zip(sides_a, grid.step)))
        r = sup_convolution(a.indicator(), b.indicator(), lam, 0)
        assert r == minkowski_combine(a, b, lam).indicator()
        assert integrate(r) == pytest.approx(expected, rel=1e-9, abs=0)
    assert time.perf_counter() - start < 5.0


@pytest.mark.criterion(2, "Prekopa-Leindler holds; margins shrink with h")
def test_criterion_02_pl():
    rng = _rng(2)
    start = time.perf_counter()
    for trial in range(200):
        n = 1 + trial % 2
        N = 512 if n == 1 else 64
        lam = LAMBDAS[trial % 3]
        f = gen_log_concave(FamilySpec(LOG_CONCAVE[trial % 2], _seed(rng), n, N))
        g = gen_log_concave(FamilySpec(LOG_CONCAVE[(trial // 2) % 2], _seed(rng), n, N))
        _assert_ok(check_pl(f, g, lam), trial)
    # equality cases: the margin is pure discretisation error
    for case in range(10):
        n = 1 + case % 2
        N = 512 if n == 1 else 64
        spec = FamilySpec(LOG_CONCAVE[case % 2], _seed(rng), n, N)
        lam = LAMBDAS[case % 3]
        coarse = check_pl(gen_log_concave(spec), gen_log_concave(spec), lam)
        fine_f = gen_log_concave(spec.with_(N=2 * N))
        fine = check_pl(fine_f, fine_f, lam)
        assert coarse.margin > 0
        assert abs(coarse.margin) >= 1.5 * abs(fine.margin), (case, coarse, fine)
    assert time.perf_counter() - start < 60.0


@pytest.mark.criterion(3, "linear refinement under a common projection")
def test_criterion_03_common_projection():
    rng = _rng(3)
    start = time.perf_counter()
    strict = 0
    for trial in range(100):
        f = gen_log_concave(FamilySpec(LOG_CONCAVE[trial % 2], _seed(rng), 2, 64))
        axis = trial % 2
        f, g = make_equal_projection_pair(f, axis, _seed(rng), preserve_logconcave=True)
        lam = LAMBDAS[trial % 3]
        lin = check_linear_refinement(f, g, lam, 0, "common_projection", axis)
        pl = check_pl(f, g, lam)
        _assert_ok(lin, trial)
        assert lin.lhs == pl.lhs
        a, b = integrate(f), integrate(g)
        # AM >= GM exactly; in floats the gap is below rounding when a ~ b
        assert lin.rhs >= pl.rhs * (1 - 1e-15)
        if abs(a - b) > 1e-6 * max(a, b):
            assert lin.rhs > pl.rhs, (trial, a, b)
            strict += 1
    assert strict > 0
    assert time.perf_counter() - start < 60.0


@pytest.mark.criterion(4, "equal projection integrals")
def test_criterion_04_equal_projection_integral():
    rng = _rng(4)
    for trial in range(100):
        s1 = _seed(rng)
        s2 = s1 + 1 + int(rng.integers(2**20))
        f = gen_log_concave(FamilySpec(LOG_CONCAVE[trial % 2], s1, 2, 64))
        g = gen_log_concave(FamilySpec(LOG_CONCAVE[(trial // 2) % 2], s2, 2, 64))
        axis = trial % 2
        f, g = make_equal_projection_integral_pair(f, g, axis)
        r = check_linear_refinement(f, g, LAMBDAS[trial % 3], 0, "equal_projection_integral", axis)
        _assert_ok(r, trial)


@pytest.mark.criterion(5, "equal maximal sections and equal 1-D sups")
def test_criterion_05_sections_and_sups():
    rng = _rng(5)
    for trial in range(50):
        f = gen_log_concave(FamilySpec(LOG_CONCAVE[trial % 2], _seed(rng), 2, 64))
        g = gen_log_concave(FamilySpec(LOG_CONCAVE[(trial // 2) % 2], _seed(rng), 2, 64))
        axis = trial % 2
        f, g = make_equal_max_section_pair(f, g, axis)
        _assert_ok(check_linear_refinement(f, g, LAMBDAS[trial % 3], 0, "equal_max_section", axis),
                   trial)
    for trial in range(50):
        f = gen_log_concave(FamilySpec(LOG_CONCAVE[trial % 2], _seed(rng), 1, 512))
        g = gen_log_concave(FamilySpec(LOG_CONCAVE[(trial // 2) % 2], _seed(rng), 1, 512))
        f, g = make_equal_projection_integral_pair(f, g, 0)
        assert max(f.samples) == pytest.approx(max(g.samples), rel=1e-12)
        _assert_ok(check_linear_refinement(f, g, LAMBDAS[trial % 3], 0, "equal_sup_1d"), trial)


def _p_concave(p, seed, n, N):
    if p == 0:
        return gen_log_concave(FamilySpec(LOG_CONCAVE[seed % 2], seed, n, N))
    return gen_p_concave(FamilySpec("p-power-cap", seed, n, N, p=p))


@pytest.mark.criterion(6, "Borell-Brascamp-Lieb family and its linear refinements")
def test_criterion_06_bbl():
    rng = _rng(6)
    for p in (-0.5, -0.25, 0.0, 1.0, INF):
        for trial in range(50):
            n = 2 if p == -0.5 else 1 + trial % 2
            N = 32 if n == 2 else 256
            f = _p_concave(p, _seed(rng), n, N)
            g = _p_concave(p, _seed(rng), n, N)
            r = check_bbl(f, g, LAMBDAS[trial % 3], p)
            _assert_ok(r, (p, trial))
            if p == -1 / n:
                a, b = integrate(f), integrate(g)
                assert r.rhs == pytest.approx(min(a, b), rel=1e-12)
                assert dual_exponent(p, n) == -INF
    # refinements under each hypothesis; the integral and section versions
    # are only established for -1/n <= p <= 0
    for p in (-0.5, -0.25, 0.0, 1.0, INF):
        for trial in range(10):
            lam = LAMBDAS[trial % 3]
            axis = trial % 2
            base = _p_concave(p, _seed(rng), 2, 32)
            f, g = make_equal_projection_pair(base, axis, _seed(rng), preserve_logconcave=True)
            _assert_ok(check_linear_refinement(f, g, lam, p, "common_projection", axis), (p, trial))
            if p > 0:
                continue
            f, g = make_equal_projection_integral_pair(
                _p_concave(p, _seed(rng), 2, 32), _p_concave(p, _seed(rng), 2, 32), axis)
            _assert_ok(check_linear_refinement(f, g, lam, p, "equal_projection_integral", axis),
                       (p, trial))
            f, g = make_equal_max_section_pair(
                _p_concave(p, _seed(rng), 2, 32), _p_concave(p, _seed(rng), 2, 32), axis)
            _assert_ok(check_linear_refinement(f, g, lam, p, "equal_max_section", axis), (p, trial))
            f, g = make_equal_projection_integral_pair(
                _p_concave(p, _seed(rng), 1, 256), _p_concave(p, _seed(rng), 1, 256), 0)
            _assert_ok(check_linear_refinement(f, g, lam, p, "equal_sup_1d"), (p, trial))


@pytest.mark.criterion(7, "symmetrization invariants")
def test_criterion_07_symmetrization():
    rng = _rng(7)
    ps = (0.0, -0.25, -0.5, -INF)
    for trial in range(100):
        axis = trial % 2
        p = ps[trial % 4]
        kind = trial % 3
        if kind == 2:
            f = gen_random_mask(FamilySpec("random-mask", _seed(rng), 2, 32, "2")).indicator()
            g = gen_convex_body(FamilySpec("polytope-2d", _seed(rng), 2, 32, "2")).indicator()
        else:
            f = gen_log_concave(FamilySpec(LOG_CONCAVE[kind], _seed(rng), 2, 32, "2"))
            g = gen_log_concave(FamilySpec(LOG_CONCAVE[1 - kind], _seed(rng), 2, 32, "2"))
        s = steiner_fn(f, axis)
        assert integrate(s) == pytest.approx(integrate(f), rel=1e-12)
        assert np.array_equal(project(s, axis).samples, project(f, axis).samples)
        reports = check_symmetrization_props(f, g, LAMBDAS[trial % 3], p, axis)
        for r in reports:
            _assert_ok(r, (trial, r.check_name))
        inclusion = [r for r in reports if r.check_name == "props:steiner_set"]
        assert len(inclusion) == 1
        assert inclusion[0].tol == 0.0 and inclusion[0].verdict == HOLDS


@pytest.mark.criterion(8, "fast sup-convolution matches the brute-force oracle")
def test_criterion_08_oracle():
    rng = _rng(8)
    p_set = (-INF, -2.0, -0.5, 0.0, 0.5, 1.0, 2.0, INF)
    lambdas = ("1/2", "1/3", "2/3", "1/4", "3/4")
    for trial in range(50):
        n = 1 + trial % 2
        N = 64 if n == 1 else 8
        grid = Grid.cube(2, N, n)
        values = []
        for _ in range(2):
            v = rng.uniform(0, 5, grid.shape) * (rng.random(grid.shape) < 0.7)
            if trial % 5 == 0:
                v = np.where(rng.random(grid.shape) < 0.05, INF, v)
            values.append(GridFn(grid, v))
        lam = lambdas[trial % len(lambdas)]
        for p in p_set:
            fast = sup_convolution(*values, lam, p)
            slow = sup_convolution_bruteforce(*values, lam, p)
            assert np.array_equal(fast.samples, slow.samples), (trial, p)


@pytest.mark.criterion(9, "lambda scans: concavity for boxes, chords for equal shadows")
def test_criterion_09_scan():
    rng = _rng(9)
    grid = Grid.cube(2, 16, 2)
    for trial in range(20):
        a, b = make_common_projection_boxes(grid, trial % 2, _seed(rng))
        scan = lambda_scan(a.indicator(), b.indicator(), 0, 9)
        assert len(scan.lambdas) == 9
        assert all(d <= scan.tol for d in scan.second_differences), (trial, scan)
        assert scan.chords_hold()
    for trial in range(20):
        axis = trial % 2
        a = gen_random_mask(FamilySpec("random-mask", _seed(rng), 2, 16, "2"))
        b = gen_convex_body(FamilySpec("polytope-2d", _seed(rng), 2, 16, "2"))
        a, b = make_equal_projection_volume_pair(a, b, axis, _seed(rng))
        scan = lambda_scan(a.indicator(), b.indicator(), 0, 9)
        assert all(c >= -scan.tol for c in scan.chord_margins), (trial, scan)


@pytest.mark.criterion(10, "power means")
def test_criterion_10_means():
    assert mp_mean(4, 9, "1/2", 0) == 6.0
    assert mp_mean(2, 4, "1/4", 1) == 2.5
    assert mp_mean(3, 5, "1/2", -INF) == 3.0
    assert mp_mean(3, 5, "1/4", INF) == 5.0
    assert mp_mean(1, 4, "1/2", 0.5) == pytest.approx(2.25, rel=1e-12)
    for p in (-INF, -2.0, 0.0, 0.5, INF):
        assert mp_mean(7, 0, "1/3", p) == 0.0 == mp_mean(0, 7, "1/3", p)
    assert dual_exponent(-0.5, 2) == -INF
    assert dual_exponent(-1.0, 1) == -INF
    assert dual_exponent(INF, 2) == 0.5
    assert dual_exponent(INF, 3) == 1 / 3

    rng = _rng(10)
    ps = (-INF, -2.0, -0.5, 0.0, 0.5, 1.0, 2.0, INF)
    for _ in range(2000):
        a, b = np.exp(rng.uniform(-10, 10, 2))
        lam = Fraction(int(rng.integers(1, 1000)), 1000)
        t = float(np.exp(rng.uniform(-5, 5)))
        vals = [mp_mean(a, b, lam, p) for p in ps]
        for lo, hi in zip(vals, vals[1:]):
            assert lo <= hi * (1 + 1e-12)
        for p, v in zip(ps, vals):
            assert mp_mean(t * a, t * b, lam, p) == pytest.approx(t * v, rel=1e-12)
            assert mp_mean(a, a, lam, p) == pytest.approx(a, rel=1e-12)
        gm, am = mp_mean(a, b, lam, 0), mp_mean(a, b, lam, 1)
        assert min(a, b) <= gm * (1 + 1e-12) and gm <= am * (1 + 1e-12)
        assert am <= max(a, b) * (1 + 1e-12)
