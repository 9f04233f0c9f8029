import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starflow.core import (
    GUARD,
    INF,
    INTEGERS,
    REALS,
    UNDEFINED,
    ElementDomain,
    IntervalDomain,
    PiecewiseLinear,
    closed_form,
    eval_map,
    exact,
    interpolant,
    permutation_group,
    restrict,
    table_map,
    translate_domain,
)
from starflow.errors import EmptyRestriction, InvalidParameter

HALF_PI = math.pi / 2


def tan_map():
    return closed_form(np.tan, IntervalDomain.of((-HALF_PI, HALF_PI)))


# --- groups -----------------------------------------------------------------


def test_group_axioms_on_random_triples():
    rng = np.random.default_rng(0)
    for G in (REALS, INTEGERS, permutation_group(3), permutation_group(4)):
        e = G.identity
        worst = 0.0
        for _ in range(10 ** 4):
            g, h, k = (G.random_element(rng, 10.0) for _ in range(3))
            lhs, rhs = G.op(G.op(g, h), k), G.op(g, G.op(h, k))
            if G.kind == "reals":
                worst = max(worst, abs(float(lhs) - float(rhs)), abs(float(G.op(e, g)) - g),
                            abs(float(G.op(g, G.inv(g))) - e))
            else:
                assert lhs == rhs
                assert G.op(e, g) == g == G.op(g, e)
                assert G.op(g, G.inv(g)) == e
        assert worst <= 1e-12


def test_reals_op_is_exact_on_floats():
    assert REALS.op(0.1, 0.2) == Fraction(0.1) + Fraction(0.2)
    assert REALS.op(2, 3) == 5 and isinstance(REALS.op(2, 3), int)


def test_permutation_group_structure():
    G = permutation_group(3)
    assert len(G.elements()) == 6
    assert G.is_finite and G.is_discrete
    swap = (1, 0, 2)
    cycle = (1, 2, 0)
    assert G.op(swap, cycle) != G.op(cycle, swap)
    with pytest.raises(InvalidParameter):
        REALS.elements()


def test_exact_rejects_nan_and_keeps_infinity():
    assert exact(0.5) == Fraction(1, 2)
    assert exact(INF) == INF
    with pytest.raises(InvalidParameter):
        exact(float("nan"))


# --- domains ----------------------------------------------------------------


def test_translate_domain_examples():
    D = IntervalDomain.of((-HALF_PI, HALF_PI))
    moved = translate_domain(D, 1)
    (a, b), = moved.intervals
    assert a == exact(-HALF_PI) - 1 and b == exact(HALF_PI) - 1
    assert translate_domain(IntervalDomain.of((0, INF)), 0) == IntervalDomain.of((0, INF))
    E = ElementDomain(frozenset({0, 1, 2}), INTEGERS)
    assert translate_domain(E, 1).elements == frozenset({-1, 0, 1})


def test_translate_round_trip_is_exact():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        pts = np.sort(rng.uniform(-10, 10, 4))
        D = IntervalDomain.of((pts[0], pts[1]), (pts[2], INF if rng.random() < 0.3 else pts[3]))
        g = float(rng.uniform(-5, 5))
        assert translate_domain(translate_domain(D, g), -g) == D


def test_touching_open_intervals_stay_separate():
    D = IntervalDomain.of((0, 1), (1, 2))
    assert len(D.intervals) == 2
    assert not D.contains(1)
    assert IntervalDomain.of((0, 2), (1, 3)).intervals == ((0, 3),)


def test_guard_band_at_endpoints():
    D = IntervalDomain.of((0, 1))
    assert not D.contains(0.0) and not D.contains(1.0)
    assert not D.contains(1.0 - GUARD / 2)
    assert D.contains(0.5)
    assert not D.contains(Fraction(1))


def test_evaluation_is_undefined_exactly_off_domain():
    phi = interpolant([0.0, 1.0], [0.0, 1.0], IntervalDomain.of((-1, 0.25), (0.5, 2)))
    for a, b in phi.domain.intervals:
        for end in (float(a), float(b)):
            grid = end + np.array([-1e-3, -1e-9, 0.0, 1e-9, 1e-3])
            for t in grid:
                value = eval_map(phi, t)
                assert (value is UNDEFINED) == (not phi.domain.contains(t))
    assert not UNDEFINED


def test_tan_oracle_values():
    phi = tan_map()
    assert phi(0.0) == 0.0
    assert abs(phi(math.pi / 4) - 1.0) <= 1e-12
    assert phi(2.0) is UNDEFINED


def test_restrict_examples():
    line = interpolant([0.0, 1.0], [0.0, 1.0])
    r = restrict(line, IntervalDomain.of((0, 1)))
    assert r(0.5) == line(0.5) and r(1.5) is UNDEFINED
    short = interpolant([0.25, 0.75], [0.0, 1.0], IntervalDomain.of((0, 1)))
    with pytest.raises(EmptyRestriction):
        restrict(short, IntervalDomain.of((2, 3)))
    wide = interpolant([-0.5, 0.5], [0.0, 1.0], IntervalDomain.of((-1, 1)))
    assert restrict(wide, IntervalDomain.of((0, 0.25)))(0.1) == wide(0.1)
    assert restrict(wide, IntervalDomain.of((0, 5))).domain == IntervalDomain.of((0, 1))


def test_hull_and_components():
    D = IntervalDomain.of((0, 1), (2, 3))
    assert D.hull() == (0, 3)
    assert D.component_of(2.5) == (2, 3)
    assert D.component_of(1.5) is None
    with pytest.raises(EmptyRestriction):
        IntervalDomain(()).hull()


# --- piecewise linear -------------------------------------------------------


def test_pwl_exact_evaluation():
    f = PiecewiseLinear([Fraction(0), Fraction(1)], [Fraction(0), Fraction(1, 2)], Fraction(1), Fraction(0))
    assert f.is_exact
    assert f.evaluate(Fraction(1, 3)) == Fraction(1, 6)
    assert f.evaluate(Fraction(-2)) == Fraction(-2)
    assert f.evaluate(Fraction(5)) == Fraction(1, 2)
    slopes = [s for _, _, s in f.pieces()]
    assert slopes == [1, Fraction(1, 2), 0]


def test_pwl_vectorised_matches_scalar():
    rng = np.random.default_rng(2)
    f = PiecewiseLinear(sorted(rng.uniform(-3, 3, 7)), rng.uniform(-1, 1, 7))
    ts = rng.uniform(-6, 6, 500)
    assert np.allclose(f.evaluate_many(ts), [f.evaluate(t) for t in ts], atol=1e-12, rtol=0)


def test_pwl_affine_reparametrisation():
    f = PiecewiseLinear([Fraction(0), Fraction(1)], [Fraction(0), Fraction(1)], Fraction(1, 2), Fraction(2))
    g = f.affine(Fraction(-2), Fraction(1), Fraction(3), Fraction(-1))
    for s in (Fraction(-7), Fraction(-1, 3), Fraction(0), Fraction(2, 5), Fraction(9)):
        assert g.evaluate(s) == 3 * f.evaluate((s - 1) / -2) - 1


def test_pwl_rejects_bad_grids():
    with pytest.raises(InvalidParameter):
        PiecewiseLinear([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(InvalidParameter):
        PiecewiseLinear([], [])


def test_table_map_over_permutations():
    G = permutation_group(2)
    phi = table_map({g: float(i) for i, g in enumerate(G.elements())}, G)
    assert phi((0, 1)) == 0.0 and phi((1, 0)) == 1.0
    assert phi((0, 1, 2)) is UNDEFINED


# --- properties -------------------------------------------------------------

finite = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=4), finite, finite)
def test_intersection_is_pointwise_and(pairs, probe, g):
    A = IntervalDomain(tuple((min(a, b), max(a, b)) for a, b in pairs))
    B = IntervalDomain.of((g - 5, g + 5))
    both = A.intersect(B)
    inside = A.contains(probe) and B.contains(probe)
    assert (not both.is_empty and both.contains(probe)) == inside


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=4), finite, finite)
def test_translation_moves_membership(pairs, probe, g):
    D = IntervalDomain(tuple((min(a, b), max(a, b)) for a, b in pairs))
    moved = translate_domain(D, g)
    t = exact(probe)
    assert moved.contains(t) == D.contains(t + exact(g))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.fractions(-10, 10, max_denominator=64), min_size=2, max_size=8, unique=True),
       st.fractions(-20, 20, max_denominator=128))
def test_exact_pwl_matches_float_pwl(ts, t):
    ts = sorted(ts)
    xs = [q * q for q in ts]
    f = PiecewiseLinear(ts, xs)
    assert abs(float(f.evaluate(t)) - f.evaluate(float(t))) <= 1e-9 * (1 + abs(float(f.evaluate(t))))
