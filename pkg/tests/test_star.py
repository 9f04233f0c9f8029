import json
import math
from fractions import Fraction

import numpy as np
import pytest

from starflow.core import IntervalDomain, closed_form, interpolant
from starflow.errors import NotCompactWindow
from starflow.reproduce import unit_rate_system
from starflow.star import (
    Axiom,
    AxiomVerdict,
    BoxWindow,
    FilteredSolutionSet,
    FiniteSolutionSet,
    FiniteWindow,
    StarPoint,
    Verdict,
    WholeWindow,
    cauchy_query,
    check_compactness,
    check_domain,
    check_existence,
    check_uniqueness,
    reverify,
    star_algebra_suite,
    star_membership,
    star_monotonicity,
    star_set,
    window_from_maps,
)
from starflow.systems import RiccatiFamily, constant_solution_set, inclusion_solution_set

HALF, ONE = Fraction(1, 2), Fraction(1)
PLANE = WholeWindow()
BOX = BoxWindow((-1.0, 1.0), ((-1.0, 1.0),))


def tan_member():
    return RiccatiFamily(1.0).closed_form(0.0, 0.0)


# --- membership and queries -------------------------------------------------


def test_star_membership_examples():
    S = RiccatiFamily(1.0)
    assert star_membership(StarPoint(0.0, tan_member()), S, PLANE)
    assert not star_membership(StarPoint(2.0, tan_member()), S, PLANE)
    two = inclusion_solution_set(values=(HALF, ONE))
    ident = interpolant([Fraction(0)], [Fraction(0)], left_slope=ONE, right_slope=ONE)
    three_quarters = interpolant([Fraction(0)], [Fraction(0)], left_slope=Fraction(3, 4),
                                 right_slope=Fraction(3, 4))
    assert star_membership(StarPoint(Fraction(0), ident), two, PLANE)
    assert not star_membership(StarPoint(Fraction(0), three_quarters), two, PLANE)


def test_cauchy_query_examples():
    S = RiccatiFamily(1.0)
    (p,) = cauchy_query(S, 0.0, 0.0, 1)
    ts = np.linspace(-1.5, 1.5, 61)
    assert np.max(np.abs(p.phi.values(ts) - np.tan(ts))) <= 1e-12
    (c,) = cauchy_query(constant_solution_set(), 3.0, 0.25, 1)
    assert np.all(c.phi.values(ts) == 0.25)
    found = cauchy_query(inclusion_solution_set(lo=HALF, hi=ONE), Fraction(0), Fraction(0), 5)
    assert len(found) >= 2
    slopes = {p.phi.tag.get("slope") for p in found}
    assert {HALF, ONE} <= slopes


def test_every_query_result_passes_through_the_point():
    rng = np.random.default_rng(4)
    systems = [RiccatiFamily(1.0), RiccatiFamily(-1.0), inclusion_solution_set(lo=HALF, hi=ONE),
               constant_solution_set(), unit_rate_system()]
    for S in systems:
        for g, x in zip(rng.uniform(-1, 1, 8), rng.uniform(-1, 1, 8)):
            for p in cauchy_query(S, float(g), float(x), 3):
                assert p.phi.domain.contains(float(g))
                assert abs(p.phi(float(g)) - x) <= S.tol_point


def test_query_budget_must_be_positive():
    with pytest.raises(ValueError):
        cauchy_query(RiccatiFamily(1.0), 0.0, 0.0, 0)


# --- axioms -----------------------------------------------------------------


def test_existence_examples():
    v = check_existence(RiccatiFamily(1.0), BOX, 32)
    assert v.verdict in (Verdict.SUPPORTED, Verdict.PROVED_EXACT)
    through_zero = FilteredSolutionSet(RiccatiFamily(1.0), lambda phi: abs(phi(0.0) or 0.0) <= 1e-9
                                       if phi.domain.contains(0.0) else False, "phi(0)=0")
    v = check_existence(through_zero, FiniteWindow.of([(0.0, 1.0)]))
    assert v.refuted and v.witness["point"] == [0.0, 1.0]
    assert reverify(v, through_zero)
    assert check_existence(constant_solution_set(), BOX, 16).verdict is Verdict.PROVED_EXACT


def test_uniqueness_examples():
    assert check_uniqueness(unit_rate_system(), BOX, 16).verdict in (Verdict.SUPPORTED, Verdict.PROVED_EXACT)
    interval = inclusion_solution_set(lo=HALF, hi=ONE)
    v = check_uniqueness(interval, BOX, 8)
    assert v.refuted and v.witness["distance"] > 1e-6
    slopes = sorted(Fraction(m["evaluator"]["left_slope"]) for m in v.witness["maps"])
    assert slopes == [HALF, ONE]
    assert reverify(v, interval)
    assert check_uniqueness(inclusion_solution_set(values=(HALF, ONE)), BOX, 8).refuted


def test_compactness_verdicts():
    assert check_compactness(inclusion_solution_set(lo=HALF, hi=ONE),
                             BoxWindow((-2.0, 2.0), ((-2.0, 2.0),))).verdict is Verdict.SUPPORTED
    assert check_compactness(unit_rate_system(), BOX).verdict is Verdict.SUPPORTED
    S = inclusion_solution_set(values=(HALF, ONE))
    v = check_compactness(S, BOX)
    assert v.refuted
    limit = v.witness["limit"]["evaluator"]
    assert [Fraction(t) for t in limit["ts"]] == [-1, 1]
    assert [Fraction(x) for x in limit["xs"]] == [Fraction(-3, 4), Fraction(3, 4)]
    assert Fraction(v.witness["membership"]["residual"]) >= Fraction(1, 4)
    assert reverify(v, S)


def test_compactness_needs_a_compact_window():
    with pytest.raises(NotCompactWindow):
        check_compactness(unit_rate_system(), BoxWindow((-1.0, 1.0), ((-1.0, 1.0),), closed=False))
    with pytest.raises(NotCompactWindow):
        check_compactness(unit_rate_system(), PLANE)


def test_domain_examples():
    R = IntervalDomain.whole()
    assert check_domain(unit_rate_system(), R).verdict is Verdict.SUPPORTED
    v = check_domain(RiccatiFamily(1.0), R)
    assert v.refuted
    assert reverify(v, RiccatiFamily(1.0))
    bounded = FilteredSolutionSet(RiccatiFamily(-1.0), lambda phi: abs(phi.tag["anchor"][1]) <= 1, "|x0|<=1")
    assert check_domain(bounded, R).verdict is Verdict.SUPPORTED


def test_verdict_json_round_trip():
    v = check_uniqueness(inclusion_solution_set(lo=HALF, hi=ONE), BOX, 4)
    back = AxiomVerdict.from_json(json.loads(json.dumps(v.to_json())))
    assert back.axiom is Axiom.UNIQUENESS and back.verdict is Verdict.REFUTED
    assert reverify(back, inclusion_solution_set(lo=HALF, hi=ONE))


def test_reverify_rejects_a_forged_witness():
    S = RiccatiFamily(1.0)
    good = check_domain(S, IntervalDomain.whole())
    forged = AxiomVerdict(Axiom.DOMAIN, Verdict.REFUTED, 1, dict(good.witness, missing_point=0.0, anchor=[0.0, 0.0]))
    assert not reverify(forged, S)


# --- windows ----------------------------------------------------------------


def test_box_window_predicate_and_sampling():
    assert BOX.predicate(1.0, 1.0) and not BOX.predicate(1.5, 0.0)
    open_box = BoxWindow((-1.0, 1.0), ((-1.0, 1.0),), closed=False)
    assert not open_box.predicate(1.0, 0.0) and not open_box.compact
    pts = BOX.sample(50, 3)
    assert pts == BOX.sample(50, 3)
    assert all(BOX.predicate(g, x) for g, x in pts)
    assert all(BOX.predicate(g, x) for g, x in BOX.boundary_sample(20))


def test_finite_window_set_operations():
    A = FiniteWindow.of([(0.0, 1.0), (1.0, 2.0)])
    B = FiniteWindow.of([(1.0, 2.0), (2.0, 3.0)])
    assert len(A | B) == 3 and len(A & B) == 1 and len(A - B) == 1
    assert A.predicate(0, 1) and not A.predicate(0.0, 1.5)


# --- set algebra ------------------------------------------------------------


def _family(n=20, seed=0):
    return inclusion_solution_set(lo=HALF, hi=ONE).sample(n, seed)


def test_star_set_algebra_edge_cases():
    maps = _family()
    empty = FiniteWindow.of([])
    assert star_set(maps, empty) == frozenset()
    rep = star_algebra_suite([maps], [empty, empty])
    assert rep["all_hold"] and rep["counterexample_count"] == 0
    W = window_from_maps(maps[:5], [Fraction(k, 4) for k in range(-4, 5)])
    rep = star_algebra_suite([maps], [W])
    assert rep["all_hold"]
    assert star_set(maps, W - W) == frozenset()


def test_star_set_algebra_catches_a_broken_enumeration(monkeypatch):
    import starflow.star as star

    maps = _family()
    W1 = window_from_maps(maps[:10], [Fraction(k, 4) for k in range(-4, 5)])
    W2 = window_from_maps(maps[5:], [Fraction(k, 4) for k in range(-4, 5)])
    real = star.star_set
    union_size = len(W1 | W2)
    # drop a map only when enumerating the union window
    monkeypatch.setattr(star, "star_set", lambda ms, W: real(ms[:-1] if len(W) == union_size else ms, W))
    rep = star.star_algebra_suite([maps], [W1, W2])
    assert not rep["all_hold"] and rep["counterexample_count"] > 0


def test_star_monotonicity():
    maps = _family()
    small_W = window_from_maps(maps[:3], [Fraction(0)])
    big_W = small_W | window_from_maps(maps, [Fraction(1, 2)])
    assert star_monotonicity(maps[:4], maps, small_W, big_W)
    assert not star_monotonicity(maps, maps[:4], big_W, small_W)


def test_finite_solution_set_queries():
    a = interpolant([0.0], [0.0], left_slope=1.0, right_slope=1.0)
    b = closed_form(lambda t: 0.0 * np.asarray(t))
    S = FiniteSolutionSet([a, b])
    assert len(cauchy_query(S, 0.0, 0.0, 2)) == 2
    assert S.membership(a).is_member and not S.membership(interpolant([0.0], [1.0])).is_member
    assert math.isclose(cauchy_query(S, 1.0, 1.0, 1)[0].phi(0.5), 0.5)
