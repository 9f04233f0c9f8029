import math
from fractions import Fraction

import numpy as np
import pytest

from starflow.core import interpolant
from starflow.errors import IdentityViolation, InvalidParameter, PreconditionFailed, SourceTargetMismatch
from starflow.morphism import (
    AffineMap,
    Level,
    Morphism,
    change_of_variables,
    check_orbit_preservation,
    classify,
    compose,
    composition_law_residual,
    finite_aut_morphism,
    flow_equivalence,
    function_grid,
    identity_morphism,
    normal_form_morphism,
    phase_decomposition,
    riccati_scaling,
    time_change,
    verify_morphism,
)
from starflow.reproduce import unit_rate_system
from starflow.systems import RiccatiFamily, inclusion_solution_set, translation_action

HALF, ONE = Fraction(1, 2), Fraction(1)


def slope_line(s):
    return interpolant([Fraction(0)], [Fraction(0)], left_slope=Fraction(s), right_slope=Fraction(s))


def test_levels_are_ordered():
    order = list(Level)
    assert [lv.value for lv in order] == ["NotAMorphism", "Morphism", "Isomorphism", "PhasePreservingIsomorphism",
                                         "TopologicallyEquivalent", "TopologicallyConjugate"]
    assert all(a < b for a, b in zip(order, order[1:]))
    assert Level.CONJUGATE >= Level.EQUIVALENT and not Level.MORPHISM > Level.ISOMORPHISM


def test_affine_map():
    f = AffineMap(Fraction(2), Fraction(1))
    assert f(Fraction(3)) == 7 and f.inverse()(Fraction(7)) == 3
    assert f.increasing and not AffineMap(-1).increasing


def test_identity_is_an_isomorphism_with_zero_residual():
    rep = verify_morphism(identity_morphism(RiccatiFamily(1.0)), n_samples=100)
    assert rep.level is Level.ISOMORPHISM
    assert rep.ev_residual == 0 and rep.proj_residual == 0


def test_flipped_state_is_not_a_morphism():
    S = RiccatiFamily(1.0)
    m = Morphism(S, S, lambda t, x: (t, -x), lambda phi: phi, name="flip-state")
    rep = verify_morphism(m, n_samples=50)
    assert rep.level is Level.NOT_A_MORPHISM
    assert rep.witness is not None and rep.ev_residual > 1e-3


def test_phase_decomposition():
    S = unit_rate_system()
    _, halve = change_of_variables(S, AffineMap(2), AffineMap(HALF), AffineMap(HALF), AffineMap(2))
    pd = phase_decomposition(halve, n_samples=16)
    assert pd.phase_preserving and pd.hhat(1.5) == 3
    drift = Morphism(S, S, lambda t, x: (t, x + float(t)), lambda phi: phi, name="drift")
    pd = phase_decomposition(drift, n_samples=16)
    assert not pd.phase_preserving and pd.witness is not None


def test_riccati_scaling_maps_equilibria():
    m = riccati_scaling(-1.0, -4.0)
    assert m.k(2.0, 1.0) == (1.0, 2.0)
    for x0 in (1.0, -1.0):
        image = m.eta(RiccatiFamily(-1.0).closed_form(0.0, x0))
        assert image.domain.is_whole
        assert np.all(image.values(np.linspace(-5, 5, 11)) == 2 * x0)
    assert verify_morphism(m, n_samples=200).level is Level.ISOMORPHISM


def test_riccati_scaling_rejects_mixed_signs():
    with pytest.raises(InvalidParameter):
        riccati_scaling(1.0, -1.0)
    with pytest.raises(InvalidParameter):
        riccati_scaling(0.0, 1.0)


def test_riccati_scaling_time_change_is_linear():
    m = riccati_scaling(1.0, 4.0)
    tc = time_change(m, RiccatiFamily(1.0).closed_form(0.0, 0.0))
    assert tc.monotone and tc.bijective and tc.D_at_e == 0.0
    assert np.allclose(tc.values, np.asarray(tc.grid) / 2, atol=1e-15)
    assert tc.key_residual <= 1e-8


def test_flow_equivalence_from_a_time_rescaling():
    unit, fast = translation_action(1.0), translation_action(2.0)
    ident = lambda x: x  # noqa: E731
    m = flow_equivalence(unit, fast, ident, ident, lambda t, x: t / 2, lambda s, y: 2 * s)
    phi = m.source.orbit_map(0.3)
    tc = time_change(m, phi, radius=5.0, n_grid=101)
    assert np.max(np.abs(np.asarray(tc.values) - np.asarray(tc.grid) / 2)) <= 1e-12
    assert verify_morphism(m, n_samples=100).level is Level.ISOMORPHISM
    with pytest.raises(IdentityViolation):
        flow_equivalence(unit, fast, ident, ident, lambda t, x: -t)


def test_change_of_variables_on_inclusions():
    S = inclusion_solution_set(lo=HALF, hi=ONE)
    ident = AffineMap(1)
    doubled, _ = change_of_variables(S, AffineMap(2), AffineMap(HALF), ident, ident)
    assert doubled.membership(slope_line(Fraction(3, 2))).is_member
    assert not doubled.membership(slope_line(Fraction(3, 4))).is_member
    assert not doubled.membership(slope_line(3)).is_member
    flipped, _ = change_of_variables(S, AffineMap(-1), AffineMap(-1), ident, ident)
    assert flipped.membership(slope_line(Fraction(-3, 4))).is_member
    assert not flipped.membership(slope_line(Fraction(3, 4))).is_member


def test_change_of_variables_keeps_pwl_exact():
    S = inclusion_solution_set(lo=HALF, hi=ONE)
    _, m = change_of_variables(S, AffineMap(3), AffineMap(Fraction(1, 3)), AffineMap(2), AffineMap(HALF))
    phi = slope_line(Fraction(3, 4))
    image = m.eta(phi)
    assert image.evaluator.is_exact
    for t in (Fraction(-2), Fraction(1, 5), Fraction(4)):
        assert image(t) == 3 * phi(t / 2)


def test_finite_aut_identity_relabelling_is_exact():
    m = finite_aut_morphism(3, (0, 1, 2))
    pts = [(g, f) for g in m.source.group.elements() for f in function_grid(3, 64)]
    rep = verify_morphism(m, points=pts)
    assert rep.level is Level.ISOMORPHISM and rep.exact_zero
    f = (Fraction(1), Fraction(0), Fraction(-1, 2))
    assert m.k((1, 2, 0), f) == ((1, 2, 0), f)


def test_finite_aut_rejects_non_bijections():
    with pytest.raises(InvalidParameter):
        finite_aut_morphism(3, (0, 0, 1))
    with pytest.raises(InvalidParameter):
        finite_aut_morphism(7, tuple(range(7)))


def test_function_grid_size():
    pts = function_grid(3, 1000)
    assert len(pts) == 1000 and all(-1 <= v <= 1 for p in pts for v in p)


def test_composition_law():
    m1, m2 = riccati_scaling(1.0, 4.0), riccati_scaling(4.0, 9.0)
    phi = RiccatiFamily(1.0).closed_form(0.2, -0.4)
    assert composition_law_residual(m1, m2, phi) <= 1e-8
    both = compose(m1, m2)
    t, x = both.k(0.6, 0.5)
    assert math.isclose(t, 0.6 / 3, rel_tol=1e-15) and math.isclose(x, 1.5, rel_tol=1e-15)
    assert verify_morphism(both, n_samples=100).level is Level.ISOMORPHISM


def test_compose_checks_the_middle_system():
    with pytest.raises(SourceTargetMismatch):
        compose(riccati_scaling(1.0, 4.0), riccati_scaling(2.0, 1.0))


def test_strict_classification_needs_global_domains():
    with pytest.raises(PreconditionFailed):
        classify(riccati_scaling(1.0, 4.0), n_maps=5, n_samples=50)
    rep = classify(riccati_scaling(1.0, 4.0), n_maps=5, n_samples=50, strict=False, transport=False)
    assert rep.level is Level.PHASE_PRESERVING
    assert any("domain G" in r for r in rep.reasons)


def test_normal_form_of_unit_rate_flow():
    m = normal_form_morphism(unit_rate_system())
    rep = verify_morphism(m, n_samples=50, n_member=4)
    assert rep.level is Level.ISOMORPHISM
    assert m.k(2.0, 0.5)[1] == pytest.approx(2.5, abs=1e-9)


def test_identity_preserves_orbits():
    rep = check_orbit_preservation(identity_morphism(RiccatiFamily(-1.0)), n_maps=5)
    assert rep.max_distance == 0.0 and rep.preserved
