"""Acceptance suite: one PASS/FAIL line per criterion, listed in the terminal summary.

Run ``pytest tests/test_acceptance.py -v`` to get the table on its own.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import record_acceptance
from starflow.bebutov import reconstruct_action, shift
from starflow.cli import main
from starflow.core import IntervalDomain, restrict
from starflow.morphism import (
    Level,
    classify,
    finite_aut_morphism,
    function_grid,
    riccati_scaling,
    scaling_morphism,
    time_change,
    time_reversal,
    verify_morphism,
)
from starflow.reproduce import example1_systems, run_examples, unit_rate_system
from starflow.star import BoxWindow, FiniteWindow, cauchy_query, check_compactness, star_algebra_suite
from starflow.systems import (
    OdeSystem,
    RiccatiFamily,
    finite_aut_system,
    inclusion_solution_set,
    ode_solution_set,
)
from starflow.topology import maximal_continuation

HALF, ONE = Fraction(1, 2), Fraction(1)


def _check(number, title, ok, detail):
    record_acceptance(number, title, bool(ok), detail)
    assert ok, detail


def _decay_system():
    return ode_solution_set(OdeSystem(lambda t, x: -x, label="x' = -x"), global_domain=True, autonomous=True)


def _is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def test_example1_verdict_table_and_witness():
    start = time.perf_counter()
    table = run_examples(0, only=["ex1"])["table"]["ex1"]
    S = example1_systems()["x' in {1/2, 1}"]
    verdict = check_compactness(S, BoxWindow((-1.0, 1.0), ((-1.0, 1.0),)))
    elapsed = time.perf_counter() - start
    w = verdict.witness
    limit = w["limit"]["evaluator"]
    ts = [Fraction(v) for v in limit["ts"]]
    xs = [Fraction(v) for v in limit["xs"]]
    slope = (xs[1] - xs[0]) / (ts[1] - ts[0])
    breakpoints = [Fraction(v) for m in w["sequence"] for v in m["evaluator"]["ts"]]
    residual = Fraction(w["membership"]["residual"])
    expected_comp = {"x' in [1/2, 1]": "Supported", "x' in {1/2, 1}": "Refuted", "x' = 1": "Supported"}
    ok = (
        table["compactness"] == expected_comp
        and table["uniqueness"]["x' in [1/2, 1]"] == "Refuted"
        and table["uniqueness"]["x' in {1/2, 1}"] == "Refuted"
        and table["uniqueness"]["x' = 1"] in ("Supported", "ProvedExact")
        and len(w["sequence"]) == 9
        and ts == [-1, 1] and slope == Fraction(3, 4)
        and all(_is_dyadic(b) for b in breakpoints)
        and residual >= Fraction(1, 4) - Fraction(1, 10 ** 9)
        and elapsed <= 30
    )
    _check(1, "example 1 verdict table", ok,
           f"compactness={list(table['compactness'].values())} uniqueness={list(table['uniqueness'].values())} "
           f"witness n=0..{len(w['sequence']) - 1} slope={slope} residual={residual} time={elapsed:.1f}s")


def test_riccati_scaling_isomorphisms():
    details, ok = [], True
    for a, b in ((1.0, 4.0), (-1.0, -4.0)):
        m = riccati_scaling(a, b)
        rep = verify_morphism(m, n_samples=1000, seed=0)
        c = math.sqrt(a / b)
        tc_err, gap = 0.0, 0.0
        for phi in m.source.sample(20, 0):
            tc = time_change(m, phi)
            tc_err = max(tc_err, float(np.max(np.abs(np.asarray(tc.values) - c * np.asarray(tc.grid)))))
            gap = max(gap, float(tc.endpoints["gap"]))
        ok &= rep.level is Level.ISOMORPHISM and rep.ev_residual <= 1e-8 and rep.n_samples == 1000
        ok &= tc_err <= 1e-9 and gap <= 1e-6
        details.append(f"({a:g},{b:g}) {rep.level.value} ev={float(rep.ev_residual):.1e} "
                       f"|D-ct|={tc_err:.1e} endpoints={gap:.1e}")
    _check(2, "riccati scaling", ok, "; ".join(details))


def test_inclusion_conjugacies():
    src = inclusion_solution_set(lo=HALF, hi=ONE)
    targets = {2: inclusion_solution_set(lo=ONE, hi=Fraction(2)), -1: inclusion_solution_set(lo=-ONE, hi=-HALF)}
    details, ok = [], True
    for c, T in targets.items():
        rep = classify(scaling_morphism(src, T, c), n_maps=50, seed=0, n_samples=1000)
        dev = rep.max_identity_deviation
        ok &= rep.level is Level.CONJUGATE and len(rep.time_changes) == 50 and dev <= 1e-9
        details.append(f"scale({c}) {rep.level.value} max|D-t|={float(dev):.1e}")
    _check(3, "inclusion conjugacies", ok, "; ".join(details))


def test_finite_automorphism_exact():
    details, ok = [], True
    for n, h in ((2, (1, 0)), (3, (1, 2, 0))):
        m = finite_aut_morphism(n, h)
        grid = function_grid(n, 1000)
        pts = [(g, f) for g in m.source.group.elements() for f in grid]
        rep = verify_morphism(m, points=pts)
        ok &= rep.level is Level.ISOMORPHISM and rep.exact_zero and len(grid) >= 1000
        details.append(f"n={n} {rep.level.value} exact_zero={rep.exact_zero} points={rep.n_samples}")
    _check(4, "finite automorphism morphisms", ok, "; ".join(details))


def _inner_points(domain, k=9) -> np.ndarray:
    a, b = domain.intervals[0]
    lo = float(b) - 10.0 if a == -math.inf else float(a)
    hi = float(a) + 10.0 if b == math.inf else float(b)
    if a == -math.inf and b == math.inf:
        lo, hi = -5.0, 5.0
    return np.linspace(lo, hi, k + 2)[1:-1]


def _shift_suite(S, draw, n, rng):
    G = S.group
    maps = S.sample(50, 7)
    identity_ok, domain_ok, worst = True, True, 0.0
    for _ in range(n):
        phi = maps[int(rng.integers(len(maps)))]
        g, h = draw(rng), draw(rng)
        if shift(G.identity, phi).domain != phi.domain:
            identity_ok = False
        lhs, rhs = shift(g, shift(h, phi)), shift(G.op(g, h), phi)
        if lhs.domain != rhs.domain:
            domain_ok = False
        if G.is_finite:
            for x in lhs.domain.sorted():
                identity_ok &= shift(G.identity, phi)(x) == phi(x)
                worst = max(worst, 0.0 if lhs(x) == rhs(x) else math.inf)
        else:
            ts = _inner_points(lhs.domain)
            same = shift(G.identity, phi).values(ts)
            identity_ok &= bool(np.array_equal(same, phi.values(ts), equal_nan=True))
            worst = max(worst, float(np.nanmax(np.abs(lhs.values(ts) - rhs.values(ts)))))
    return identity_ok, domain_ok, worst


def test_shift_action_laws():
    rng = np.random.default_rng(0)
    dyadic = lambda r: Fraction(int(r.integers(-4096, 4097)), 1024)  # noqa: E731
    S3, _ = finite_aut_system(3)
    suites = {
        "riccati(a=1)": (RiccatiFamily(1.0), lambda r: float(r.uniform(-3, 3)), 3334),
        "x' in [1/2, 1]": (inclusion_solution_set(lo=HALF, hi=ONE), dyadic, 3333),
        "finite-aut(n=3)": (S3, lambda r: S3.group.elements()[int(r.integers(6))], 3333),
    }
    details, ok, total = [], True, 0
    for name, (S, draw, n) in suites.items():
        ident, dom, worst = _shift_suite(S, draw, n, rng)
        total += n
        ok &= ident and dom and worst <= 1e-12
        details.append(f"{name}: identity={ident} domain={dom} composition={worst:.1e}")
    ok &= total == 10 ** 4
    _check(5, "shift action laws", ok, f"{total} triples; " + "; ".join(details))


def test_flow_reconstruction():
    rng = np.random.default_rng(0)
    xs, gs = rng.uniform(-2, 2, 50), rng.uniform(-5, 5, 20)
    cases = {
        "x' = -x": (_decay_system(), lambda g, x: x * np.exp(-g)),
        "x' = 1": (unit_rate_system(), lambda g, x: x + g),
    }
    details, ok = [], True
    ks = np.linspace(-1.0, 1.0, 21)
    for name, (S, closed) in cases.items():
        act = reconstruct_action(S)
        recon = max(float(np.max(np.abs(act(gs, x) - closed(gs, x)))) for x in xs)
        conj = 0.0
        for x in xs[:10]:
            phi = cauchy_query(S, 0.0, float(x), 1)[0].phi
            for g in gs[:10]:
                psi = cauchy_query(S, 0.0, float(act(float(g), float(x))), 1)[0].phi
                conj = max(conj, float(np.max(np.abs(psi.values(ks) - shift(float(g), phi).values(ks)))))
        ok &= recon <= 1e-8 and conj <= 1e-9
        details.append(f"{name}: action={recon:.1e} conjugation={conj:.1e}")
    _check(6, "flow reconstruction", ok, "1000 (g,x) each; " + "; ".join(details))


def test_star_set_algebra():
    S = inclusion_solution_set(lo=HALF, hi=ONE)
    maps = S.sample(20, 3)
    times = [Fraction(k, 8) for k in range(-8, 9)]
    pool = sorted({(g, phi(g)) for phi in maps for g in times}, key=repr)
    rng = np.random.default_rng(5)
    idx1 = rng.choice(len(pool), 90, replace=False)
    idx2 = rng.choice(len(pool), 90, replace=False)
    misses = [(Fraction(k, 3), Fraction(7, 3)) for k in range(10)]
    W1 = FiniteWindow.of([pool[i] for i in idx1] + misses)
    W2 = FiniteWindow.of([pool[i] for i in idx2] + misses[:5] + [(Fraction(k, 5), Fraction(9, 4)) for k in range(5)])
    families = [maps, maps[:12], maps[8:]]
    rep = star_algebra_suite(families, [W1, W2])
    ok = rep["all_hold"] and rep["counterexample_count"] == 0 and len(W1) == len(W2) == 100
    checked = sum(v["checked"] for v in rep.values() if isinstance(v, dict))
    _check(7, "star set algebra", ok,
           f"|S|=20, |W1|={len(W1)}, |W2|={len(W2)}, {checked} identities, "
           f"{rep['counterexample_count']} counterexamples")


def test_riccati_domains_and_blowup():
    S = RiccatiFamily(1.0)
    worst = 0.0
    for phi in S.sample(20, 0):
        a, b = (float(v) for v in phi.domain.intervals[0])
        mid = (a + b) / 2
        cont = maximal_continuation(restrict(phi, IntervalDomain.of((mid - 0.5, mid + 0.5))), S)
        lo, hi = (float(v) for v in cont.domain.intervals[0])
        worst = max(worst, abs((hi - lo) - math.pi))
    S2 = RiccatiFamily(-1.0)
    phi = S2.closed_form(0.0, 2.0)
    cont = maximal_continuation(restrict(phi, IntervalDomain.of((-1.0, 0.25))), S2)
    fwd = abs(float(cont.domain.intervals[0][1]) - math.atanh(0.5))
    ok = worst <= 1e-6 and fwd <= 1e-6
    _check(8, "riccati domains", ok, f"a=1 max|len-pi|={worst:.1e} over 20; a=-1 x0=2 |end-atanh(1/2)|={fwd:.1e}")


def test_time_reversal_negative_control():
    fwd = unit_rate_system()
    back = ode_solution_set(OdeSystem(lambda t, x: -1.0 + 0.0 * x, label="x' = -1"), global_domain=True,
                            autonomous=True)
    rep = classify(time_reversal(fwd, back), n_maps=10, seed=0, n_samples=200, transport=False)
    reason = "D_φ not monotone increasing"
    ok = rep.level is Level.PHASE_PRESERVING and rep.level < Level.EQUIVALENT and reason in rep.reasons
    _check(9, "time reversal negative control", ok, f"level={rep.level.value} reasons={rep.reasons}")


def test_examples_determinism(tmp_path):
    reports = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["examples", "--seed", "0", "--out", str(out)]) == 0
        reports.append((out / "examples.json").read_bytes())
    byte_identical = reports[0] == reports[1]
    tables, matches = {}, True
    for seed in (0, 1, 2, 3, 7):
        r = run_examples(seed)
        tables[seed] = r["table"]
        matches &= r["matches"]
    same = all(t == tables[0] for t in tables.values())
    ok = byte_identical and same and matches
    _check(10, "determinism", ok, f"byte-identical={byte_identical} tables equal across seeds 0,1,2,3,7={same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
