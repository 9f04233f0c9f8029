"""The shift action on partial maps and the dynamics it induces.

``shift(g, phi)(x) = phi(x g)``; for additive groups this is
``x -> phi(x + g)`` on ``dom phi - g``. Orbits, equilibria and weak
invariance are all decided on sampled grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import (
    INF,
    ElementDomain,
    IntervalDomain,
    PartialMap,
    PiecewiseLinear,
    Shifted,
    Table,
    exact,
    translate_domain,
)
from .errors import PreconditionFailed
from .ode import T_MAX
from .star import (
    TOL_POINT,
    Axiom,
    AxiomVerdict,
    SolutionSet,
    Verdict,
    cauchy_query,
    check_domain,
    check_uniqueness,
)
from .systems import ActionSystem

ORBIT_SPACING = 1e-3
ORBIT_RADIUS = 10.0
INVARIANCE_BUDGET = 16


def shift(g, phi: PartialMap) -> PartialMap:
    """``σ(g, phi)``: domain ``dom phi · g⁻¹``, values ``phi(x g)``.

    Interpolants stay interpolants (breakpoints move exactly) and repeated
    shifts of a closed form collapse into one exact offset, so
    ``shift(g, shift(h, phi))`` and ``shift(g + h, phi)`` evaluate identically.
    """
    domain = translate_domain(phi.domain, g)
    tag = dict(phi.tag)
    if isinstance(phi.domain, ElementDomain):
        G = phi.domain.group
        table = {x: phi.evaluator.evaluate(G.op(x, g)) for x in domain.elements}
        return PartialMap(domain, Table(table), tag, phi.dim)
    ev = phi.evaluator
    if isinstance(ev, PiecewiseLinear):
        off = exact(g) if ev.is_exact else float(g)
        new = PiecewiseLinear([t - off for t in ev.ts], list(ev.xs), ev.left_slope, ev.right_slope)
    elif isinstance(ev, Shifted):
        new = Shifted(ev.base, exact(ev.g) + exact(g))
    else:
        new = Shifted(ev, exact(g))
    tag["shift"] = exact(tag.get("shift", 0)) + exact(g)
    return PartialMap(domain, new, tag, phi.dim)


# ---------------------------------------------------------------------------
# orbits


@dataclass
class OrbitSample:
    source: PartialMap
    times: list
    points: np.ndarray
    spacing: float
    radius: float

    @property
    def diameter(self) -> float:
        pts = self.points
        if pts.ndim == 1:
            return float(pts.max() - pts.min()) if pts.size else 0.0
        if len(pts) == 0:
            return 0.0
        # max pairwise distance is bounded by twice the max distance to any point
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1) if len(pts) <= 2000 else None
        return float(d.max()) if d is not None else float(2 * np.linalg.norm(pts - pts[0], axis=1).max())


def orbit_sample(phi: PartialMap, spacing: float = ORBIT_SPACING, radius: float = T_MAX,
                 center: float = 0.0) -> OrbitSample:
    """Values of ``phi`` over a grid of its domain clipped to ``[center - radius, center + radius]``."""
    if isinstance(phi.domain, ElementDomain):
        times = phi.domain.sorted()
        pts = np.asarray([phi(g) for g in times], dtype=float)
        return OrbitSample(phi, times, pts, 0.0, 0.0)
    pieces = []
    for a, b in phi.domain.intervals:
        lo = center - radius if a == -INF else max(center - radius, float(a))
        hi = center + radius if b == INF else min(center + radius, float(b))
        if lo >= hi:
            continue
        n = max(2, int(math.ceil((hi - lo) / spacing)) + 1)
        pieces.append(np.linspace(lo, hi, n))
    ts = np.unique(np.concatenate(pieces)) if pieces else np.empty(0)
    ts = ts[phi.domain.contains_many(ts)]
    return OrbitSample(phi, ts, phi.values(ts), spacing, radius)


# ---------------------------------------------------------------------------
# flow reconstruction


def reconstruct_action(S: SolutionSet, window=None, n_samples: int = 32, seed: int = 0) -> ActionSystem:
    """``π_S(g, x)``: the value at ``g`` of the unique member through ``(e, x)``.

    Preconditions (σ-invariance, domain ``G``, uniqueness) are checked first;
    PreconditionFailed carries the verdicts that failed.
    """
    window = window or S.default_window()
    failing: list = []
    if not S.sigma_invariant:
        failing.append(AxiomVerdict(Axiom.DOMAIN, Verdict.REFUTED, 0, {"reason": "not flagged σ-invariant"},
                                    ["solution set is not flagged σ-invariant"]))
    uniq = check_uniqueness(S, window, n_samples, seed)
    if uniq.refuted:
        failing.append(uniq)
    if not S.group.is_finite:
        dom = check_domain(S, IntervalDomain.whole() if S.group.kind == "reals" else S.claimed_domain, n_samples, seed)
        if dom.refuted:
            failing.append(dom)
    if failing:
        names = ", ".join(v.notes[0] if v.notes else f"{v.axiom.value} {v.verdict.value}" for v in failing)
        raise PreconditionFailed(f"cannot reconstruct an action for {S.descriptor}: {names}", failing)
    e = S.group.identity
    cache: dict = {}

    def orbit(x):
        key = tuple(np.atleast_1d(np.asarray(x, dtype=float))) if S.space.kind == "euclidean" else x
        if key not in cache:
            found = cauchy_query(S, e, x, 1)
            if not found:
                raise PreconditionFailed(f"no member of {S.descriptor} through ({e}, {x})")
            cache[key] = found[0].phi
        return cache[key]

    def action(g, x):
        phi = orbit(x)
        if np.ndim(g) and S.group.kind == "reals":
            return phi.values(np.asarray(g, dtype=float))
        return phi(g)

    return ActionSystem(action, S.group, S.space, f"reconstructed[{S.descriptor}]")


# ---------------------------------------------------------------------------
# equilibria and weak invariance


@dataclass
class EquilibriumVerdict:
    state: object
    verdict: str  # "Supported", "Refuted" or "Inconclusive"
    diameters: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict == "Supported"

    def to_json(self):
        return {"state": _jsonable(self.state), "verdict": self.verdict, "diameters": list(self.diameters)}


def _jsonable(x):
    if isinstance(x, (tuple, list, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    return float(x) if isinstance(x, (float, np.floating)) else x


def is_equilibrium(x, S: SolutionSet, budget: int = 4, tol: float = TOL_POINT,
                   radius: float = ORBIT_RADIUS, spacing: float = ORBIT_SPACING) -> EquilibriumVerdict:
    """Some member through ``(e, x)`` stays at ``x`` on the sampled grid."""
    found = cauchy_query(S, S.group.identity, x, budget)
    diams = []
    for p in found:
        orb = orbit_sample(p.phi, spacing, radius)
        pts = orb.points
        if pts.ndim == 1:
            d = float(np.max(np.abs(pts - float(np.asarray(x, dtype=float))))) if pts.size else 0.0
        else:
            d = float(np.max(np.linalg.norm(pts - np.asarray(x, dtype=float), axis=1)))
        diams.append(d)
        if d <= tol:
            return EquilibriumVerdict(x, "Supported", diams)
    if found and all(d > 10 * tol for d in diams):
        return EquilibriumVerdict(x, "Refuted", diams)
    return EquilibriumVerdict(x, "Inconclusive", diams)


class StateSet:
    """A subset ``A`` of the state space: membership predicate plus sampler."""

    def __init__(self, contains: Callable, sampler: Callable, label: str):
        self.contains = contains
        self.sampler = sampler
        self.label = label

    @classmethod
    def box(cls, lo, hi, closed: bool = True, tol: float = TOL_POINT) -> "StateSet":
        lo, hi = float(lo), float(hi)

        def contains(v):
            v = np.asarray(v, dtype=float)
            return (v >= lo - tol) & (v <= hi + tol) if closed else (v > lo) & (v < hi)

        def sampler(n, rng):
            return list(rng.uniform(lo, hi, n)) if closed else list(rng.uniform(lo, hi, n))

        return cls(contains, sampler, f"{'[' if closed else '('}{lo:g}, {hi:g}{']' if closed else ')'}")

    @classmethod
    def finite(cls, points: Sequence, tol: float = TOL_POINT) -> "StateSet":
        pts = np.asarray(points, dtype=float)

        def contains(v):
            v = np.asarray(v, dtype=float)
            return np.min(np.abs(v[..., None] - pts[None, :]), axis=-1) <= tol

        def sampler(n, rng):
            return [float(pts[i % len(pts)]) for i in range(n)]

        return cls(contains, sampler, "{" + ", ".join(f"{p:g}" for p in pts) + "}")

    @classmethod
    def from_orbit(cls, orbit: OrbitSample, tol: float = TOL_POINT) -> "StateSet":
        """The sampled orbit of a scalar map on an interval is an interval: use its hull."""
        pts = orbit.points
        lo, hi = float(np.min(pts)), float(np.max(pts))

        def contains(v):
            v = np.asarray(v, dtype=float)
            return (v >= lo - tol) & (v <= hi + tol)

        def sampler(n, rng):
            idx = rng.integers(0, len(pts), n)
            return [float(pts[i]) for i in idx]

        return cls(contains, sampler, f"orbit hull [{lo:g}, {hi:g}]")


@dataclass
class InvarianceVerdict:
    label: str
    verdict: Verdict
    sample_size: int
    witness: object = None
    trajectories: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict is not Verdict.REFUTED

    def to_json(self):
        return {"set": self.label, "verdict": self.verdict.value, "sample_size": self.sample_size,
                "witness": _jsonable(self.witness) if self.witness is not None else None,
                "trajectories": self.trajectories}


def is_weakly_invariant(A: StateSet, S: SolutionSet, n_samples: int = 16, seed: int = 0,
                        budget: int = INVARIANCE_BUDGET, radius: float = ORBIT_RADIUS,
                        spacing: float = 1e-2) -> InvarianceVerdict:
    """Through each sampled ``x ∈ A`` some member's sampled orbit stays in ``A``."""
    rng = np.random.default_rng(seed)
    e = S.group.identity
    chosen = []
    for x in A.sampler(n_samples, rng):
        ok = None
        for k, p in enumerate(cauchy_query(S, e, x, budget)):
            orb = orbit_sample(p.phi, spacing, radius)
            if bool(np.all(A.contains(orb.points))):
                ok = k
                break
        if ok is None:
            return InvarianceVerdict(A.label, Verdict.REFUTED, n_samples, x, chosen)
        chosen.append({"state": _jsonable(x), "trajectory": ok})
    return InvarianceVerdict(A.label, Verdict.SUPPORTED, n_samples, None, chosen)


__all__ = [
    "EquilibriumVerdict",
    "InvarianceVerdict",
    "OrbitSample",
    "StateSet",
    "is_equilibrium",
    "is_weakly_invariant",
    "orbit_sample",
    "reconstruct_action",
    "shift",
]
