"""Morphisms ``<H, k, eta>`` between star-constructions.

A morphism is given by callables: ``k`` on window points, ``eta`` on maps
and optionally ``H`` on star points (by default ``H(g, phi) = (k(g, phi(g))[0],
eta(phi))``). Everything here checks supplied certificates on samples; no
morphism is ever searched for.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import directed_hausdorff

from .bebutov import orbit_sample, reconstruct_action
from .core import (
    INF,
    ElementDomain,
    IntervalDomain,
    PartialMap,
    PiecewiseLinear,
    Table,
    Composed,
    exact,
    is_undefined,
)
from .errors import IdentityViolation, InvalidParameter, PreconditionFailed, SourceTargetMismatch
from .star import (
    MemberStatus,
    SolutionSet,
    Window,
    cauchy_query,
    check_existence,
    check_uniqueness,
)
from .systems import (
    ActionSolutionSet,
    ActionSystem,
    ConstantSolutionSet,
    RiccatiFamily,
    _anchor_time,
    finite_aut_system,
)

TOL_MORPH = 1e-8
TOL_ORBIT = 1e-6
TOL_ENDPOINT = 1e-6
VALUE_CLIP = 1e3
COMPARE_RADIUS = 2.0


class Level(str, Enum):
    NOT_A_MORPHISM = "NotAMorphism"
    MORPHISM = "Morphism"
    ISOMORPHISM = "Isomorphism"
    PHASE_PRESERVING = "PhasePreservingIsomorphism"
    EQUIVALENT = "TopologicallyEquivalent"
    CONJUGATE = "TopologicallyConjugate"

    @property
    def rank(self) -> int:
        return _LEVELS.index(self)

    def __ge__(self, other):
        return self.rank >= Level(other).rank

    def __gt__(self, other):
        return self.rank > Level(other).rank

    def __le__(self, other):
        return self.rank <= Level(other).rank

    def __lt__(self, other):
        return self.rank < Level(other).rank


_LEVELS = list(Level)


# ---------------------------------------------------------------------------
# residual helpers


def _is_exact(v) -> bool:
    if isinstance(v, (tuple, list)):
        return all(_is_exact(u) for u in v)
    return isinstance(v, (Fraction, int)) and not isinstance(v, bool)


def _state_residual(a, b, relative: bool = False):
    """``max |a_i - b_i|``; exact when both sides are exact, else a float."""
    if is_undefined(a) or is_undefined(b):
        return INF
    if _is_exact(a) and _is_exact(b):
        av = tuple(a) if isinstance(a, (tuple, list)) else (a,)
        bv = tuple(b) if isinstance(b, (tuple, list)) else (b,)
        if len(av) != len(bv):
            return INF
        return max((abs(Fraction(x) - Fraction(y)) for x, y in zip(av, bv)), default=Fraction(0))
    av = np.atleast_1d(np.asarray(a, dtype=float))
    bv = np.atleast_1d(np.asarray(b, dtype=float))
    if av.shape != bv.shape:
        return INF
    diff = np.abs(av - bv)
    if relative:
        diff = diff / (1 + np.abs(bv))
    return float(diff.max()) if diff.size else 0.0


def _time_residual(group, g1, g2):
    if group.kind == "permutations":
        return Fraction(0) if tuple(g1) == tuple(g2) else Fraction(1)
    return _state_residual(g1, g2)


def _max(a, b):
    return b if a is None or b > a else a


def _endpoint_gap(u, v) -> float:
    if u in (INF, -INF) or v in (INF, -INF):
        return 0.0 if u == v else INF
    return abs(float(u) - float(v))


def map_residual(phi: PartialMap, psi: PartialMap, center=None, radius: float = COMPARE_RADIUS, n: int = 201):
    """Distance between two maps: domain-endpoint gaps and relative values.

    Finite domains are compared element by element (exactly when the tables
    are exact). Over the reals the component around ``center`` is compared
    on a grid of ``[center - radius, center + radius]``.
    """
    if phi is psi:
        return Fraction(0) if isinstance(phi.domain, ElementDomain) else 0.0
    if isinstance(phi.domain, ElementDomain) or isinstance(psi.domain, ElementDomain):
        if not (isinstance(phi.domain, ElementDomain) and isinstance(psi.domain, ElementDomain)):
            return INF
        if phi.domain.elements != psi.domain.elements:
            return INF
        worst = None
        for g in phi.domain.sorted():
            worst = _max(worst, _state_residual(phi(g), psi(g)))
        return worst if worst is not None else Fraction(0)
    if center is None:
        center = float(_anchor_time(phi))
    ca, cb = phi.domain.component_of(center) or (None, None)
    da, db = psi.domain.component_of(center) or (None, None)
    if ca is None or da is None:
        return INF
    worst = max(_endpoint_gap(ca, da), _endpoint_gap(cb, db))
    lo, hi = max(ca, da), min(cb, db)
    t = float(center)
    span_lo = t - radius if lo == -INF else max(t - radius, float(lo) + min(1e-3, (t - float(lo)) / 2))
    span_hi = t + radius if hi == INF else min(t + radius, float(hi) - min(1e-3, (float(hi) - t) / 2))
    ts = np.linspace(span_lo, span_hi, n)
    a, b = phi.values(ts), psi.values(ts)
    ok = ~(np.isnan(a) if a.ndim == 1 else np.isnan(a).any(axis=1))
    ok &= ~(np.isnan(b) if b.ndim == 1 else np.isnan(b).any(axis=1))
    bnorm = np.abs(b) if b.ndim == 1 else np.linalg.norm(b, axis=1)
    ok &= bnorm <= VALUE_CLIP
    if ok.any():
        d = np.abs(a[ok] - b[ok]) if a.ndim == 1 else np.linalg.norm(a[ok] - b[ok], axis=1)
        worst = max(worst, float(np.max(d / (1 + bnorm[ok]))))
    return worst


def _num(v):
    if isinstance(v, Fraction):
        return float(v) if v.denominator != 1 else int(v)
    if v is None:
        return None
    return "inf" if v == INF else float(v)


# ---------------------------------------------------------------------------
# morphism objects


class AffineMap:
    """``v -> scale * v + shift``; exact on Fractions, vectorised on arrays."""

    def __init__(self, scale=1, shift=0):
        self.scale = exact(scale)
        self.shift = exact(shift)
        if self.scale == 0:
            raise InvalidParameter("an affine homeomorphism needs a nonzero scale")
        self._s = float(self.scale)
        self._b = float(self.shift)

    def __call__(self, v):
        if type(v) is float:
            return self._s * v + self._b
        if isinstance(v, (Fraction, int)) and not isinstance(v, bool):
            return self.scale * v + self.shift
        if isinstance(v, tuple):
            return tuple(self(u) for u in v)
        if np.ndim(v):
            return self._s * np.asarray(v, dtype=float) + self._b
        return self._s * float(v) + self._b

    def inverse(self) -> "AffineMap":
        return AffineMap(1 / self.scale, -self.shift / self.scale)

    @property
    def increasing(self) -> bool:
        return self.scale > 0

    def __repr__(self):
        return f"AffineMap({self.scale}, {self.shift})"


@dataclass(eq=False)
class Morphism:
    """A triplet ``<H, k, eta>`` from ``source*source_window`` to ``target*...``.

    ``inverse`` may be a Morphism or a zero-argument factory (resolved on
    first use, which keeps mutually inverse builders from recursing).
    """

    source: SolutionSet
    target: SolutionSet
    k: Callable
    eta: Callable
    H: Callable | None = None
    inverse_spec: object = None
    name: str = "morphism"
    source_window: Window | None = None
    target_window: Window | None = None
    vectorized: bool = False  # k accepts arrays of times and states

    def __post_init__(self):
        self._inverse = None

    @property
    def inverse(self) -> "Morphism | None":
        if self._inverse is None and self.inverse_spec is not None:
            spec = self.inverse_spec
            self._inverse = spec if isinstance(spec, Morphism) else spec()
        return self._inverse

    @property
    def has_inverse(self) -> bool:
        return self.inverse_spec is not None

    def apply(self, g, phi: PartialMap) -> tuple:
        """``H(g, phi)``."""
        if self.H is not None:
            return self.H(g, phi)
        return self.k(g, phi(g))[0], self.eta(phi)

    def tau(self, g, x):
        return self.k(g, x)[0]

    def h(self, g, x):
        return self.k(g, x)[1]

    @property
    def window(self) -> Window:
        return self.source_window or self.source.default_window()

    def __repr__(self):
        return f"<Morphism {self.name}: {self.source.descriptor} -> {self.target.descriptor}>"


class TransportedWindow(Window):
    """``k(W)`` for a window ``W`` and a bijection ``k`` with inverse ``k_inv``."""

    def __init__(self, base: Window, k: Callable, k_inv: Callable, label: str = "k"):
        self.base = base
        self.k = k
        self.k_inv = k_inv
        self.label = label

    @property
    def compact(self) -> bool:
        return self.base.compact

    def predicate(self, g, x) -> bool:
        return self.base.predicate(*self.k_inv(g, x))

    def sample(self, count, seed=0):
        return [self.k(g, x) for g, x in self.base.sample(count, seed)]

    def to_json(self):
        return {"kind": "transported", "map": self.label, "base": self.base.to_json()}


class TransportedSolutionSet(SolutionSet):
    """``{eta(phi) : phi in S}``; membership is decided by pulling back."""

    def __init__(self, base: SolutionSet, forward: Callable, backward: Callable,
                 k: Callable, k_inv: Callable, label: str, group=None, claimed_domain=None):
        self.base = base
        self.forward = forward
        self.backward = backward
        self.k = k
        self.k_inv = k_inv
        self.group = group or base.group
        self.space = base.space
        self.descriptor = f"{label}[{base.descriptor}]"
        self.sigma_invariant = base.sigma_invariant
        self.complete = base.complete
        self.unique_exact = base.unique_exact
        self.claimed_domain = claimed_domain
        self.tol_point = base.tol_point

    def through(self, g, x, budget=1):
        g0, x0 = self.k_inv(g, x)
        return [self.forward(p) for p in self.base.through(g0, x0, budget)]

    def sample(self, count, seed=0):
        return [self.forward(p) for p in self.base.sample(count, seed)]

    def membership(self, phi, local=False):
        return self.base.membership(self.backward(phi), local)

    def default_window(self):
        return TransportedWindow(self.base.default_window(), self.k, self.k_inv)


# ---------------------------------------------------------------------------
# verification


@dataclass
class MorphismReport:
    level: Level
    n_samples: int
    ev_residual: object = 0.0
    proj_residual: object = 0.0
    membership_failures: int = 0
    roundtrip_source: object = None
    roundtrip_target: object = None
    inverse_ev_residual: object = None
    witness: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def exact_zero(self) -> bool:
        vals = [self.ev_residual, self.proj_residual, self.roundtrip_source, self.roundtrip_target,
                self.inverse_ev_residual]
        return all(v is None or (isinstance(v, Fraction) and v == 0) for v in vals)

    def to_json(self):
        return {
            "level": self.level.value,
            "n_samples": self.n_samples,
            "residuals": {
                "ev": _num(self.ev_residual),
                "projection": _num(self.proj_residual),
                "roundtrip_source": _num(self.roundtrip_source),
                "roundtrip_target": _num(self.roundtrip_target),
                "inverse_ev": _num(self.inverse_ev_residual),
            },
            "exact_zero": self.exact_zero,
            "membership_failures": self.membership_failures,
            "witness": self.witness,
            "notes": list(self.notes),
        }


def _star_points(S: SolutionSet, W: Window, n: int, seed: int, points=None) -> list:
    pts = list(points) if points is not None else W.sample(n, seed)
    out = []
    for g, x in pts:
        found = cauchy_query(S, g, x, 1)
        if found:
            out.append((found[0].g, found[0].phi))
    return out


def _commutation(m: Morphism, star: list, n_member: int):
    """Worst ``ev∘H`` vs ``k∘ev`` and ``p∘H`` vs ``eta∘p`` over star points."""
    G2 = m.target.group
    ev_worst = proj_worst = None
    witness = None
    failures = 0
    images = []
    for i, (g, phi) in enumerate(star):
        g2, psi = m.apply(g, phi)
        kg, kx = m.k(g, phi(g))
        r = _max(_time_residual(G2, g2, kg), _state_residual(psi(g2), kx))
        if ev_worst is None or r > ev_worst:
            ev_worst = r
            witness = {"g": _jsonable(g), "x": _jsonable(phi(g)), "H_ev": [_jsonable(g2), _jsonable(psi(g2))],
                       "k_ev": [_jsonable(kg), _jsonable(kx)]}
        if m.H is not None:
            proj_worst = _max(proj_worst, map_residual(psi, m.eta(phi), g2))
        if i < n_member:
            status = m.target.membership(psi)
            if status.status is MemberStatus.NON_MEMBER:
                failures += 1
        images.append((g2, psi))
    if proj_worst is None:
        proj_worst = Fraction(0) if ev_worst is None or isinstance(ev_worst, Fraction) else 0.0
    return ev_worst if ev_worst is not None else 0.0, proj_worst, witness, failures, images


def _jsonable(v):
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_jsonable(u) for u in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _roundtrip(fwd: Morphism, back: Morphism, star: list) -> object:
    """``back∘fwd`` on window points and maps, against the identity."""
    G = fwd.source.group
    worst = None
    for g, phi in star:
        x = phi(g)
        g1, x1 = fwd.k(g, x)
        g0, x0 = back.k(g1, x1)
        worst = _max(worst, _max(_time_residual(G, g0, g), _state_residual(x0, x)))
        worst = _max(worst, map_residual(back.eta(fwd.eta(phi)), phi, g))
    return worst if worst is not None else 0.0


def verify_morphism(m: Morphism, n_samples: int = 1000, seed: int = 0, tol: float = TOL_MORPH,
                    points: Sequence | None = None, n_member: int = 16) -> MorphismReport:
    """Commutation residuals over sampled star points, then inverse round trips.

    Window points have absolute residuals; maps are compared by
    :func:`map_residual` (relative values, absolute endpoints). The first
    ``n_member`` images are also checked for membership in the target.
    """
    star = _star_points(m.source, m.window, n_samples, seed, points)
    if not star:
        return MorphismReport(Level.NOT_A_MORPHISM, 0, notes=["no star points could be sampled"])
    ev_r, proj_r, witness, failures, images = _commutation(m, star, n_member)
    report = MorphismReport(Level.NOT_A_MORPHISM, len(star), ev_r, proj_r, failures)
    if ev_r > tol or proj_r > tol:
        report.witness = witness
        report.notes.append("commutation residual above tolerance")
        return report
    if failures:
        report.notes.append(f"{failures} images are not members of {m.target.descriptor}")
        return report
    report.level = Level.MORPHISM
    inv = m.inverse
    if inv is None:
        return report
    report.roundtrip_source = _roundtrip(m, inv, star)
    report.roundtrip_target = _roundtrip(inv, m, images)
    inv_ev, inv_proj, inv_wit, inv_fail, _ = _commutation(inv, images, n_member)
    report.inverse_ev_residual = _max(inv_ev, inv_proj)
    if max(report.roundtrip_source, report.roundtrip_target, report.inverse_ev_residual) > tol or inv_fail:
        report.notes.append("inverse triplet fails a round trip")
        if inv_ev > tol:
            report.witness = inv_wit
        return report
    report.level = Level.ISOMORPHISM
    return report


# ---------------------------------------------------------------------------
# phase decomposition and time changes


@dataclass
class PhaseDecomposition:
    tau: Callable
    h: Callable
    hhat: Callable
    well_defined_residual: object
    n_samples: int
    witness: dict | None = None
    tol: float = TOL_MORPH

    @property
    def phase_preserving(self) -> bool:
        return self.well_defined_residual <= self.tol

    def to_json(self):
        return {"well_defined_residual": _num(self.well_defined_residual), "phase_preserving": self.phase_preserving,
                "n_samples": self.n_samples, "witness": self.witness}


def _window_times(W: Window, group, rng, count: int) -> list:
    if group.is_finite:
        return list(group.elements())
    bounds = W.bounds() if hasattr(W, "bounds") else None
    if bounds is None or bounds[1] is None:
        return [float(v) for v in rng.uniform(-1, 1, count)]
    return [float(v) for v in rng.uniform(bounds[0], bounds[1], count)]


def phase_decomposition(m: Morphism, n_samples: int = 64, seed: int = 0, n_times: int = 5,
                        tol: float = TOL_MORPH) -> PhaseDecomposition:
    """Split ``k = (tau, h)`` and measure how far ``h`` depends on time."""
    rng = np.random.default_rng(seed)
    G = m.source.group
    star = _star_points(m.source, m.window, n_samples, seed)
    e = G.identity
    worst, witness = None, None
    for g, phi in star:
        x = phi(g)
        ref = m.h(g, x)
        for g2 in _window_times(m.window, G, rng, n_times):
            r = _state_residual(m.h(g2, x), ref)
            if worst is None or r > worst:
                worst = r
                witness = {"x": _jsonable(x), "g": _jsonable(g), "g_other": _jsonable(g2)}
    if worst is None:
        worst = 0.0

    def hhat(x):
        return m.h(e, x)

    return PhaseDecomposition(m.tau, m.h, hhat, worst, len(star), witness, tol)


@dataclass
class TimeChange:
    """``D_phi(g) = tau(g, phi(g))`` sampled over a grid of ``dom phi``."""

    phi: PartialMap
    grid: list
    values: list
    monotone: bool | None
    decreasing: bool | None
    bijective: bool
    D_at_e: object
    key_residual: object
    identity_deviation: object
    endpoints: dict = field(default_factory=dict)

    def to_json(self, map_id=None):
        return {
            "map_id": map_id,
            "monotone": self.monotone,
            "decreasing": self.decreasing,
            "bijective": self.bijective,
            "D_at_e": _jsonable(self.D_at_e),
            "key_residual": _num(self.key_residual),
            "identity_deviation": _num(self.identity_deviation),
            "endpoints": self.endpoints,
        }


def time_change_values(m: Morphism, phi: PartialMap, ts) -> list:
    if m.vectorized and isinstance(ts, np.ndarray) and phi.dim == 1:
        return list(m.k(ts, phi.values(ts))[0])
    return [m.tau(t, phi(t)) for t in ts]


def _endpoint_image(m: Morphism, phi: PartialMap, end, side: int):
    """Limit of ``D_phi`` at a domain endpoint (``side=+1`` for a left end)."""
    if end in (INF, -INF):
        vals = []
        for r in (1e1, 1e2, 1e3):
            t = math.copysign(r, float(end))
            v = phi(t)
            if is_undefined(v):
                return None
            vals.append(float(m.tau(t, v)))
        mags = [abs(v) for v in vals]
        if mags[0] < mags[1] < mags[2] and mags[2] >= 10 * mags[0]:
            return math.copysign(INF, vals[2])
        return vals[2]
    t = float(end) + side * 1e-10 * max(1.0, abs(float(end)))
    v = phi(t)
    if is_undefined(v):
        return None
    return float(m.tau(t, v))


def time_change(m: Morphism, phi: PartialMap, radius: float = 10.0, n_grid: int = 2001,
                tol: float = TOL_MORPH, endpoint_tol: float = TOL_ENDPOINT,
                hhat: Callable | None = None) -> TimeChange:
    """Sample ``D_phi``, check the key identity ``eta(phi)(D_phi(g)) = hhat(phi(g))``."""
    G = m.source.group
    e = G.identity
    hhat = hhat or (lambda x: m.h(e, x))
    target = m.eta(phi)
    if isinstance(phi.domain, ElementDomain):
        grid = phi.domain.sorted()
        D = [m.tau(g, phi(g)) for g in grid]
        key = None
        for g, d in zip(grid, D):
            key = _max(key, _state_residual(target(d), hhat(phi(g))))
        dev = None
        for g, d in zip(grid, D):
            dev = _max(dev, _time_residual(m.target.group, d, g))
        bij = set(D) == set(target.domain.elements) and len(set(D)) == len(D)
        d_e = m.tau(e, phi(e)) if phi.domain.contains(e) else None
        return TimeChange(phi, grid, D, None, None, bij, d_e, key if key is not None else Fraction(0),
                          dev if dev is not None else Fraction(0))
    ts = phi.interior_grid(radius, 1e-6, n_grid)
    D = np.asarray([float(v) for v in time_change_values(m, phi, ts)])
    diffs = np.diff(D)
    monotone = bool(np.all(diffs > 0))
    decreasing = bool(np.all(diffs < 0))
    lhs = target.values(D)
    xs = phi.values(ts)
    rhs = np.asarray(m.k(ts, xs)[1] if m.vectorized and phi.dim == 1 else [hhat(v) for v in xs], dtype=float)
    ok = ~np.isnan(lhs if lhs.ndim == 1 else lhs[:, 0]) & ((np.abs(rhs) if rhs.ndim == 1 else np.linalg.norm(rhs, axis=1)) <= VALUE_CLIP)
    if (~np.isnan(lhs if lhs.ndim == 1 else lhs[:, 0])).sum() < len(ts):
        key = INF
    elif ok.any():
        diff = np.abs(lhs[ok] - rhs[ok]) if lhs.ndim == 1 else np.linalg.norm(lhs[ok] - rhs[ok], axis=1)
        scale = 1 + (np.abs(rhs[ok]) if rhs.ndim == 1 else np.linalg.norm(rhs[ok], axis=1))
        key = float(np.max(diff / scale))
    else:
        key = 0.0
    dev = float(np.max(np.abs(D - ts))) if ts.size else 0.0
    a, b = phi.domain.hull()
    ta, tb = target.domain.hull()
    lo, hi = _endpoint_image(m, phi, a, +1), _endpoint_image(m, phi, b, -1)
    bij = False
    gap = INF
    if lo is not None and hi is not None:
        img = (lo, hi) if monotone else (hi, lo) if decreasing else (None, None)
        if img[0] is not None:
            gap = max(_endpoint_gap(img[0], ta), _endpoint_gap(img[1], tb))
            bij = gap <= endpoint_tol
    d_e = float(m.tau(e, phi(e))) if phi.domain.contains(e) else None
    endpoints = {"source": [_num(a), _num(b)], "image": [_num(lo), _num(hi)], "target": [_num(ta), _num(tb)],
                 "gap": _num(gap)}
    return TimeChange(phi, ts, D, monotone, decreasing, bij, d_e, key, dev, endpoints)


# ---------------------------------------------------------------------------
# orbit preservation and axiom transport


@dataclass
class OrbitReport:
    distances: list
    tol: float = TOL_ORBIT

    @property
    def max_distance(self) -> float:
        return max(self.distances) if self.distances else 0.0

    @property
    def preserved(self) -> bool:
        return self.max_distance <= self.tol

    def to_json(self):
        return {"max_distance": self.max_distance, "preserved": self.preserved, "n_maps": len(self.distances)}


def _as_points(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[:, None] if v.ndim == 1 else v


def check_orbit_preservation(m: Morphism, n_maps: int = 20, seed: int = 0, radius: float = 10.0,
                             spacing: float = 1e-2, tol: float = TOL_ORBIT) -> OrbitReport:
    """Hausdorff distance between ``hhat(O(phi))`` and ``O(eta(phi))`` on matched grids."""
    e = m.source.group.identity
    dists = []
    for phi in m.source.sample(n_maps, seed):
        psi = m.eta(phi)
        if isinstance(phi.domain, ElementDomain):
            ts = phi.domain.sorted()
            A = _as_points([m.h(e, phi(g)) for g in ts])
            B = _as_points([psi(m.tau(g, phi(g))) for g in ts])
        else:
            orb = orbit_sample(phi, spacing, radius)
            ts = orb.times
            pts = orb.points
            if m.vectorized and pts.ndim == 1:
                A = _as_points(m.k(np.full(pts.shape, float(e)), pts)[1])
            else:
                A = _as_points([m.h(e, x) for x in pts])
            B = _as_points(psi.values(np.asarray(time_change_values(m, phi, ts), dtype=float)))
            keep = ~np.isnan(B).any(axis=1) & (np.abs(A).max(axis=1) <= VALUE_CLIP)
            A, B = A[keep], B[keep]
        if len(A) == 0:
            continue
        d = max(directed_hausdorff(A, B)[0], directed_hausdorff(B, A)[0])
        dists.append(float(d))
    return OrbitReport(dists, tol)


def transport_axioms(m: Morphism, W: Window | None = None, n_samples: int = 32, seed: int = 0) -> dict:
    """Existence and uniqueness verdicts on ``(S, W)`` and ``(S', k(W))``."""
    inv = m.inverse
    if inv is None:
        raise PreconditionFailed("axiom transport needs the inverse triplet")
    W = W or m.window
    kW = TransportedWindow(W, m.k, inv.k, m.name)
    rows = []
    for name, check in (("Existence", check_existence), ("Uniqueness", check_uniqueness)):
        src = check(m.source, W, n_samples, seed)
        dst = check(m.target, kW, n_samples, seed)
        rows.append({"axiom": name, "source": src.verdict.value, "target": dst.verdict.value,
                     "agree": src.refuted == dst.refuted})
    return {"rows": rows, "all_agree": all(r["agree"] for r in rows), "window": kW.to_json()}


# ---------------------------------------------------------------------------
# classification


@dataclass
class EquivalenceReport:
    level: Level
    reasons: list = field(default_factory=list)
    morphism: MorphismReport | None = None
    phase: PhaseDecomposition | None = None
    time_changes: list = field(default_factory=list)
    orbit: OrbitReport | None = None
    transport: dict | None = None

    def at_least(self, level) -> bool:
        return self.level >= Level(level)

    @property
    def max_identity_deviation(self):
        devs = [tc.identity_deviation for tc in self.time_changes]
        return max(devs) if devs else None

    def to_json(self):
        return {
            "level": self.level.value,
            "reasons": list(self.reasons),
            "residuals": {
                "commutation": self.morphism.to_json()["residuals"] if self.morphism else None,
                "phase": _num(self.phase.well_defined_residual) if self.phase else None,
                "orbit": self.orbit.max_distance if self.orbit else None,
            },
            "morphism": self.morphism.to_json() if self.morphism else None,
            "time_changes": [tc.to_json(i) for i, tc in enumerate(self.time_changes)],
            "axioms_transport": self.transport,
        }


def classify(m: Morphism, n_maps: int = 50, seed: int = 0, strict: bool = True, tol: float = TOL_MORPH,
             n_samples: int = 1000, tol_orbit: float = TOL_ORBIT, transport: bool = True) -> EquivalenceReport:
    """Highest level of the hierarchy supported by the sampled evidence.

    Levels are cumulative. Equivalence needs both solution sets flagged with
    domain ``G``; with ``strict=False`` missing flags cap the level at
    PhasePreservingIsomorphism instead of raising.
    """
    capped = not (m.source.has_global_domain and m.target.has_global_domain)
    if capped and strict:
        raise PreconditionFailed(f"{m.name}: source and target must both have domain G to classify equivalence")
    rep = verify_morphism(m, n_samples, seed, tol)
    report = EquivalenceReport(rep.level, morphism=rep)
    if rep.level < Level.ISOMORPHISM:
        report.reasons.append("inverse missing or failing" if rep.level is Level.MORPHISM else "commutation fails")
        return report
    if transport:
        report.transport = transport_axioms(m, n_samples=min(n_samples, 32), seed=seed)
    phase = phase_decomposition(m, seed=seed, tol=tol)
    report.phase = phase
    if not phase.phase_preserving:
        report.reasons.append("k is not phase space-preserving")
        return report
    report.level = Level.PHASE_PRESERVING
    report.orbit = check_orbit_preservation(m, min(n_maps, 20), seed, tol=tol_orbit)
    if not report.orbit.preserved:
        report.reasons.append("orbits are not preserved")
    if capped:
        report.reasons.append("domain G not flagged on both sides; equivalence not assessed")
        return report
    maps = m.source.sample(n_maps, seed)
    report.time_changes = [time_change(m, phi, tol=tol, hhat=phase.hhat) for phi in maps]
    tcs = report.time_changes
    if any(tc.key_residual > tol for tc in tcs):
        report.reasons.append("key identity eta(phi)(D_φ(g)) = hhat(phi(g)) fails")
        return report
    G = m.source.group
    if G.kind != "reals":
        if all(tc.identity_deviation == 0 for tc in tcs):
            report.level = Level.CONJUGATE
        else:
            report.reasons.append("D_φ is not the identity; isotopy is only decided over the reals")
        return report
    if not all(tc.monotone for tc in tcs):
        report.reasons.append("D_φ not monotone increasing")
        return report
    if not all(tc.bijective for tc in tcs):
        report.reasons.append("D_φ not onto dom η(φ)")
        return report
    if any(tc.D_at_e is None or abs(tc.D_at_e - float(G.identity)) > tol for tc in tcs):
        report.reasons.append("D_φ(e) ≠ e")
        return report
    report.level = Level.EQUIVALENT
    if all(tc.identity_deviation <= tol for tc in tcs):
        report.level = Level.CONJUGATE
    else:
        report.reasons.append("D_φ differs from the identity")
    return report


# ---------------------------------------------------------------------------
# composition


def compose(m1: Morphism, m2: Morphism, name: str | None = None) -> Morphism:
    """``m2 ∘ m1`` (first ``m1``, then ``m2``)."""
    if m1.target.descriptor != m2.source.descriptor:
        raise SourceTargetMismatch(f"target {m1.target.descriptor} of {m1.name} is not the source "
                                   f"{m2.source.descriptor} of {m2.name}")

    def k(g, x):
        return m2.k(*m1.k(g, x))

    def eta(phi):
        return m2.eta(m1.eta(phi))

    H = None
    if m1.H is not None or m2.H is not None:
        def H(g, phi):
            return m2.apply(*m1.apply(g, phi))

    composite = Morphism(m1.source, m2.target, k, eta, H, None, name or f"{m2.name}∘{m1.name}",
                         m1.source_window, m2.target_window)
    if m1.has_inverse and m2.has_inverse:
        def back():
            inv = compose(m2.inverse, m1.inverse, f"({composite.name})^-1")
            inv.inverse_spec = composite
            return inv

        composite.inverse_spec = back
    return composite


def composition_law_residual(m1: Morphism, m2: Morphism, phi: PartialMap, radius: float = 5.0, n: int = 201) -> float:
    """``max |D''_phi - D'_{eta1(phi)} ∘ D_phi|`` on a grid of ``dom phi``."""
    both = compose(m1, m2)
    if isinstance(phi.domain, ElementDomain):
        psi = m1.eta(phi)
        worst = 0.0
        for g in phi.domain.sorted():
            d1 = m1.tau(g, phi(g))
            lhs = both.tau(g, phi(g))
            rhs = m2.tau(d1, psi(d1))
            worst = max(worst, float(_time_residual(m2.target.group, lhs, rhs)))
        return worst
    ts = phi.interior_grid(radius, 1e-6, n)
    psi = m1.eta(phi)
    lhs = np.asarray([float(v) for v in time_change_values(both, phi, ts)])
    d1 = time_change_values(m1, phi, ts)
    rhs = np.asarray([float(m2.tau(s, psi(s))) for s in d1])
    return float(np.max(np.abs(lhs - rhs))) if ts.size else 0.0


# ---------------------------------------------------------------------------
# builders


def identity_morphism(S: SolutionSet, W: Window | None = None) -> Morphism:
    m = Morphism(S, S, lambda g, x: (g, x), lambda phi: phi, None, None, "identity", W, W)
    m.inverse_spec = m
    return m


def riccati_scaling(a: float, b: float, inverse: bool = True) -> Morphism:
    """Rescaling between ``x' = x^2 + a`` and ``x' = x^2 + b`` (same sign).

    ``k(t, x) = (sqrt(a/b) t, sqrt(b/a) x)`` and ``eta`` sends the solution
    through ``(t0, x0)`` to the one through ``k(t0, x0)``.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or a == 0 or b == 0 or (a > 0) != (b > 0):
        raise InvalidParameter(f"riccati_scaling needs nonzero a, b of the same sign (got {a}, {b})")
    src, dst = RiccatiFamily(a), RiccatiFamily(b)
    c = math.sqrt(a / b)
    r = math.sqrt(b / a)

    def k(t, x):
        return c * float(t), r * float(x)

    def eta(phi):
        anchor = phi.tag.get("anchor")
        if anchor is None or phi.tag.get("a") != src.a:
            t0 = float(_anchor_time(phi))
            anchor = (t0, phi(t0))
        t0, x0 = anchor
        return dst.closed_form(c * float(t0), r * float(x0))

    m = Morphism(src, dst, k, eta, None, None, f"riccati-scaling({a:g},{b:g})")
    if inverse:
        def back():
            mi = riccati_scaling(b, a, inverse=False)
            mi.inverse_spec = m
            return mi

        m.inverse_spec = back
    return m


def _bracket_inverse(f: Callable, s: float, start: float = 1.0) -> float:
    """Solve ``f(t) = s`` for strictly increasing ``f`` on the reals."""
    lo, hi = -start, start
    for _ in range(200):
        if f(lo) <= s <= f(hi):
            break
        lo, hi = 2 * lo, 2 * hi
    else:
        raise InvalidParameter("could not bracket the inverse time change")
    return brentq(lambda t: f(t) - s, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200)


def flow_equivalence(source: ActionSystem, target: ActionSystem, h: Callable, h_inv: Callable, tau: Callable,
                     tau_inv: Callable | None = None, ts=None, xs=None, tol: float = TOL_MORPH,
                     name: str = "flow-equivalence", _with_inverse: bool = True) -> Morphism:
    """Morphism between orbit-map sets from ``Psi(tau(t, x), h(x)) = h(Phi(t, x))``.

    ``k(t, x) = (-tau(-t, x), h(x))``, ``eta(Phi(., x)) = Psi(., h(x))`` and
    ``H(t, Phi(., x)) = (tau(t, x), eta(Phi(., x)))``. The identity is
    checked on a ``(t, x)`` grid first.
    """
    ts = np.linspace(-5, 5, 41) if ts is None else np.asarray(ts, dtype=float)
    xs = np.linspace(-2, 2, 21) if xs is None else np.asarray(xs, dtype=float)
    worst, where = 0.0, None
    for t in ts:
        for x in xs:
            lhs = target(tau(t, x), h(x))
            rhs = h(source(t, x))
            r = _state_residual(lhs, rhs, relative=True)
            if r > worst:
                worst, where = r, (float(t), float(x))
    if worst > tol:
        raise IdentityViolation(f"{name}: Psi(tau(t,x), h(x)) != h(Phi(t,x)); residual {worst:.3g} at (t, x) = {where}",
                                where, worst)
    for x in xs:
        if abs(tau(0.0, x)) > tol:
            raise InvalidParameter(f"{name}: tau(0, {x:g}) = {tau(0.0, x):g} is not 0")
        vals = np.asarray([tau(t, x) for t in ts])
        if not np.all(np.diff(vals) > 0):
            raise InvalidParameter(f"{name}: tau(., {x:g}) is not strictly increasing")
    S, S2 = ActionSolutionSet(source), ActionSolutionSet(target)
    e = source.group.identity

    def base_point(phi):
        return phi.tag["base_point"] if "base_point" in phi.tag else phi(e)

    def eta(phi):
        return S2.orbit_map(h(base_point(phi)))

    def k(t, x):
        return -tau(-t, x), h(x)

    def H(t, phi):
        return tau(t, base_point(phi)), eta(phi)

    m = Morphism(S, S2, k, eta, H, None, name)
    if _with_inverse:
        if tau_inv is None:
            def tau_inv(s, y):
                x = h_inv(y)
                return _bracket_inverse(lambda t: tau(t, x), s)

        def back():
            mi = flow_equivalence(target, source, h_inv, h, tau_inv, None, ts, xs, tol, f"({name})^-1", False)
            mi.inverse_spec = m
            return mi

        m.inverse_spec = back
    return m


def _image_domain(domain, tau, group=None):
    if isinstance(domain, ElementDomain):
        return ElementDomain(frozenset(tau(g) for g in domain.elements), group or domain.group)
    inc = tau.increasing if isinstance(tau, AffineMap) else float(tau(1.0)) > float(tau(0.0))
    out = []
    for a, b in domain.intervals:
        ends = []
        for v, sign in ((a, -1), (b, 1)):
            if v in (INF, -INF):
                ends.append(v if inc else -v)
            else:
                ends.append(tau(v) if isinstance(tau, AffineMap) else float(tau(float(v))))
        out.append(tuple(sorted(ends)))
    return IntervalDomain(tuple(out))


def _transport_map(phi: PartialMap, h: Callable, tau: Callable, tau_inv: Callable, group=None) -> PartialMap:
    """``h ∘ phi ∘ tau^-1``."""
    tag = {k: v for k, v in phi.tag.items() if k not in ("anchor", "slope", "base_point")}
    anchor = phi.tag.get("anchor")
    if anchor is not None:
        tag["anchor"] = (tau(anchor[0]), h(anchor[1]))
    domain = _image_domain(phi.domain, tau, group)
    if isinstance(phi.domain, ElementDomain):
        table = {tau(g): h(phi(g)) for g in phi.domain.elements}
        return PartialMap(domain, Table(table), tag, phi.dim)
    ev = phi.evaluator
    if isinstance(ev, PiecewiseLinear) and isinstance(h, AffineMap) and isinstance(tau, AffineMap):
        new = ev.affine(tau.scale if ev.is_exact else float(tau.scale), tau.shift if ev.is_exact else float(tau.shift),
                        h.scale if ev.is_exact else float(h.scale), h.shift if ev.is_exact else float(h.shift))
        return PartialMap(domain, new, tag, phi.dim)
    return PartialMap(domain, Composed(ev, tau_inv, h, phi.dim), tag, phi.dim)


def change_of_variables(S: SolutionSet, h: Callable, h_inv: Callable, tau: Callable, tau_inv: Callable,
                        target: SolutionSet | None = None, name: str = "change-of-variables",
                        W: Window | None = None, _inverse_of: Morphism | None = None) -> tuple:
    """``(S', m)`` with ``S' = {h ∘ phi ∘ tau^-1}`` and ``k(g, x) = (tau(g), h(x))``.

    When ``target`` is given it stands in for ``S'`` (membership is then
    decided by the target's own checker).
    """
    def k(g, x):
        return tau(g), h(x)

    def k_inv(g, x):
        return tau_inv(g), h_inv(x)

    def eta(phi):
        return _transport_map(phi, h, tau, tau_inv)

    def eta_inv(psi):
        return _transport_map(psi, h_inv, tau_inv, tau)

    if target is None:
        claimed = None
        if S.claimed_domain is not None:
            claimed = _image_domain(S.claimed_domain, tau)
        target = TransportedSolutionSet(S, eta, eta_inv, k, k_inv, name, claimed_domain=claimed)
    tW = TransportedWindow(W, k, k_inv, name) if W is not None else None
    affine = isinstance(h, AffineMap) and isinstance(tau, AffineMap)
    m = Morphism(S, target, k, eta, None, None, name, W, tW, vectorized=affine)
    if _inverse_of is not None:
        m.inverse_spec = _inverse_of
    else:
        def back():
            return change_of_variables(target, h_inv, h, tau_inv, tau, S, f"({name})^-1", tW, m)[1]

        m.inverse_spec = back
    return target, m


def scaling_morphism(S: SolutionSet, target: SolutionSet, c) -> Morphism:
    """``eta(phi) = c phi`` with ``k(t, x) = (t, c x)``."""
    h = AffineMap(c)
    ident = AffineMap(1)
    return change_of_variables(S, h, h.inverse(), ident, ident, target, f"scale({c})")[1]


def time_reversal(S: SolutionSet, target: SolutionSet) -> Morphism:
    """``eta(phi)(t) = phi(-t)`` with ``k(t, x) = (-t, x)``."""
    flip = AffineMap(-1)
    ident = AffineMap(1)
    return change_of_variables(S, ident, ident, flip, flip, target, "time-reversal")[1]


def _perm_check(n: int, h) -> tuple:
    h = tuple(int(v) for v in h)
    if sorted(h) != list(range(n)):
        raise InvalidParameter(f"{h} is not a bijection of {{0..{n - 1}}}")
    return h


def finite_aut_morphism(n: int, h) -> Morphism:
    """Relabelling of an ``n``-point space by the bijection ``h``.

    ``tau(g) = h g h^-1``; a function ``f`` on the points goes to
    ``f ∘ h^-1``. All arithmetic is on tuples of Fractions, so residuals
    are exact.
    """
    if not 2 <= n <= 6:
        raise InvalidParameter("finite_aut_morphism supports 2 <= n <= 6")
    h = _perm_check(n, h)
    S, W = finite_aut_system(n)
    T, W2 = finite_aut_system(n)
    G = S.group
    hi = G.inv(h)

    def tau(g):
        return G.op(G.op(h, tuple(g)), hi)

    def push(f):
        return tuple(f[hi[y]] for y in range(n))

    def k(g, f):
        return tau(g), push(f)

    def eta(phi):
        table = {tau(g): push(phi(g)) for g in phi.domain.elements}
        return PartialMap(phi.domain, Table(table), {"system": T.descriptor}, n)

    m = Morphism(S, T, k, eta, None, None, f"finite-aut(n={n}, h={list(h)})", W, W2)
    if h == hi:
        m.inverse_spec = m
    else:
        def back():
            mi = finite_aut_morphism(n, hi)
            mi.inverse_spec = m
            return mi

        m.inverse_spec = back
    return m


def function_grid(n: int, size: int = 1000) -> list:
    """About ``size`` exact points of ``[-1, 1]^n`` (a product grid)."""
    per = max(2, int(math.ceil(size ** (1.0 / n) - 1e-9)))
    axis = [Fraction(2 * i, per - 1) - 1 for i in range(per)]
    return list(itertools.product(axis, repeat=n))


def normal_form_morphism(S: SolutionSet, W: Window | None = None) -> Morphism:
    """From the constants ``S_0`` onto ``S``: ``k(g, x) = (g, pi_S(g, x))``.

    ``eta`` sends the constant ``y`` to the member of ``S`` through
    ``(e, y)``; the inverse sends ``phi`` to the constant ``phi(e)``.
    """
    act = reconstruct_action(S)
    S0 = ConstantSolutionSet(S.space, S.group)
    G = S.group
    e = G.identity

    def k(g, x):
        return g, act(g, x)

    def eta(psi):
        return cauchy_query(S, e, psi(e), 1)[0].phi

    def k_inv(g, x):
        gi = G.inv(g)
        return g, act(float(gi) if G.kind == "reals" else gi, x)

    def eta_inv(phi):
        return S0.constant(phi(e))

    m = Morphism(S0, S, k, eta, None, None, f"normal-form[{S.descriptor}]", W, None)
    m.inverse_spec = Morphism(S, S0, k_inv, eta_inv, None, m, f"normal-form[{S.descriptor}]^-1", None, W)
    return m


__all__ = [
    "AffineMap",
    "EquivalenceReport",
    "Level",
    "Morphism",
    "MorphismReport",
    "OrbitReport",
    "PhaseDecomposition",
    "TimeChange",
    "TransportedSolutionSet",
    "TransportedWindow",
    "change_of_variables",
    "check_orbit_preservation",
    "classify",
    "compose",
    "composition_law_residual",
    "finite_aut_morphism",
    "flow_equivalence",
    "function_grid",
    "identity_morphism",
    "map_residual",
    "normal_form_morphism",
    "phase_decomposition",
    "riccati_scaling",
    "scaling_morphism",
    "time_change",
    "time_change_values",
    "time_reversal",
    "transport_axioms",
    "verify_morphism",
]
