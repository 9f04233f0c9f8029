"""The star-construction ``S*W``, its set algebra and the four axiom checks.

A numerical check can refute an axiom (with a witness that reproduces the
failure) or support it at a stated sample size. Only families whose
members are known in closed form may answer ``ProvedExact``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    EUCLIDEAN_1,
    INF,
    REALS,
    CompactSet,
    ElementDomain,
    IntervalDomain,
    OpenDomain,
    PartialMap,
    PiecewiseLinear,
    StateSpace,
    TimeGroup,
    _num_json,
    parse_num,
)
from .errors import NotCompactWindow
from .io import map_from_json, map_to_json
from .topology import ConvergenceVerdict, sup_deviation, test_convergence

log = logging.getLogger(__name__)

TOL_POINT = 1e-6
DOMAIN_PROBE_RADIUS = 10.0


# ---------------------------------------------------------------------------
# membership and solution sets


class MemberStatus(str, Enum):
    MEMBER = "Member"
    NON_MEMBER = "NonMember"
    UNKNOWN = "Unknown"


@dataclass
class Membership:
    status: MemberStatus
    residual: float | Fraction = 0.0
    witness: dict | None = None
    reason: str = ""

    @property
    def is_member(self) -> bool:
        return self.status is MemberStatus.MEMBER

    def to_json(self) -> dict:
        r = self.residual
        return {
            "status": self.status.value,
            "residual": _num_json(r) if isinstance(r, Fraction) else float(r),
            "witness": self.witness,
            "reason": self.reason,
        }


MEMBER = Membership(MemberStatus.MEMBER)


def non_member(residual, reason: str, **witness) -> Membership:
    return Membership(MemberStatus.NON_MEMBER, residual, witness or None, reason)


class SolutionSet:
    """A family of partial maps that can be sampled, queried and tested.

    Subclasses provide ``sample``, ``through`` and ``membership``. Flags:

    * ``complete``: every point of ``G x X`` has a closed-form member
      through it, so existence may be reported as proved.
    * ``unique_exact``: the closed forms are the only members through
      each point, so uniqueness may be reported as proved.
    """

    group: TimeGroup = REALS
    space: StateSpace = EUCLIDEAN_1
    descriptor: str = "solution set"
    sigma_invariant: bool = False
    complete: bool = False
    unique_exact: bool = False
    claimed_domain: OpenDomain | None = None
    tol_point: float = TOL_POINT

    def sample(self, count: int, seed: int = 0) -> list:
        raise NotImplementedError

    def through(self, g, x, budget: int = 1) -> list:
        raise NotImplementedError

    def membership(self, phi: PartialMap, local: bool = False) -> Membership:
        """``local=True`` skips the maximality requirement on the domain."""
        raise NotImplementedError

    def extension_rule(self):
        """Right-hand side ``f(t, x)`` usable for continuation, or None."""
        return None

    def adversarial_sequences(self) -> list:
        """``[(name, maps, anchors, limit)]`` seeded into the compactness protocol."""
        return []

    def default_window(self) -> "Window":
        if self.group.is_finite:
            return BoxWindow(times=tuple(self.group.elements()), box=((-1.0, 1.0),) * self.space.dim)
        return BoxWindow((-1.0, 1.0), ((-1.0, 1.0),) * self.space.dim)

    @property
    def has_global_domain(self) -> bool:
        d = self.claimed_domain
        if d is None:
            return False
        return d.is_whole

    def __repr__(self):
        return f"<{type(self).__name__} {self.descriptor}>"


class FilteredSolutionSet(SolutionSet):
    """The members of ``base`` that satisfy ``keep``."""

    def __init__(self, base: SolutionSet, keep: Callable[[PartialMap], bool], label: str = "filtered"):
        self.base = base
        self.keep = keep
        self.group = base.group
        self.space = base.space
        self.descriptor = f"{base.descriptor} | {label}"
        self.tol_point = base.tol_point
        self.claimed_domain = None

    def sample(self, count, seed=0):
        out, attempt = [], 0
        while len(out) < count and attempt < 50:
            for phi in self.base.sample(max(count, 8), seed + 7919 * attempt):
                if self.keep(phi) and len(out) < count:
                    out.append(phi)
            attempt += 1
        return out

    def through(self, g, x, budget=1):
        return [phi for phi in self.base.through(g, x, budget) if self.keep(phi)]

    def membership(self, phi, local=False):
        m = self.base.membership(phi, local)
        if m.is_member and not self.keep(phi):
            return non_member(1.0, f"excluded by filter {self.descriptor!r}")
        return m

    def extension_rule(self):
        return self.base.extension_rule()

    def default_window(self):
        return self.base.default_window()


class FiniteSolutionSet(SolutionSet):
    """An explicit finite list of maps."""

    def __init__(self, maps: Sequence[PartialMap], group: TimeGroup = REALS, space: StateSpace = EUCLIDEAN_1,
                 label: str = "finite family"):
        self.maps = list(maps)
        self.group = group
        self.space = space
        self.descriptor = label

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        idx = rng.permutation(len(self.maps))[:count]
        return [self.maps[i] for i in sorted(idx)]

    def through(self, g, x, budget=1):
        out = []
        for phi in self.maps:
            v = phi(g)
            if phi.domain.contains(g) and self.space.metric(v, x) <= self.tol_point:
                out.append(phi)
            if len(out) >= budget:
                break
        return out

    def membership(self, phi, local=False):
        return MEMBER if any(phi is m for m in self.maps) else non_member(1.0, "not in the list")


# ---------------------------------------------------------------------------
# windows


def _key(v):
    """Hashable normal form of a group element or state."""
    if isinstance(v, (tuple, list, np.ndarray)):
        return tuple(_key(u) for u in v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(v)


class Window:
    compact: bool = False

    def predicate(self, g, x) -> bool:
        raise NotImplementedError

    def sample(self, count: int, seed: int = 0) -> list:
        raise NotImplementedError

    def bounds(self):
        """``(t_lo, t_hi, x_lo, x_hi)`` of a bounding box, or None."""
        return None

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class BoxWindow(Window):
    """``T x B`` with ``T`` an interval (or element tuple) and ``B`` a box.

    ``closed`` selects closed or open boxes; only closed bounded boxes are compact.
    """

    times: tuple = (-1.0, 1.0)
    box: tuple = ((-1.0, 1.0),)
    closed: bool = True

    @property
    def compact(self) -> bool:
        if self.is_element_times:
            return all(math.isfinite(a) and math.isfinite(b) for a, b in self.box)
        vals = [self.times[0], self.times[1]] + [v for ab in self.box for v in ab]
        return self.closed and all(math.isfinite(float(v)) for v in vals)

    @property
    def is_element_times(self) -> bool:
        return bool(self.times) and isinstance(self.times[0], tuple)

    def _t_ok(self, g) -> bool:
        if self.is_element_times:
            return tuple(g) in self.times if isinstance(g, (tuple, list)) else False
        a, b = float(self.times[0]), float(self.times[1])
        t = float(g)
        return a <= t <= b if self.closed else a < t < b

    def predicate(self, g, x) -> bool:
        if not self._t_ok(g):
            return False
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if xs.size != len(self.box):
            return False
        for v, (a, b) in zip(xs, self.box):
            if not (a <= v <= b if self.closed else a < v < b):
                return False
        return True

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            if self.is_element_times:
                g = self.times[int(rng.integers(len(self.times)))]
            else:
                g = float(rng.uniform(float(self.times[0]), float(self.times[1])))
            xs = [float(rng.uniform(max(a, -1e3), min(b, 1e3))) for a, b in self.box]
            out.append((g, xs[0] if len(xs) == 1 else tuple(xs)))
        return out

    def bounds(self):
        if not self.compact:
            return None
        lo = np.array([a for a, _ in self.box])
        hi = np.array([b for _, b in self.box])
        if self.is_element_times:
            return self.times, None, lo, hi
        return float(self.times[0]), float(self.times[1]), lo, hi

    def boundary_sample(self, count, seed=0) -> list:
        """Points on the boundary of the box (scalar states over the reals)."""
        rng = np.random.default_rng(seed)
        a, b = float(self.times[0]), float(self.times[1])
        (xa, xb), = self.box
        out = []
        for i in range(count):
            side = i % 4
            u = float(rng.uniform(0, 1))
            if side == 0:
                out.append((a, xa + u * (xb - xa)))
            elif side == 1:
                out.append((b, xa + u * (xb - xa)))
            elif side == 2:
                out.append((a + u * (b - a), xa))
            else:
                out.append((a + u * (b - a), xb))
        return out

    def closure(self) -> "BoxWindow":
        return BoxWindow(self.times, self.box, True)

    def to_json(self):
        times = [list(t) for t in self.times] if self.is_element_times else [float(t) for t in self.times]
        return {"type": "box", "t": times, "x": [[float(a), float(b)] for a, b in self.box], "closed": self.closed}


@dataclass(frozen=True)
class FiniteWindow(Window):
    """An explicit finite set of ``(g, x)`` pairs, matched exactly."""

    points: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "points", frozenset((_key(g), _key(x)) for g, x in self.points))

    compact = True

    @classmethod
    def of(cls, pairs: Iterable) -> "FiniteWindow":
        return cls(frozenset(pairs))

    def predicate(self, g, x) -> bool:
        try:
            return (_key(g), _key(x)) in self.points
        except (TypeError, ValueError):
            return False

    def sample(self, count, seed=0):
        pts = sorted(self.points, key=repr)
        if not pts:
            return []
        if count >= len(pts):
            return pts
        rng = np.random.default_rng(seed)
        return [pts[i] for i in sorted(rng.choice(len(pts), size=count, replace=False))]

    def bounds(self):
        if not self.points:
            return None
        gs = [g for g, _ in self.points]
        xs = np.array([np.atleast_1d(x) for _, x in self.points], dtype=float)
        if isinstance(gs[0], tuple):
            return tuple(sorted(set(gs))), None, xs.min(axis=0), xs.max(axis=0)
        return min(gs), max(gs), xs.min(axis=0), xs.max(axis=0)

    def __or__(self, other):
        return FiniteWindow(self.points | other.points)

    def __and__(self, other):
        return FiniteWindow(self.points & other.points)

    def __sub__(self, other):
        return FiniteWindow(self.points - other.points)

    def __len__(self):
        return len(self.points)

    def to_json(self):
        return {"type": "points", "points": sorted([[g, x] for g, x in self.points], key=repr)}


@dataclass(frozen=True)
class WholeWindow(Window):
    """``G x X``; sampling draws from ``[-scale, scale]`` in every coordinate."""

    group: TimeGroup = REALS
    dim: int = 1
    scale: float = 1.0

    compact = False

    def predicate(self, g, x) -> bool:
        return True

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            g = self.group.random_element(rng, self.scale)
            xs = rng.uniform(-self.scale, self.scale, self.dim)
            out.append((g, float(xs[0]) if self.dim == 1 else tuple(float(v) for v in xs)))
        return out

    def to_json(self):
        return {"type": "whole", "group": self.group.kind, "dim": self.dim}


# ---------------------------------------------------------------------------
# star points and queries


@dataclass(frozen=True, eq=False)
class StarPoint:
    g: object
    phi: PartialMap

    @property
    def state(self):
        return self.phi(self.g)

    def ev(self) -> tuple:
        return self.g, self.phi(self.g)


def star_membership(p: StarPoint, S: SolutionSet, W: Window) -> bool:
    """Whether ``(g, phi)`` lies in ``S*W``."""
    if not p.phi.domain.contains(p.g):
        return False
    if not W.predicate(p.g, p.phi(p.g)):
        return False
    m = S.membership(p.phi)
    if m.status is MemberStatus.UNKNOWN:
        log.warning("membership of %r in %s is unknown; treated as absent", p.phi, S.descriptor)
    return m.is_member


def shared_compact(phi: PartialMap, psi: PartialMap, g, radius: float = 1.0, h_grid: float = 1e-3) -> CompactSet | None:
    """A compact around ``g`` inside both domains (None when there is none)."""
    if isinstance(phi.domain, ElementDomain):
        common = phi.domain.intersect(psi.domain)
        return CompactSet(elements=tuple(common.sorted())) if not common.is_empty else None
    common = phi.domain.intersect(psi.domain)
    comp = common.component_of(g) if common.contains(g) else None
    if comp is None:
        return None
    a, b = comp
    t = float(g)
    lo = t - radius if a == -INF else max(t - radius, float(a) + min(0.25, (t - float(a)) / 2))
    hi = t + radius if b == INF else min(t + radius, float(b) - min(0.25, (float(b) - t) / 2))
    return CompactSet(intervals=((lo, hi),), h_grid=h_grid)


def distinct(phi: PartialMap, psi: PartialMap, g, tol: float, space: StateSpace | None = None) -> bool:
    if phi is psi:
        return False
    K = shared_compact(phi, psi, g)
    if K is None:
        return True
    d, _ = sup_deviation(phi, psi, K, space)
    return d > tol


def cauchy_query(S: SolutionSet, g, x, budget: int = 1) -> list:
    """Up to ``budget`` pairwise distinct star points through ``(g, x)``."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    out: list = []
    for phi in S.through(g, x, budget):
        if not phi.domain.contains(g):
            continue
        if S.space.metric(phi(g), x) > S.tol_point:
            continue
        if all(distinct(phi, q.phi, g, S.tol_point, S.space) for q in out):
            out.append(StarPoint(g, phi))
        if len(out) >= budget:
            break
    return out


def star_set(maps: Sequence[PartialMap], W: FiniteWindow) -> frozenset:
    """Exhaustive enumeration of ``{(g, phi)}`` over a finite window.

    Elements are ``(g, id(phi))`` so that set operations compare map identity.
    """
    out = set()
    for g, _ in W.points:
        for phi in maps:
            if phi.domain.contains(g) and W.predicate(g, phi(g)):
                out.add((g, id(phi)))
    return frozenset(out)


# ---------------------------------------------------------------------------
# verdicts


class Axiom(str, Enum):
    COMPACTNESS = "Compactness"
    EXISTENCE = "Existence"
    UNIQUENESS = "Uniqueness"
    DOMAIN = "Domain"


class Verdict(str, Enum):
    REFUTED = "Refuted"
    SUPPORTED = "Supported"
    PROVED_EXACT = "ProvedExact"


@dataclass
class AxiomVerdict:
    axiom: Axiom
    verdict: Verdict
    sample_size: int = 0
    witness: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def refuted(self) -> bool:
        return self.verdict is Verdict.REFUTED

    @property
    def holds(self) -> bool:
        return not self.refuted

    def to_json(self) -> dict:
        return {
            "axiom": self.axiom.value,
            "verdict": self.verdict.value,
            "sample_size": self.sample_size,
            "witness": self.witness,
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, data: dict) -> "AxiomVerdict":
        return cls(Axiom(data["axiom"]), Verdict(data["verdict"]), data.get("sample_size", 0),
                   data.get("witness"), list(data.get("notes", [])))

    def __str__(self):
        return f"{self.axiom.value}: {self.verdict.value} (n={self.sample_size})"


def _pt_json(g, x):
    g = list(g) if isinstance(g, tuple) else _num_json(g) if isinstance(g, Fraction) else g
    x = list(x) if isinstance(x, (tuple, list, np.ndarray)) else float(x)
    return [g, x]


def _pt_parse(p):
    g, x = p
    g = tuple(g) if isinstance(g, list) else parse_num(g) if isinstance(g, str) else g
    x = tuple(x) if isinstance(x, list) else x
    return g, x


def check_existence(S: SolutionSet, W: Window, n_samples: int = 64, seed: int = 0,
                    points: Sequence | None = None) -> AxiomVerdict:
    """Is ``S*{(g, x)}`` nonempty at sampled points of ``W``?"""
    pts = list(points) if points is not None else W.sample(n_samples, seed)
    for g, x in pts:
        if not cauchy_query(S, g, x, 1):
            return AxiomVerdict(Axiom.EXISTENCE, Verdict.REFUTED, len(pts),
                                {"point": _pt_json(g, x), "system": S.descriptor})
    verdict = Verdict.PROVED_EXACT if S.complete else Verdict.SUPPORTED
    notes = ["closed-form family: a member passes through every point"] if S.complete else []
    return AxiomVerdict(Axiom.EXISTENCE, verdict, len(pts), None, notes)


def check_uniqueness(S: SolutionSet, W: Window, n_samples: int = 64, seed: int = 0,
                     budget: int = 4, points: Sequence | None = None) -> AxiomVerdict:
    """Does any sampled point carry two distinct star points?"""
    pts = list(points) if points is not None else W.sample(n_samples, seed)
    for g, x in pts:
        found = cauchy_query(S, g, x, budget)
        if len(found) >= 2:
            a, b = found[0].phi, found[1].phi
            K = shared_compact(a, b, g)
            d, t = sup_deviation(a, b, K, S.space)
            return AxiomVerdict(Axiom.UNIQUENESS, Verdict.REFUTED, len(pts), {
                "point": _pt_json(g, x),
                "maps": [map_to_json(a), map_to_json(b)],
                "distance": d,
                "at": t,
            })
    verdict = Verdict.PROVED_EXACT if S.unique_exact else Verdict.SUPPORTED
    return AxiomVerdict(Axiom.UNIQUENESS, verdict, len(pts))


def check_domain(S: SolutionSet, D: OpenDomain, n_samples: int = 32, seed: int = 0,
                 radius: float = DOMAIN_PROBE_RADIUS, h_grid: float = 1e-3) -> AxiomVerdict:
    """Do sampled members contain ``D`` (probed on ``D ∩ [-radius, radius]``)?"""
    maps = S.sample(n_samples, seed)
    if isinstance(D, ElementDomain):
        probes = D.sorted()
    else:
        parts = D.inner_compact(radius, 0.0)
        probes = CompactSet(intervals=tuple(parts), h_grid=h_grid).grid() if parts else np.empty(0)
    for phi in maps:
        if isinstance(D, ElementDomain):
            missing = [g for g in probes if not phi.domain.contains(g)]
        else:
            inside = phi.domain.contains_many(probes)
            missing = list(np.asarray(probes)[~inside][:1])
        if missing:
            anchor = phi.tag.get("anchor")
            return AxiomVerdict(Axiom.DOMAIN, Verdict.REFUTED, len(maps), {
                "map": map_to_json(phi),
                "anchor": _pt_json(*anchor) if anchor is not None else None,
                "missing_point": list(missing[0]) if isinstance(missing[0], tuple) else float(missing[0]),
                "domain": D.to_json(),
            })
    return AxiomVerdict(Axiom.DOMAIN, Verdict.SUPPORTED, len(maps),
                        notes=[f"probed on D ∩ [-{radius}, {radius}]"] if not isinstance(D, ElementDomain) else [])


# ---------------------------------------------------------------------------
# compactness


def _cluster_midpoints(values: np.ndarray) -> tuple:
    """Per column: midpoint and spread of the tightest half of the rows."""
    k = values.shape[0]
    w = max(1, (k + 1) // 2)
    srt = np.sort(values, axis=0)
    spreads = srt[w - 1:] - srt[: k - w + 1]
    j = np.argmin(spreads, axis=0)
    cols = np.arange(values.shape[1])
    lo = srt[j, cols]
    hi = srt[j + w - 1, cols]
    return (lo + hi) / 2, hi - lo


def _sequence_compact(maps: Sequence[PartialMap], g: float, radius: float, h_grid: float) -> CompactSet | None:
    common = maps[0].domain
    for phi in maps[1:]:
        common = common.intersect(phi.domain)
    if common.is_empty or not common.contains(g):
        return None
    a, b = common.component_of(g)
    lo = g - radius if a == -INF else max(g - radius, float(a) + min(0.25, (g - float(a)) / 2))
    hi = g + radius if b == INF else min(g + radius, float(b) - min(0.25, (float(b) - g) / 2))
    return CompactSet(intervals=((lo, hi),), h_grid=h_grid)


def _limit_candidate(tail: Sequence[PartialMap], K: CompactSet) -> tuple:
    """Arzelà–Ascoli surrogate: bounds on ``K`` and a grid-accumulation candidate."""
    grid = K.grid()
    vals = np.vstack([phi.values(grid) for phi in tail])
    bound = float(np.nanmax(np.abs(vals)))
    slopes = np.abs(np.diff(vals, axis=1)) / np.diff(grid)[None, :]
    lipschitz = float(np.nanmax(slopes)) if slopes.size else 0.0
    mid, spread = _cluster_midpoints(vals)
    (lo, hi), = K.intervals
    pad = 1e-9
    candidate = PartialMap(IntervalDomain.of((lo - pad, hi + pad)),
                           _pwl(grid, mid), {"name": "limit candidate"})
    return candidate, bound, lipschitz, float(spread.max())


def _pwl(ts, xs):
    return PiecewiseLinear(list(map(float, ts)), list(map(float, xs)))


def check_compactness(S: SolutionSet, W: Window, n_sequences: int = 6, length: int = 16, seed: int = 0,
                      m_max: int = 5, tol_conv: float = 1e-6, radius: float = 1.0) -> AxiomVerdict:
    """Sequential criterion on ``W``: convergent sequences of star points must have member limits.

    Adversarial sequences supplied by the system come first; their limits
    are given exactly. Then sequences ``(g_n, x_n) -> (g, x)`` inside ``W``
    are generated, a limit candidate is accumulated from the tail on a
    compact around ``g``, and the candidate's membership is tested.
    """
    bounds = W.bounds()
    if not W.compact or bounds is None:
        raise NotCompactWindow(f"window {W.to_json()} has no compact bounding box")
    tested = 0
    notes = []
    for name, maps, anchors, limit in S.adversarial_sequences():
        if not all(W.predicate(g, phi(g)) for phi, g in zip(maps, anchors)):
            notes.append(f"adversarial sequence {name!r} leaves the window; skipped")
            continue
        tested += 1
        report = test_convergence(maps, limit, m_max=m_max, tol_conv=tol_conv)
        if report.verdict is not ConvergenceVerdict.CONVERGED:
            notes.append(f"adversarial sequence {name!r}: {report.verdict.value}")
            continue
        m = S.membership(limit)
        if m.status is MemberStatus.NON_MEMBER:
            return AxiomVerdict(Axiom.COMPACTNESS, Verdict.REFUTED, tested, {
                "sequence_name": name,
                "sequence": [map_to_json(phi) for phi in maps],
                "points": [_pt_json(g, phi(g)) for phi, g in zip(maps, anchors)],
                "limit": map_to_json(limit),
                "membership": m.to_json(),
                "convergence": report.to_json(),
            }, notes)
    if S.group.is_finite:
        # a finite group with a compact window: every sequence is eventually constant
        # on a subsequence, so the limit is one of its own members
        return AxiomVerdict(Axiom.COMPACTNESS, Verdict.SUPPORTED, tested, None,
                            notes + ["finite time group: sequences have constant subsequences"])
    rng = np.random.default_rng(seed)
    t_lo, t_hi, x_lo, x_hi = bounds
    for _ in range(n_sequences):
        (g, x), = W.sample(1, int(rng.integers(2 ** 31)))
        dg, dx = rng.uniform(-1, 1), rng.uniform(-1, 1, np.size(x_lo))
        maps, anchors = [], []
        for n in range(length):
            s = 0.5 * 2.0 ** (-n)
            gn = float(np.clip(g + s * dg * (t_hi - t_lo) / 2, t_lo, t_hi))
            xn = np.clip(np.atleast_1d(x) + s * dx * (x_hi - x_lo) / 2, x_lo, x_hi)
            xn = float(xn[0]) if xn.size == 1 else tuple(map(float, xn))
            found = cauchy_query(S, gn, xn, 1)
            if not found:
                break
            maps.append(found[0].phi)
            anchors.append(gn)
        if len(maps) < length:
            notes.append(f"existence failed along a sequence towards {_pt_json(g, x)}")
            continue
        tested += 1
        tail = maps[length // 2:]
        K = _sequence_compact(tail, float(g), radius, 1e-3)
        if K is None:
            notes.append(f"no compact around {g} inside the tail domains")
            continue
        candidate, bound, lip, spread = _limit_candidate(tail, K)
        if not (math.isfinite(bound) and math.isfinite(lip)):
            continue
        report = test_convergence(tail, candidate, m_max=1, tol_conv=max(tol_conv, 1e-6))
        if report.verdict is not ConvergenceVerdict.CONVERGED:
            # no convergent subsequence isolated from this sequence
            continue
        m = S.membership(candidate, local=True)
        if m.status is MemberStatus.NON_MEMBER:
            alt = S.membership(tail[-1], local=True)
            if alt.is_member and sup_deviation(tail[-1], candidate, K)[0] <= tol_conv:
                continue
            return AxiomVerdict(Axiom.COMPACTNESS, Verdict.REFUTED, tested, {
                "sequence_name": "sampled",
                "sequence": [map_to_json(phi) for phi in maps],
                "points": [_pt_json(gn, phi(gn)) for phi, gn in zip(maps, anchors)],
                "limit": map_to_json(candidate),
                "membership": m.to_json(),
                "convergence": report.to_json(),
            }, notes)
    return AxiomVerdict(Axiom.COMPACTNESS, Verdict.SUPPORTED, tested, None, notes)


# ---------------------------------------------------------------------------
# re-verification of serialized witnesses


def reverify(v: AxiomVerdict, S: SolutionSet, tol_conv: float = 1e-6) -> bool:
    """Re-run a refutation from its serialized witness alone."""
    if not v.refuted:
        return True
    w = v.witness or {}
    if v.axiom is Axiom.EXISTENCE:
        g, x = _pt_parse(w["point"])
        return not cauchy_query(S, g, x, 1)
    if v.axiom is Axiom.UNIQUENESS:
        g, x = _pt_parse(w["point"])
        a, b = (map_from_json(m) for m in w["maps"])
        through = all(S.space.metric(phi(g), x) <= S.tol_point for phi in (a, b))
        members = all(S.membership(phi).is_member for phi in (a, b))
        return through and members and distinct(a, b, g, S.tol_point, S.space)
    if v.axiom is Axiom.DOMAIN:
        phi = map_from_json(w["map"])
        t = w["missing_point"]
        t = tuple(t) if isinstance(t, list) else t
        if w.get("anchor") is not None:
            g, x = _pt_parse(w["anchor"])
            fresh = S.through(g, x, 1)
            return bool(fresh) and not fresh[0].domain.contains(t)
        return not phi.domain.contains(t)
    if v.axiom is Axiom.COMPACTNESS:
        seq = [map_from_json(m) for m in w["sequence"]]
        limit = map_from_json(w["limit"])
        local = w.get("sequence_name") == "sampled"
        if not all(S.membership(phi).is_member for phi in seq):
            return False
        m_max = 1 if local else 5
        tail = seq[len(seq) // 2:] if local else seq
        report = test_convergence(tail, limit, m_max=m_max, tol_conv=tol_conv)
        if report.verdict is not ConvergenceVerdict.CONVERGED:
            return False
        return S.membership(limit, local=local).status is MemberStatus.NON_MEMBER
    return False


# ---------------------------------------------------------------------------
# set algebra


def star_algebra_suite(S_list: Sequence[Sequence[PartialMap]], W_list: Sequence[FiniteWindow]) -> dict:
    """Check the union/intersection/difference identities by enumeration.

    ``S_list`` are finite map families and ``W_list`` finite windows; every
    identity is checked for every ordered pair drawn from the lists.
    """
    results = {name: {"holds": True, "checked": 0, "counterexamples": []} for name in (
        "star_of_window_union", "star_of_window_intersection", "union_of_families",
        "intersection_of_families", "window_difference")}

    def record(name, lhs, rhs, context):
        r = results[name]
        r["checked"] += 1
        if lhs != rhs:
            r["holds"] = False
            diff = sorted((lhs ^ rhs), key=repr)[:5]
            r["counterexamples"].append({"context": context, "symmetric_difference": [list(map(repr, d)) for d in diff]})

    w_pairs = list(combinations(range(len(W_list)), 2)) or [(i, i) for i in range(len(W_list))]
    for si, maps in enumerate(S_list):
        for i, j in w_pairs:
            W1, W2 = W_list[i], W_list[j]
            ctx = {"S": si, "W": [i, j]}
            a, b = star_set(maps, W1), star_set(maps, W2)
            record("star_of_window_union", star_set(maps, W1 | W2), a | b, ctx)
            record("star_of_window_intersection", star_set(maps, W1 & W2), a & b, ctx)
            record("window_difference", star_set(maps, W2 - W1), b - a, ctx)
            record("window_difference", star_set(maps, W1 - W2), a - b, ctx)
    for W in W_list:
        for (i, A), (j, B) in combinations(list(enumerate(S_list)), 2):
            ctx = {"S": [i, j], "W": repr(len(W))}
            ids_b = {id(phi) for phi in B}
            union = list(A) + [phi for phi in B if id(phi) not in {id(p) for p in A}]
            inter = [phi for phi in A if id(phi) in ids_b]
            sa, sb = star_set(A, W), star_set(B, W)
            record("union_of_families", star_set(union, W), sa | sb, ctx)
            record("intersection_of_families", star_set(inter, W), sa & sb, ctx)
    results["all_hold"] = all(r["holds"] for k, r in results.items() if isinstance(r, dict))
    results["counterexample_count"] = sum(len(r["counterexamples"]) for r in results.values() if isinstance(r, dict))
    return results


def star_monotonicity(small_maps: Sequence[PartialMap], big_maps: Sequence[PartialMap],
                      small_W: FiniteWindow, big_W: FiniteWindow) -> bool:
    """``S ⊂ S'`` and ``W ⊂ W'`` give ``S*W ⊂ S'*W'``."""
    return star_set(small_maps, small_W) <= star_set(big_maps, big_W)


def window_from_maps(maps: Sequence[PartialMap], times: Sequence, extra: Iterable = ()) -> FiniteWindow:
    """Finite window of the points ``(g, phi(g))`` plus ``extra`` pairs."""
    pts = set()
    for phi in maps:
        for g in times:
            if phi.domain.contains(g):
                pts.add((g, phi(g)))
    pts.update(extra)
    return FiniteWindow(frozenset(pts))
