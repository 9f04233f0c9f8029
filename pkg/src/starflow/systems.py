"""Built-in solution sets: ODE flows, the Riccati family, 1-D differential
inclusions, constants, group actions and the finite automorphism family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .core import (
    EUCLIDEAN_1,
    GUARD,
    INF,
    REALS,
    ClosedForm,
    ElementDomain,
    IntervalDomain,
    PartialMap,
    PiecewiseLinear,
    StateSpace,
    Table,
    TimeGroup,
    discrete,
    euclidean,
    exact,
    is_undefined,
    permutation_group,
)
from .errors import InvalidParameter
from .ode import OdeSettings, solve_through
from .star import (
    MEMBER,
    BoxWindow,
    Membership,
    MemberStatus,
    SolutionSet,
    non_member,
)

TOL_RESID = 1e-6
TOL_INCL = 1e-9
MESH = Fraction(1, 64)
PROBE_RADIUS = 10.0


def _key(v):
    if isinstance(v, (tuple, list, np.ndarray)):
        return tuple(float(u) for u in v)
    return float(v)


def _interp_slack(phi: PartialMap) -> float:
    """Linear-interpolation error scale of a stored grid (zero for closed forms)."""
    ev = phi.evaluator
    if not isinstance(ev, PiecewiseLinear) or len(ev._xf) < 3:
        return 0.0
    return float(np.max(np.abs(np.diff(ev._xf, 2)))) / 4.0


def _anchor_time(phi: PartialMap):
    anchor = phi.tag.get("anchor")
    if anchor is not None and phi.domain.contains(anchor[0]):
        return anchor[0]
    grid = phi.interior_grid(PROBE_RADIUS, 1e-6, 201)
    if grid.size == 0:
        a, b = phi.domain.intervals[0]
        return (float(a) + float(b)) / 2
    return float(grid[grid.size // 2])


def _probe_grid(phi: PartialMap, t0: float, radius: float = 5.0, n: int = 2001) -> np.ndarray:
    comp = phi.domain.component_of(t0)
    if comp is None:
        return np.empty(0)
    a, b = comp
    lo = t0 - radius if a == -INF else max(t0 - radius, float(a) + 1e-9 * max(1.0, abs(float(a))) + 2 * GUARD)
    hi = t0 + radius if b == INF else min(t0 + radius, float(b) - 1e-9 * max(1.0, abs(float(b))) - 2 * GUARD)
    ts = np.linspace(lo, hi, n)
    return ts[phi.domain.contains_many(ts)]


# ---------------------------------------------------------------------------
# ODEs


@dataclass
class OdeSystem:
    """``x' = rhs(t, x)`` on an optional open spatial window."""

    rhs: Callable
    dim: int = 1
    window: tuple | None = None
    settings: OdeSettings = field(default_factory=OdeSettings)
    label: str = ""


class OdeSolutionSet(SolutionSet):
    """Maximal numerical solutions of an ODE.

    ``through`` integrates both ways from ``(g, x)`` until blow-up, window
    exit or the time horizon. Membership is the relative residual of the
    equation on a probe grid plus, unless ``local``, a maximality test at
    every finite endpoint.
    """

    def __init__(self, system: OdeSystem, claimed_domain=None, sample_box=None, global_domain: bool = False,
                 autonomous: bool = False):
        self.system = system
        self.rhs = system.rhs
        self.space = euclidean(system.dim)
        settings = system.settings
        if system.window is not None and settings.window is None:
            settings = OdeSettings(settings.t_max, settings.blowup, settings.rtol, settings.atol, system.window)
        self.ode_settings = settings
        self.descriptor = system.label or f"ode({getattr(system.rhs, 'expr', getattr(system.rhs, '__name__', 'f'))})"
        # time shifts of solutions are solutions exactly when rhs ignores t
        self.sigma_invariant = autonomous
        self.claimed_domain = IntervalDomain.whole() if global_domain else claimed_domain
        self.sample_box = sample_box or ((-1.0, 1.0), ((-1.0, 1.0),) * system.dim)
        self._cache: dict = {}

    def extension_rule(self):
        return self.rhs

    def _in_window(self, x) -> bool:
        w = self.ode_settings.window
        if w is None:
            return True
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(xs > np.asarray(w[0])) and np.all(xs < np.asarray(w[1])))

    def through(self, g, x, budget=1):
        key = (_key(g), _key(x))
        if key not in self._cache:
            if not self._in_window(x) or abs(float(g)) >= self.ode_settings.t_max:
                self._cache[key] = []
            else:
                ev = solve_through(self.rhs, float(g), x, self.ode_settings)
                lo, hi = ev.endpoints
                dom = IntervalDomain.of((lo, hi))
                self._cache[key] = [PartialMap(dom, ev, {"system": self.descriptor, "anchor": (g, x)}, self.system.dim)]
        return list(self._cache[key])

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        (ta, tb), box = self.sample_box
        out = []
        for _ in range(count):
            t0 = float(rng.uniform(ta, tb))
            xs = [float(rng.uniform(a, b)) for a, b in box]
            out.extend(self.through(t0, xs[0] if len(xs) == 1 else tuple(xs)))
        return out

    def _f(self, ts, xs) -> np.ndarray:
        if self.system.dim == 1:
            return np.asarray([float(self.rhs(t, x)) for t, x in zip(ts, xs)])
        return np.asarray([np.asarray(self.rhs(t, x), dtype=float) for t, x in zip(ts, xs)])

    def membership(self, phi, local=False):
        if not isinstance(phi.domain, IntervalDomain):
            return non_member(1.0, "ODE solutions live on the reals")
        t0 = float(_anchor_time(phi))
        ts = _probe_grid(phi, t0, PROBE_RADIUS, 2001)
        if ts.size < 3:
            return Membership(MemberStatus.UNKNOWN, 0.0, None, "no probe points inside the domain")
        xs = phi.values(ts)
        norm = np.abs(xs) if xs.ndim == 1 else np.linalg.norm(xs, axis=1)
        keep = norm <= 1e3
        worst, where = 0.0, None
        if phi.is_pwl:
            ev = phi.evaluator
            tb, xb = ev._tf, ev._xf
            inside = phi.domain.contains_many(tb)
            tb, xb = tb[inside], xb[inside]
            mask = (np.abs(xb[:-1]) <= 1e3) & (tb[:-1] >= ts[0]) & (tb[1:] <= ts[-1])
            h = np.diff(tb)
            slope = np.diff(xb) / h
            tm = (tb[:-1] + tb[1:]) / 2
            xm = (xb[:-1] + xb[1:]) / 2
            f = self._f(tm, xm)
            d2 = np.zeros_like(slope)
            if xb.size >= 3:
                c = np.abs(np.diff(xb, 2))
                d2[:-1] = np.maximum(d2[:-1], c)
                d2[1:] = np.maximum(d2[1:], c)
            res = np.abs(slope - f) / (1 + np.abs(f))
            allowed = TOL_RESID + d2 / h
            bad = mask & (res > allowed)
            if bad.any():
                i = int(np.argmax(np.where(bad, res - allowed, -np.inf)))
                return non_member(float(res[i]), "equation residual", t=float(tm[i]))
        else:
            ts, xs = ts[keep], xs[keep]
            delta = 1e-5 / (1 + (np.abs(xs) if xs.ndim == 1 else np.linalg.norm(xs, axis=1)))
            plus, minus = phi.values(ts + delta), phi.values(ts - delta)
            ok = ~np.isnan(plus if plus.ndim == 1 else plus[:, 0]) & ~np.isnan(minus if minus.ndim == 1 else minus[:, 0])
            d = (plus - minus) / (2 * delta if xs.ndim == 1 else 2 * delta[:, None])
            f = self._f(ts, xs)
            err = np.abs(d - f) if xs.ndim == 1 else np.linalg.norm(d - f, axis=1)
            scale = 1 + (np.abs(f) if xs.ndim == 1 else np.linalg.norm(f, axis=1))
            res = np.where(ok, err / scale, 0.0)
            if res.size:
                i = int(np.argmax(res))
                worst, where = float(res[i]), float(ts[i])
            if worst > TOL_RESID:
                return non_member(worst, "equation residual", t=where)
        if not local:
            gap = self._extendable_end(phi)
            if gap is not None:
                return non_member(1.0, "not maximally defined", endpoint=gap)
        return Membership(MemberStatus.MEMBER, worst)

    def _extendable_end(self, phi):
        s = self.ode_settings
        for a, b in phi.domain.intervals[:1] + phi.domain.intervals[-1:]:
            for e, side in ((a, 1), (b, -1)):
                if e in (INF, -INF) or abs(float(e)) >= s.t_max - 1e-6:
                    continue
                t = float(e) + side * max(1e-9, 4 * GUARD * max(1.0, abs(float(e))))
                v = phi(t)
                if is_undefined(v):
                    continue
                norm = float(np.linalg.norm(np.atleast_1d(v)))
                if norm >= s.blowup / 10:
                    continue
                if s.window is not None:
                    lo, hi = (np.asarray(w, dtype=float) for w in s.window)
                    xv = np.atleast_1d(v)
                    if np.min(np.concatenate([xv - lo, hi - xv])) <= 1e-6 * (1 + norm):
                        continue
                return float(e)
        return None


def ode_solution_set(system, **kw) -> OdeSolutionSet:
    if callable(system) and not isinstance(system, OdeSystem):
        system = OdeSystem(system, label=kw.pop("label", ""))
    return OdeSolutionSet(system, **kw)


# ---------------------------------------------------------------------------
# Riccati family x' = x^2 + a


def riccati_closed_form(a: float, t0: float, x0: float) -> tuple:
    """``(f, (lo, hi))``: the solution through ``(t0, x0)`` and its maximal domain."""
    if a == 0:
        raise InvalidParameter("the Riccati family needs a != 0")
    t0, x0 = float(t0), float(x0)
    if a > 0:
        r = math.sqrt(a)
        c = math.atan(x0 / r)
        mid = t0 - c / r
        half = math.pi / (2 * r)
        return (lambda t: r * np.tan(r * (np.asarray(t) - t0) + c)), (mid - half, mid + half)
    r = math.sqrt(-a)
    if abs(abs(x0) - r) <= 1e-12:
        v = math.copysign(r, x0)
        return (lambda t: np.full(np.shape(t), v) if np.ndim(t) else v), (-INF, INF)
    if abs(x0) < r:
        c = math.atanh(-x0 / r)
        return (lambda t: -r * np.tanh(r * (np.asarray(t) - t0) + c)), (-INF, INF)
    c = math.atanh(-r / x0)
    edge = t0 - c / r
    fn = lambda t: -r / np.tanh(r * (np.asarray(t) - t0) + c)  # noqa: E731
    return fn, ((-INF, edge) if x0 > r else (edge, INF))


class RiccatiFamily(SolutionSet):
    """Closed-form solutions of ``x' = x^2 + a``."""

    def __init__(self, a: float, sample_box=None):
        if a == 0 or not math.isfinite(a):
            raise InvalidParameter("the Riccati family needs a finite a != 0")
        self.a = float(a)
        self.descriptor = f"riccati(a={self.a:g})"
        self.complete = True
        self.unique_exact = True
        self.sigma_invariant = True
        self.claimed_domain = None
        self.sample_box = sample_box or ((-1.0, 1.0), ((-1.0, 1.0),))

    def extension_rule(self):
        a = self.a
        return lambda t, x: x * x + a

    @property
    def ode_settings(self):
        return OdeSettings()

    def closed_form(self, t0, x0) -> PartialMap:
        fn, (lo, hi) = riccati_closed_form(self.a, t0, x0)
        tag = {"system": self.descriptor, "anchor": (t0, x0), "a": self.a}
        return PartialMap(IntervalDomain.of((lo, hi)), ClosedForm(fn), tag)

    def through(self, g, x, budget=1):
        return [self.closed_form(g, x)]

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        (ta, tb), ((xa, xb),) = self.sample_box
        return [self.closed_form(float(rng.uniform(ta, tb)), float(rng.uniform(xa, xb))) for _ in range(count)]

    def membership(self, phi, local=False):
        if not isinstance(phi.domain, IntervalDomain):
            return non_member(1.0, "Riccati solutions live on the reals")
        t0 = float(_anchor_time(phi))
        ref = self.closed_form(t0, phi(t0))
        ra, rb = ref.domain.intervals[0]
        comp = phi.domain.component_of(t0)
        if len(phi.domain.intervals) != 1 and not local:
            return non_member(1.0, "domain is not an interval")
        a, b = comp
        tol_e = 1e-6

        def close(u, v):
            if u in (INF, -INF) or v in (INF, -INF):
                return u == v
            return abs(float(u) - float(v)) <= tol_e * max(1.0, abs(float(v)))

        if local:
            if not ((ra == -INF or a != -INF and float(a) >= float(ra) - tol_e) and (rb == INF or b != INF and float(b) <= float(rb) + tol_e)):
                return non_member(1.0, "domain exceeds the maximal solution", reference=[str(ra), str(rb)])
        elif not (close(a, ra) and close(b, rb)):
            return non_member(1.0, "domain differs from the maximal solution",
                              domain=[float(a), float(b)], reference=[float(ra), float(rb)])
        ts = _probe_grid(phi, t0, 5.0, 2001)
        psi = ref.values(ts)
        keep = np.abs(psi) <= 1e3
        ts, psi = ts[keep], psi[keep]
        if ts.size == 0:
            return Membership(MemberStatus.UNKNOWN, 0.0, None, "no probe points")
        res = np.abs(phi.values(ts) - psi) / (1 + np.abs(psi))
        i = int(np.argmax(res))
        if res[i] > TOL_RESID + _interp_slack(phi):
            return non_member(float(res[i]), "differs from the closed form", t=float(ts[i]))
        return Membership(MemberStatus.MEMBER, float(res[i]))

    def domain_endpoints(self, t0, x0) -> tuple:
        return riccati_closed_form(self.a, t0, x0)[1]


def riccati_solution_set(a: float, **kw) -> RiccatiFamily:
    return RiccatiFamily(a, **kw)


# ---------------------------------------------------------------------------
# the two-slope sequence and its limit


def _yorke_data(n: int) -> tuple:
    return _yorke_cached(int(n))


@lru_cache(maxsize=None)
def _yorke_cached(n: int) -> tuple:
    q = Fraction
    pts = ((q(-1, 2), q(-1, 4)), (q(1, 2), q(1, 4)))
    for _ in range(n):
        left = [((b - 1) / 2, (v - q(3, 4)) / 2) for b, v in pts if b < 1]
        right = [((b + 1) / 2, (v + q(3, 4)) / 2) for b, v in pts if b > -1]
        merged = dict(left)
        merged[q(0)] = q(0)
        merged.update(right)
        pts = tuple(sorted(merged.items()))
    return pts


def _two_value_map(pts, values, left=Fraction(1), right=Fraction(1), **tag) -> PartialMap:
    v1, v2 = sorted(Fraction(v) for v in values)
    alpha, beta = 2 * (v2 - v1), 2 * v1 - v2
    ts = [t for t, _ in pts]
    xs = [alpha * x + beta * t for t, x in pts]
    pwl = PiecewiseLinear(ts, xs, alpha * left + beta, alpha * right + beta)
    return PartialMap(IntervalDomain.whole(), pwl, tag)


def yorke_sequence(n: int, values: Sequence = (Fraction(1, 2), Fraction(1))) -> PartialMap:
    """The ``n``-th map of the self-similar two-slope sequence (exact dyadic data).

    Every slope lies in ``values``; the maps converge to :func:`yorke_limit`,
    whose middle slope is the average of the two values.
    """
    if n < 0:
        raise InvalidParameter("sequence index must be nonnegative")
    return _two_value_map(_yorke_data(n), values, name=f"two-slope sequence n={n}", anchor=(Fraction(0), Fraction(0)))


def yorke_limit(values: Sequence = (Fraction(1, 2), Fraction(1))) -> PartialMap:
    q = Fraction
    pts = ((q(-1), q(-3, 4)), (q(1), q(3, 4)))
    return _two_value_map(pts, values, name="two-slope limit", anchor=(q(0), q(0)))


# ---------------------------------------------------------------------------
# 1-D differential inclusions


@dataclass(frozen=True)
class InclusionSystem:
    """``x' ∈ [lo, hi]`` or ``x' ∈ values`` (a finite set)."""

    lo: Fraction | None = None
    hi: Fraction | None = None
    values: tuple = ()
    mesh: Fraction = MESH
    tol_incl: float = TOL_INCL

    def __post_init__(self):
        if self.values:
            vals = tuple(sorted({exact(v) for v in self.values}))
            if len(vals) < 2 and len(self.values) >= 2:
                raise InvalidParameter("a finite derivative set needs distinct values")
            object.__setattr__(self, "values", vals)
        else:
            if self.lo is None or self.hi is None:
                raise InvalidParameter("give either [lo, hi] or a finite value set")
            lo, hi = exact(self.lo), exact(self.hi)
            if lo > hi:
                raise InvalidParameter("interval inclusion needs lo <= hi")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "mesh", exact(self.mesh))

    @property
    def is_interval(self) -> bool:
        return not self.values

    @property
    def extremes(self) -> tuple:
        return (self.lo, self.hi) if self.is_interval else (self.values[0], self.values[-1])

    def distance(self, s):
        """Distance from a slope to the derivative set (exact for Fractions)."""
        if self.is_interval:
            return max(self.lo - s, s - self.hi, 0 * s)
        return min(abs(s - v) for v in self.values)

    def random_slope(self, rng):
        if self.is_interval:
            j = int(rng.integers(0, 9))
            return self.lo + (self.hi - self.lo) * Fraction(j, 8)
        return self.values[int(rng.integers(len(self.values)))]

    def describe(self) -> str:
        if self.is_interval:
            return f"x' in [{self.lo}, {self.hi}]"
        return "x' in {" + ", ".join(str(v) for v in self.values) + "}"


class InclusionSolutionSet(SolutionSet):
    """Piecewise-constant-slope selections on a mesh of width ``mesh``.

    ``through(g, x)`` returns the extreme-slope lines first, then random
    selections anchored at ``(g, x)`` (seeded by the point itself).
    """

    def __init__(self, spec: InclusionSystem, span: int = 4, sample_box=None):
        self.spec = spec
        self.span = span
        self.descriptor = spec.describe()
        self.sigma_invariant = True
        self.claimed_domain = IntervalDomain.whole()
        self.sample_box = sample_box or ((-1.0, 1.0), ((-1.0, 1.0),))

    def extension_rule(self):
        lo = float(self.spec.extremes[0])
        return lambda t, x: lo + 0.0 * x

    def line(self, g, x, slope) -> PartialMap:
        g, x = exact(g), exact(x)
        pwl = PiecewiseLinear([g], [x], slope, slope)
        return PartialMap(IntervalDomain.whole(), pwl, {"system": self.descriptor, "anchor": (g, x), "slope": slope})

    def selection(self, g, x, rng) -> PartialMap:
        g, x = exact(g), exact(x)
        n = int(self.span / self.spec.mesh)
        slopes = [self.spec.random_slope(rng) for _ in range(2 * n)]
        ts = [g + k * self.spec.mesh for k in range(-n, n + 1)]
        xs = [x] * (2 * n + 1)
        for k in range(n, 2 * n):
            xs[k + 1] = xs[k] + slopes[k] * self.spec.mesh
        for k in range(n - 1, -1, -1):
            xs[k] = xs[k + 1] - slopes[k] * self.spec.mesh
        pwl = PiecewiseLinear(ts, xs, self.spec.random_slope(rng), self.spec.random_slope(rng))
        return PartialMap(IntervalDomain.whole(), pwl, {"system": self.descriptor, "anchor": (g, x)})

    def through(self, g, x, budget=1):
        out = [self.line(g, x, s) for s in dict.fromkeys(self.spec.extremes)]
        if budget > len(out):
            seed = abs(hash((_key(g), _key(x)))) % 2 ** 32
            rng = np.random.default_rng(seed)
            out += [self.selection(g, x, rng) for _ in range(budget - len(out))]
        return out[:budget]

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        (ta, tb), ((xa, xb),) = self.sample_box
        return [self.selection(float(rng.uniform(ta, tb)), float(rng.uniform(xa, xb)), rng) for _ in range(count)]

    def membership(self, phi, local=False):
        if not isinstance(phi.domain, IntervalDomain):
            return non_member(1.0, "inclusion solutions live on the reals")
        if not local and not phi.domain.is_whole:
            return non_member(1.0, "not maximally defined: bounded slopes extend to all of R")
        tol = self.spec.tol_incl
        if phi.is_pwl:
            worst, wit = 0, None
            for a, b, s in phi.evaluator.pieces():
                if IntervalDomain.of((a, b)).intersect(phi.domain).is_empty:
                    continue
                d = self.spec.distance(s)
                if d > worst:
                    worst, wit = d, {"piece": [_jnum(a), _jnum(b)], "slope": _jnum(s)}
            if worst > tol:
                return Membership(MemberStatus.NON_MEMBER, worst, wit, "slope outside the derivative set")
            return Membership(MemberStatus.MEMBER, worst)
        h = float(self.spec.mesh)
        parts = phi.domain.inner_compact(PROBE_RADIUS, 1e-9)
        worst, where = 0.0, None
        for lo, hi in parts:
            n = int((hi - lo) / h)
            if n < 1:
                continue
            ts = lo + h * np.arange(n + 1)
            xs = phi.values(ts)
            q = np.diff(xs) / h
            d = np.array([float(self.spec.distance(Fraction(v))) for v in q])
            i = int(np.argmax(d))
            if d[i] > worst:
                worst, where = float(d[i]), [float(ts[i]), float(ts[i + 1])]
        if worst > tol:
            return non_member(worst, "difference quotient outside the derivative set", cell=where, slope=None)
        return Membership(MemberStatus.MEMBER, worst)

    def adversarial_sequences(self):
        v1, v2 = self.spec.extremes
        if v1 == v2:
            return []
        maps = [yorke_sequence(n, (v1, v2)) for n in range(9)]
        return [("two-slope", maps, [Fraction(0)] * len(maps), yorke_limit((v1, v2)))]


def _jnum(v):
    if isinstance(v, Fraction):
        return str(v)
    return "inf" if v == INF else "-inf" if v == -INF else float(v)


def inclusion_solution_set(spec: InclusionSystem | None = None, *, lo=None, hi=None, values=(), **kw) -> InclusionSolutionSet:
    if spec is None:
        spec = InclusionSystem(lo=lo, hi=hi, values=tuple(values))
    return InclusionSolutionSet(spec, **kw)


# ---------------------------------------------------------------------------
# constants


class ConstantSolutionSet(SolutionSet):
    """``S_0``: the constant maps on the whole group."""

    def __init__(self, space: StateSpace = EUCLIDEAN_1, group: TimeGroup = REALS):
        self.space = space
        self.group = group
        self.descriptor = "constants"
        self.complete = True
        self.unique_exact = True
        self.sigma_invariant = True
        self.claimed_domain = group.whole() if group.kind != "integers" else None

    def constant(self, x, g=0) -> PartialMap:
        tag = {"system": self.descriptor, "anchor": (g, x)}
        if self.group.is_finite:
            return PartialMap(self.group.whole(), Table({e: x for e in self.group.elements()}), tag, self.space.dim)
        if self.space.dim == 1 and self.space.kind == "euclidean":
            return PartialMap(IntervalDomain.whole(), PiecewiseLinear([Fraction(0)], [x], 0, 0), tag)
        v = np.asarray(x, dtype=float)
        fn = lambda t: np.broadcast_to(v, np.shape(t) + v.shape).copy()  # noqa: E731
        return PartialMap(IntervalDomain.whole(), ClosedForm(fn, self.space.dim), tag, self.space.dim)

    def through(self, g, x, budget=1):
        return [self.constant(x, g)]

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            x = rng.uniform(-1, 1, self.space.dim)
            out.append(self.constant(float(x[0]) if self.space.dim == 1 else tuple(map(float, x))))
        return out

    def membership(self, phi, local=False):
        if self.group.is_finite:
            vals = [phi(e) for e in phi.domain.sorted()]
            spread = max(self.space.metric(vals[0], v) for v in vals)
        else:
            if not local and not phi.domain.is_whole:
                return non_member(1.0, "constant maps are defined on the whole group")
            ev = phi.evaluator
            if isinstance(ev, PiecewiseLinear):
                spread = max(abs(float(s)) for _, _, s in ev.pieces())
            else:
                xs = phi.values(phi.interior_grid(PROBE_RADIUS, 1e-9, 2001))
                spread = float(np.nanmax(xs) - np.nanmin(xs)) if xs.ndim == 1 else float(
                    np.max(np.nanmax(xs, axis=0) - np.nanmin(xs, axis=0)))
        if spread > self.tol_point:
            return non_member(spread, "map is not constant")
        return Membership(MemberStatus.MEMBER, spread)


def constant_solution_set(space: StateSpace = EUCLIDEAN_1, group: TimeGroup = REALS) -> ConstantSolutionSet:
    return ConstantSolutionSet(space, group)


# ---------------------------------------------------------------------------
# group actions


@dataclass(frozen=True)
class ActionSystem:
    """A left action ``action(g, x)``; over the reals it must broadcast over ``g``."""

    action: Callable
    group: TimeGroup = REALS
    space: StateSpace = EUCLIDEAN_1
    name: str = "action"

    def __call__(self, g, x):
        return self.action(g, x)

    def axiom_residual(self, n: int = 1000, seed: int = 0, scale: float = 2.0) -> float:
        """Max of ``d(π(e,x), x)`` and ``d(π(g, π(h,x)), π(gh, x))`` over samples."""
        rng = np.random.default_rng(seed)
        G = self.group
        worst = 0.0
        for _ in range(n):
            g, h = G.random_element(rng, scale), G.random_element(rng, scale)
            if self.space.kind == "discrete":
                x = self.space.labels[int(rng.integers(len(self.space.labels)))]
            else:
                x = float(rng.uniform(-scale, scale)) if self.space.dim == 1 else tuple(rng.uniform(-scale, scale, self.space.dim))
            worst = max(worst, self.space.metric(self.action(G.identity, x), x))
            gh = G.op(g, h)
            gh = float(gh) if G.kind == "reals" else gh
            worst = max(worst, self.space.metric(self.action(g, self.action(h, x)), self.action(gh, x)))
        return worst


def translation_action(speed: float = 1.0) -> ActionSystem:
    return ActionSystem(lambda t, x: x + speed * t, REALS, EUCLIDEAN_1, f"translation(speed={speed:g})")


def decay_action(rate: float = 1.0) -> ActionSystem:
    return ActionSystem(lambda t, x: x * np.exp(-rate * np.asarray(t, dtype=float)), REALS, EUCLIDEAN_1,
                        f"decay(rate={rate:g})")


def permutation_action(n: int) -> ActionSystem:
    """``S_n`` acting on the labels ``0..n-1`` by ``g . i = g[i]``."""
    return ActionSystem(lambda g, i: g[i], permutation_group(n), discrete(range(n)), f"permutations(n={n})")


class ActionSolutionSet(SolutionSet):
    """The orbit maps ``π(·, x)`` of a group action."""

    def __init__(self, act: ActionSystem, sample_scale: float = 1.0):
        self.act = act
        self.group = act.group
        self.space = act.space
        self.descriptor = act.name
        self.complete = True
        self.unique_exact = True
        self.sigma_invariant = True
        self.claimed_domain = IntervalDomain.whole() if act.group.kind == "reals" else (
            act.group.whole() if act.group.is_finite else None)
        self.sample_scale = sample_scale

    def orbit_map(self, y, anchor=None) -> PartialMap:
        tag = {"system": self.descriptor, "base_point": y, "anchor": anchor if anchor is not None else (self.group.identity, y)}
        if self.group.is_finite:
            table = {g: self.act(g, y) for g in self.group.elements()}
            return PartialMap(self.group.whole(), Table(table), tag, self.space.dim)
        act = self.act
        return PartialMap(IntervalDomain.whole(), ClosedForm(lambda t: act(t, y), self.space.dim), tag, self.space.dim)

    def through(self, g, x, budget=1):
        gi = self.group.inv(g)
        y = self.act(float(gi) if self.group.kind == "reals" else gi, x)
        return [self.orbit_map(y, (g, x))]

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(count):
            if self.space.kind == "discrete":
                y = self.space.labels[int(rng.integers(len(self.space.labels)))]
            else:
                y = float(rng.uniform(-self.sample_scale, self.sample_scale))
            out.append(self.orbit_map(y))
        return out

    def membership(self, phi, local=False):
        e = self.group.identity
        if self.group.is_finite:
            if not local and not phi.domain.is_whole:
                return non_member(1.0, "orbit maps are defined on the whole group")
            g0 = next(iter(phi.domain.sorted()))
            y = self.act(self.group.inv(g0), phi(g0))
            worst = max(self.space.metric(phi(g), self.act(g, y)) for g in phi.domain.sorted())
        else:
            if not local and not phi.domain.is_whole:
                return non_member(1.0, "orbit maps are defined on the whole group")
            t0 = float(_anchor_time(phi)) if not phi.domain.contains(e) else 0.0
            y = self.act(-t0, phi(t0))
            ts = _probe_grid(phi, t0, PROBE_RADIUS, 2001)
            ref = np.asarray(self.act(ts, y), dtype=float)
            worst = float(np.max(np.abs(phi.values(ts) - ref) / (1 + np.abs(ref))))
        if worst > TOL_RESID:
            return non_member(worst, "not an orbit map of the action")
        return Membership(MemberStatus.MEMBER, worst)


def action_solution_set(act: ActionSystem, **kw) -> ActionSolutionSet:
    return ActionSolutionSet(act, **kw)


# ---------------------------------------------------------------------------
# finite automorphism family


class FiniteAutSolutionSet(SolutionSet):
    """All maps from ``S_n`` (the automorphisms of an ``n``-point space) to ``R^n``.

    ``R^n`` stands for ``C(X)``: a function on ``n`` points is its value
    vector. Values are exact Fractions.
    """

    def __init__(self, n: int):
        if not 2 <= n <= 6:
            raise InvalidParameter("finite automorphism family supports 2 <= n <= 6")
        self.n = n
        self.group = permutation_group(n)
        self.space = euclidean(n)
        self.descriptor = f"finite-aut(n={n})"
        self.complete = True
        self.sigma_invariant = True
        self.claimed_domain = self.group.whole()
        self._elements = self.group.elements()

    def _vec(self, rng) -> tuple:
        return tuple(Fraction(int(k), 8) for k in rng.integers(-8, 9, self.n))

    def table(self, values: dict) -> PartialMap:
        return PartialMap(self.group.whole(), Table(values), {"system": self.descriptor}, self.n)

    def through(self, g, x, budget=1):
        g = tuple(g)
        x = tuple(exact(v) for v in x)
        seed = abs(hash((g, tuple(float(v) for v in x)))) % 2 ** 32
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(budget):
            values = {e: self._vec(rng) for e in self._elements}
            values[g] = x
            phi = self.table(values)
            phi.tag["anchor"] = (g, x)
            out.append(phi)
        return out

    def sample(self, count, seed=0):
        rng = np.random.default_rng(seed)
        return [self.table({e: self._vec(rng) for e in self._elements}) for _ in range(count)]

    def membership(self, phi, local=False):
        if not isinstance(phi.domain, ElementDomain) or phi.domain.group != self.group:
            return non_member(1.0, "maps must be indexed by the permutation group")
        if not local and not phi.domain.is_whole:
            return non_member(1.0, "maps must be defined on the whole group")
        for g in phi.domain.sorted():
            v = phi(g)
            if len(v) != self.n:
                return non_member(1.0, "value is not a vector of the right length", at=list(g))
        return MEMBER

    def default_window(self):
        return BoxWindow(times=tuple(self._elements), box=((-1.0, 1.0),) * self.n)


def finite_aut_system(n: int) -> tuple:
    """``(S_X, W_X)`` for an ``n``-point discrete space, window bounded to ``[-1, 1]^n``."""
    S = FiniteAutSolutionSet(n)
    return S, S.default_window()
