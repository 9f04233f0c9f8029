"""Ground types: time groups, state spaces, open domains and partial maps.

A partial map is a continuous map defined on an open subset of a time
group. Evaluating it outside its domain returns :data:`UNDEFINED`, which
stands in for the extra point that compactifies the state space.

Real interval endpoints are stored as :class:`fractions.Fraction` (or
``±inf``) so that translating a domain back and forth is exact.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyRestriction, InvalidParameter

GUARD = 1e-12
INF = math.inf


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Undefined"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Undefined, ())


UNDEFINED = _Undefined()


def is_undefined(value) -> bool:
    return value is UNDEFINED


def exact(value):
    """Return ``value`` as a Fraction, leaving infinities as floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    value = float(value)
    if math.isinf(value):
        return value
    if math.isnan(value):
        raise InvalidParameter("NaN is not a valid group element or endpoint")
    return Fraction(value)


# ---------------------------------------------------------------------------
# time groups


@dataclass(frozen=True)
class TimeGroup:
    """One of the supported locally compact time groups.

    ``kind`` is ``"reals"``, ``"integers"`` or ``"permutations"``; for the
    latter ``n`` is the number of permuted letters and elements are tuples
    ``p`` with ``p[i]`` the image of ``i``.
    """

    kind: str
    n: int = 0

    def __post_init__(self):
        if self.kind not in ("reals", "integers", "permutations"):
            raise InvalidParameter(f"unknown time group kind {self.kind!r}")
        if self.kind == "permutations" and self.n < 1:
            raise InvalidParameter("permutation group needs n >= 1")

    @property
    def is_finite(self) -> bool:
        return self.kind == "permutations"

    @property
    def is_discrete(self) -> bool:
        return self.kind != "reals"

    @property
    def identity(self):
        if self.kind == "reals":
            return 0.0
        if self.kind == "integers":
            return 0
        return tuple(range(self.n))

    def op(self, g, h):
        """Group product ``gh``; exact for reals (Fraction result unless both are ints)."""
        if self.kind == "reals":
            if isinstance(g, (int, np.integer)) and isinstance(h, (int, np.integer)):
                return int(g) + int(h)
            return exact(g) + exact(h)
        if self.kind == "integers":
            return int(g) + int(h)
        return tuple(g[h[i]] for i in range(self.n))

    def inv(self, g):
        if self.kind in ("reals", "integers"):
            return -g
        out = [0] * self.n
        for i, gi in enumerate(g):
            out[gi] = i
        return tuple(out)

    def metric(self, g, h) -> float:
        if self.kind == "permutations":
            return 0.0 if tuple(g) == tuple(h) else 1.0
        return abs(float(g) - float(h))

    def elements(self) -> list:
        if self.kind != "permutations":
            raise InvalidParameter(f"{self.kind} is not a finite group")
        return list(permutations(range(self.n)))

    def random_element(self, rng: np.random.Generator, scale: float = 1.0):
        if self.kind == "reals":
            return float(rng.uniform(-scale, scale))
        if self.kind == "integers":
            k = max(1, int(scale))
            return int(rng.integers(-k, k + 1))
        return tuple(int(i) for i in rng.permutation(self.n))

    def compact_exhaustion(self, m: int, scale: float = 1.0, h_grid: float = 1e-3) -> "CompactSet":
        """``K_m``: increasing compacts whose union is the whole group."""
        if m < 1:
            raise InvalidParameter("exhaustion index starts at 1")
        if self.kind == "reals":
            r = m * scale
            return CompactSet(intervals=((-r, r),), h_grid=h_grid)
        if self.kind == "integers":
            return CompactSet(elements=tuple(range(-m, m + 1)))
        return CompactSet(elements=tuple(self.elements()))

    def whole(self) -> "OpenDomain":
        if self.kind == "reals":
            return IntervalDomain.whole()
        if self.kind == "integers":
            raise InvalidParameter("the integers have no finite element set; use ElementDomain explicitly")
        return ElementDomain(frozenset(self.elements()), self)


REALS = TimeGroup("reals")
INTEGERS = TimeGroup("integers")


def permutation_group(n: int) -> TimeGroup:
    return TimeGroup("permutations", n)


# ---------------------------------------------------------------------------
# state spaces


@dataclass(frozen=True)
class StateSpace:
    """Euclidean ``R^dim`` or a finite discrete label set."""

    kind: str = "euclidean"
    dim: int = 1
    labels: tuple = ()

    def __post_init__(self):
        if self.kind not in ("euclidean", "discrete"):
            raise InvalidParameter(f"unknown state space kind {self.kind!r}")

    def metric(self, x, y) -> float:
        if self.kind == "discrete":
            return 0.0 if x == y else 1.0
        if self.dim == 1 and np.ndim(x) == 0 and np.ndim(y) == 0:
            return float(abs(x - y))
        return math.sqrt(sum(float(a - b) ** 2 for a, b in zip(x, y)))


EUCLIDEAN_1 = StateSpace("euclidean", 1)


def euclidean(n: int = 1) -> StateSpace:
    return StateSpace("euclidean", n)


def discrete(labels: Iterable) -> StateSpace:
    labels = tuple(labels)
    return StateSpace("discrete", len(labels), labels)


# ---------------------------------------------------------------------------
# open domains


class OpenDomain:
    """Common protocol of the two domain representations."""

    def contains(self, g) -> bool:
        raise NotImplementedError

    def translate(self, g) -> "OpenDomain":
        raise NotImplementedError

    def intersect(self, other: "OpenDomain") -> "OpenDomain":
        raise NotImplementedError

    @property
    def is_empty(self) -> bool:
        raise NotImplementedError

    def __contains__(self, g):
        return self.contains(g)


def _inside(t: float, a, b) -> bool:
    if a != -INF and not t - float(a) > GUARD:
        return False
    if b != INF and not float(b) - t > GUARD:
        return False
    return True


@dataclass(frozen=True)
class IntervalDomain(OpenDomain):
    """Finite union of disjoint open intervals of the real line."""

    intervals: tuple = ()

    def __post_init__(self):
        cleaned = []
        for a, b in self.intervals:
            a, b = exact(a), exact(b)
            if a == INF or b == -INF or not a < b:
                continue
            cleaned.append((a, b))
        cleaned.sort(key=lambda ab: ab[0])
        merged: list = []
        for a, b in cleaned:
            # open intervals that only touch stay separate: the shared point is excluded
            if merged and a < merged[-1][1]:
                pa, pb = merged[-1]
                merged[-1] = (pa, max(pb, b))
            else:
                merged.append((a, b))
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def of(cls, *intervals) -> "IntervalDomain":
        return cls(tuple(intervals))

    @classmethod
    def whole(cls) -> "IntervalDomain":
        return cls(((-INF, INF),))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def is_whole(self) -> bool:
        return self.intervals == ((-INF, INF),)

    @property
    def is_interval(self) -> bool:
        return len(self.intervals) == 1

    def hull(self) -> tuple:
        if not self.intervals:
            raise EmptyRestriction("empty domain has no hull")
        return self.intervals[0][0], self.intervals[-1][1]

    def contains(self, g) -> bool:
        if isinstance(g, Fraction):
            for a, b in self.intervals:
                if a < g < b and _inside(float(g), a, b):
                    return True
            return False
        t = float(g)
        if math.isnan(t):
            return False
        return any(_inside(t, a, b) for a, b in self.intervals)

    def contains_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        mask = np.zeros(ts.shape, dtype=bool)
        for a, b in self.intervals:
            m = np.ones(ts.shape, dtype=bool)
            if a != -INF:
                m &= ts - float(a) > GUARD
            if b != INF:
                m &= float(b) - ts > GUARD
            mask |= m
        return mask

    def translate(self, g) -> "IntervalDomain":
        """``{h : h + g in D}``."""
        g = exact(g)
        return IntervalDomain(tuple((a - g, b - g) for a, b in self.intervals))

    def intersect(self, other: "OpenDomain") -> "IntervalDomain":
        if not isinstance(other, IntervalDomain):
            raise InvalidParameter("cannot intersect domains over different groups")
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if lo < hi:
                    out.append((lo, hi))
        return IntervalDomain(tuple(out))

    def union(self, other: "IntervalDomain") -> "IntervalDomain":
        return IntervalDomain(self.intervals + other.intervals)

    def component_of(self, g) -> tuple | None:
        for a, b in self.intervals:
            if IntervalDomain(((a, b),)).contains(g):
                return a, b
        return None

    def inner_compact(self, radius: float = INF, margin: float = 0.0) -> list:
        """Closed intervals ``[a+margin, b-margin]`` clipped to ``[-radius, radius]``."""
        out = []
        for a, b in self.intervals:
            lo = -radius if a == -INF else float(a) + margin
            hi = radius if b == INF else float(b) - margin
            lo, hi = max(lo, -radius), min(hi, radius)
            if lo <= hi:
                out.append((lo, hi))
        return out

    def to_json(self):
        return {"kind": "intervals", "intervals": [[_num_json(a), _num_json(b)] for a, b in self.intervals]}

    def __repr__(self):
        parts = [f"({_num_str(a)}, {_num_str(b)})" for a, b in self.intervals]
        return "IntervalDomain[" + " ∪ ".join(parts) + "]"


@dataclass(frozen=True)
class ElementDomain(OpenDomain):
    """Explicit element set of a discrete group (every subset is open)."""

    elements: frozenset
    group: TimeGroup = INTEGERS

    def __post_init__(self):
        object.__setattr__(self, "elements", frozenset(self.elements))

    @property
    def is_empty(self) -> bool:
        return not self.elements

    @property
    def is_whole(self) -> bool:
        return self.group.is_finite and len(self.elements) == math.factorial(self.group.n)

    def contains(self, g) -> bool:
        try:
            return g in self.elements
        except TypeError:
            return False

    def translate(self, g) -> "ElementDomain":
        """``D g^{-1}``."""
        gi = self.group.inv(g)
        return ElementDomain(frozenset(self.group.op(d, gi) for d in self.elements), self.group)

    def intersect(self, other: "OpenDomain") -> "ElementDomain":
        if not isinstance(other, ElementDomain):
            raise InvalidParameter("cannot intersect domains over different groups")
        return ElementDomain(self.elements & other.elements, self.group)

    def sorted(self) -> list:
        return sorted(self.elements)

    def to_json(self):
        return {"kind": "elements", "elements": [list(e) if isinstance(e, tuple) else e for e in self.sorted()]}


def translate_domain(domain: OpenDomain, g) -> OpenDomain:
    """Return ``{h : hg in domain}`` (``domain - g`` for additive groups)."""
    return domain.translate(g)


def _num_str(v) -> str:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return str(v)


def _num_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def parse_num(v):
    """Inverse of the JSON number encoding used for endpoints and breakpoints."""
    if isinstance(v, str):
        if v in ("inf", "+inf"):
            return INF
        if v == "-inf":
            return -INF
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    return exact(v)


# ---------------------------------------------------------------------------
# compact sets


@dataclass(frozen=True)
class CompactSet:
    """Finite union of closed intervals, or a finite element set.

    ``grid()`` returns the sample points used by every sup-type estimate;
    consecutive points are at most ``h_grid`` apart and both endpoints of
    each interval are included.
    """

    intervals: tuple = ()
    elements: tuple = ()
    h_grid: float = 1e-3

    @property
    def is_discrete(self) -> bool:
        return not self.intervals

    def grid(self, extra: Sequence[float] = ()) -> np.ndarray | list:
        if self.is_discrete:
            return list(self.elements)
        pts = []
        for a, b in self.intervals:
            n = max(1, int(math.ceil((b - a) / self.h_grid)))
            pts.append(np.linspace(a, b, n + 1))
            inner = [e for e in extra if a < e < b]
            if inner:
                pts.append(np.asarray(inner, dtype=float))
        return np.unique(np.concatenate(pts))

    def contained_in(self, domain: OpenDomain) -> bool:
        if self.is_discrete:
            return all(domain.contains(e) for e in self.elements)
        return bool(np.all(domain.contains_many(self.grid())))

    def to_json(self):
        if self.is_discrete:
            return {"elements": [list(e) if isinstance(e, tuple) else e for e in self.elements]}
        return {"intervals": [list(ab) for ab in self.intervals], "h_grid": self.h_grid}


# ---------------------------------------------------------------------------
# evaluators


class ClosedForm:
    """Vectorised callable ``fn(ts) -> values`` (numpy broadcasting)."""

    def __init__(self, fn: Callable, dim: int = 1):
        self.fn = fn
        self.dim = dim

    def evaluate(self, t):
        r = self.fn(float(t))
        if np.ndim(r) == 0:
            return float(r)
        return np.asarray(r, dtype=float)

    def evaluate_many(self, ts) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(ts, dtype=float)), dtype=float)


class PiecewiseLinear:
    """Piecewise-linear interpolant through ``(ts[i], xs[i])``.

    Outside ``[ts[0], ts[-1]]`` the map continues with ``left_slope`` /
    ``right_slope`` (defaulting to the end segments). When every datum is a
    Fraction, scalar evaluation at a Fraction argument is exact.
    """

    def __init__(self, ts: Sequence, xs: Sequence, left_slope=None, right_slope=None):
        if len(ts) != len(xs) or len(ts) == 0:
            raise InvalidParameter("breakpoints and values must be nonempty and of equal length")
        self.ts = tuple(ts)
        self.xs = tuple(xs)
        self._tf = np.asarray([float(t) for t in self.ts])
        self._xf = np.asarray([float(x) for x in self.xs])
        if len(self.ts) > 1 and not np.all(np.diff(self._tf) > 0):
            raise InvalidParameter("interpolation grid must be strictly increasing")
        if len(self.ts) == 1:
            zero = Fraction(0) if isinstance(self.xs[0], Fraction) else 0.0
            left_slope = zero if left_slope is None else left_slope
            right_slope = zero if right_slope is None else right_slope
        if left_slope is None:
            left_slope = (self.xs[1] - self.xs[0]) / (self.ts[1] - self.ts[0])
        if right_slope is None:
            right_slope = (self.xs[-1] - self.xs[-2]) / (self.ts[-1] - self.ts[-2])
        self.left_slope = left_slope
        self.right_slope = right_slope
        self.dim = 1
        self._exact = all(isinstance(v, Fraction) for v in self.ts + self.xs + (left_slope, right_slope))

    @property
    def is_exact(self) -> bool:
        return self._exact

    def evaluate(self, t):
        if isinstance(t, Fraction) and self._exact:
            return self._eval(t, self.ts, self.xs, self.left_slope, self.right_slope)
        return float(
            self._eval(float(t), self._tf, self._xf, float(self.left_slope), float(self.right_slope))
        )

    @staticmethod
    def _eval(t, ts, xs, ls, rs):
        if t <= ts[0]:
            return xs[0] + ls * (t - ts[0])
        if t >= ts[-1]:
            return xs[-1] + rs * (t - ts[-1])
        i = bisect.bisect_right(ts, t) - 1
        t0, t1, x0, x1 = ts[i], ts[i + 1], xs[i], xs[i + 1]
        return x0 + (x1 - x0) * (t - t0) / (t1 - t0)

    def evaluate_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.interp(ts, self._tf, self._xf)
        lo = ts < self._tf[0]
        hi = ts > self._tf[-1]
        out[lo] = self._xf[0] + float(self.left_slope) * (ts[lo] - self._tf[0])
        out[hi] = self._xf[-1] + float(self.right_slope) * (ts[hi] - self._tf[-1])
        return out

    def pieces(self) -> list:
        """``[(a, b, slope), ...]`` covering the whole line, edges unbounded."""
        out = [(-INF, self.ts[0], self.left_slope)]
        for i in range(len(self.ts) - 1):
            dt = self.ts[i + 1] - self.ts[i]
            out.append((self.ts[i], self.ts[i + 1], (self.xs[i + 1] - self.xs[i]) / dt))
        out.append((self.ts[-1], INF, self.right_slope))
        return out

    def affine(self, t_scale=1, t_shift=0, x_scale=1, x_shift=0) -> "PiecewiseLinear":
        """The interpolant of ``s -> x_scale * f((s - t_shift) / t_scale) + x_shift``."""
        if t_scale == 0:
            raise InvalidParameter("time scale must be nonzero")
        ts = [t_scale * t + t_shift for t in self.ts]
        xs = [x_scale * x + x_shift for x in self.xs]
        ls = x_scale * self.left_slope / t_scale
        rs = x_scale * self.right_slope / t_scale
        if t_scale < 0:
            ts, xs = ts[::-1], xs[::-1]
            ls, rs = rs, ls
        return PiecewiseLinear(ts, xs, ls, rs)

    def to_json(self):
        return {
            "kind": "pwl",
            "ts": [_num_json(t) for t in self.ts],
            "xs": [_num_json(x) for x in self.xs],
            "left_slope": _num_json(self.left_slope),
            "right_slope": _num_json(self.right_slope),
        }

    @classmethod
    def from_json(cls, data) -> "PiecewiseLinear":
        conv = parse_num if all(isinstance(v, str) for v in data["ts"]) else float
        return cls(
            [conv(t) for t in data["ts"]],
            [conv(x) for x in data["xs"]],
            conv(data["left_slope"]),
            conv(data["right_slope"]),
        )


class Table:
    """Explicit value table over a finite element set."""

    def __init__(self, values: Mapping):
        self.values = dict(values)
        self.dim = 1

    def evaluate(self, g):
        return self.values[g]


class Shifted:
    """``x -> base(x g)`` for an arbitrary evaluator over an additive group."""

    def __init__(self, base, g):
        self.base = base
        self.g = g
        self.g_float = float(g)
        self.dim = getattr(base, "dim", 1)

    def evaluate(self, x):
        if isinstance(x, Fraction):
            return self.base.evaluate(x + exact(self.g))
        return self.base.evaluate(float(x) + self.g_float)

    def evaluate_many(self, xs) -> np.ndarray:
        return self.base.evaluate_many(np.asarray(xs, dtype=float) + self.g_float)


class Composed:
    """``t -> state_map(base(time_inv(t)))`` with vectorised callables."""

    def __init__(self, base, time_inv: Callable, state_map: Callable, dim: int = 1):
        self.base = base
        self.time_inv = time_inv
        self.state_map = state_map
        self.dim = dim

    def evaluate(self, t):
        v = self.state_map(self.base.evaluate(self.time_inv(t)))
        return float(v) if np.ndim(v) == 0 else v

    def evaluate_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return np.asarray(self.state_map(self.base.evaluate_many(self.time_inv(ts))), dtype=float)


# ---------------------------------------------------------------------------
# partial maps


@dataclass(frozen=True, eq=False)
class PartialMap:
    """Continuous map on an open subset of the time group."""

    domain: OpenDomain
    evaluator: Any
    tag: dict = field(default_factory=dict)
    dim: int = 1

    def __post_init__(self):
        if self.domain.is_empty:
            raise EmptyRestriction("a partial map needs a nonempty domain")

    def __call__(self, g):
        if not self.domain.contains(g):
            return UNDEFINED
        return self.evaluator.evaluate(g)

    def values(self, ts) -> np.ndarray:
        """Vectorised evaluation over reals; NaN marks Undefined."""
        ts = np.asarray(ts, dtype=float)
        mask = self.domain.contains_many(ts)
        shape = ts.shape if self.dim == 1 else ts.shape + (self.dim,)
        out = np.full(shape, np.nan)
        if mask.any():
            vals = self.evaluator.evaluate_many(ts[mask])
            if self.dim > 1 and vals.shape[0] == self.dim and vals.ndim == 2 and vals.shape[1] == mask.sum():
                vals = vals.T
            out[mask] = vals
        return out

    @property
    def is_pwl(self) -> bool:
        return isinstance(self.evaluator, PiecewiseLinear)

    def interior_grid(self, radius: float = 10.0, margin: float = 1e-6, n: int = 2001) -> np.ndarray:
        """Evenly spaced points inside the domain (clipped to ``[-radius, radius]``)."""
        if not isinstance(self.domain, IntervalDomain):
            raise InvalidParameter("interior_grid is only defined over the reals")
        parts = self.domain.inner_compact(radius, margin)
        total = sum(b - a for a, b in parts) or 1.0
        pts = []
        for a, b in parts:
            k = max(2, int(round(n * (b - a) / total)))
            pts.append(np.linspace(a, b, k))
        return np.unique(np.concatenate(pts)) if pts else np.empty(0)

    def with_tag(self, **kw) -> "PartialMap":
        tag = dict(self.tag)
        tag.update(kw)
        return PartialMap(self.domain, self.evaluator, tag, self.dim)

    def __repr__(self):
        label = self.tag.get("name") or self.tag.get("system") or type(self.evaluator).__name__
        return f"PartialMap({label}, {self.domain!r})"


def closed_form(fn: Callable, domain: OpenDomain | None = None, dim: int = 1, **tag) -> PartialMap:
    domain = IntervalDomain.whole() if domain is None else domain
    return PartialMap(domain, ClosedForm(fn, dim), tag, dim)


def interpolant(ts, xs, domain: OpenDomain | None = None, left_slope=None, right_slope=None, **tag) -> PartialMap:
    pwl = PiecewiseLinear(ts, xs, left_slope, right_slope)
    domain = IntervalDomain.whole() if domain is None else domain
    return PartialMap(domain, pwl, tag)


def grid_interpolant(fn: Callable, a: float, b: float, spacing: float = 1e-3, **tag) -> PartialMap:
    """Sample ``fn`` on a grid of ``(a, b)`` and interpolate linearly."""
    n = max(2, int(math.ceil((b - a) / spacing)))
    domain = IntervalDomain.of((a, b))
    ts = np.linspace(a, b, n + 1)[1:-1] if n > 2 else np.array([(a + b) / 2])
    ts = ts[domain.contains_many(ts)]
    return PartialMap(domain, PiecewiseLinear(ts, np.asarray(fn(ts), dtype=float)), tag)


def table_map(values: Mapping, group: TimeGroup, dim: int = 1, **tag) -> PartialMap:
    return PartialMap(ElementDomain(frozenset(values), group), Table(values), tag, dim)


def eval_map(phi: PartialMap, g):
    """``phi(g)`` or :data:`UNDEFINED` outside ``dom phi``."""
    return phi(g)


def restrict(phi: PartialMap, domain: OpenDomain) -> PartialMap:
    new = phi.domain.intersect(domain)
    if new.is_empty:
        raise EmptyRestriction(f"{domain!r} misses the domain of {phi!r}")
    return PartialMap(new, phi.evaluator, dict(phi.tag), phi.dim)
