"""One-sided ODE integration up to blow-up, window exit or the time horizon.

Integration stops when the state norm passes ``blowup``. If the local
growth rate is super-linear (``|f| ~ |x|^p`` with ``p > 1``) the remaining
time to blow-up is extrapolated from the power law, which puts the domain
endpoint within ~1e-11 of the true escape time for quadratic growth. For
linear or slower growth the endpoint is the stopping time itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegrationFailure

T_MAX = 1e3
BLOWUP = 1e6
RTOL = 1e-13
ATOL = 1e-12


@dataclass(frozen=True)
class OdeSettings:
    t_max: float = T_MAX
    blowup: float = BLOWUP
    rtol: float = RTOL
    atol: float = ATOL
    window: tuple | None = None  # (lo, hi) arrays per coordinate, open box


def _as_vec(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _wrap(rhs: Callable, dim: int) -> Callable:
    if dim == 1:
        return lambda t, y: np.atleast_1d(rhs(t, y[0]))
    return lambda t, y: np.asarray(rhs(t, y), dtype=float)


@dataclass
class Branch:
    """Integration from ``t0`` in one direction.

    ``t_end`` is the (open) domain endpoint; ``t_stop`` the last time the
    integrator reached. Between them the blow-up power law is used.
    """

    t0: float
    x0: np.ndarray
    direction: int
    t_stop: float
    x_stop: np.ndarray
    t_end: float
    reason: str
    sol: object
    exponent: float = 0.0

    def evaluate_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.size, self.x0.size))
        if self.sol is None:
            out[:] = self.x0
            return out
        span = (ts - self.t_stop) * self.direction
        regular = span <= 0
        if regular.any():
            out[regular] = np.asarray(self.sol(ts[regular])).T.reshape(-1, self.x0.size)
        gap = ~regular
        if gap.any():
            out[gap] = self._tail(ts[gap])
        return out

    def _tail(self, ts: np.ndarray) -> np.ndarray:
        if self.reason != "blowup" or self.exponent <= 1:
            # horizon/window stop: the endpoint equals t_stop, nothing to fill
            return np.repeat(self.x_stop[None, :], ts.size, axis=0)
        remaining = abs(self.t_end - self.t_stop)
        left = np.maximum(np.abs(self.t_end - ts), 1e-300)
        factor = (remaining / left) ** (1.0 / (self.exponent - 1.0))
        return self.x_stop[None, :] * factor[:, None]


def integrate_branch(rhs: Callable, t0: float, x0, direction: int, settings: OdeSettings = OdeSettings()) -> Branch:
    x0 = _as_vec(x0)
    dim = x0.size
    f = _wrap(rhs, dim)
    t0 = float(t0)
    horizon = settings.t_max * direction
    if (horizon - t0) * direction <= 0:
        return Branch(t0, x0, direction, t0, x0, t0, "horizon", None)

    def blow(t, y):
        return float(np.linalg.norm(y)) - settings.blowup

    blow.terminal = True
    events = [blow]
    if settings.window is not None:
        lo, hi = (np.asarray(v, dtype=float) for v in settings.window)

        def leave(t, y):
            return float(np.min(np.concatenate([y - lo, hi - y])))

        leave.terminal = True
        events.append(leave)

    if np.linalg.norm(x0) >= settings.blowup:
        t_end, p = _extrapolate(f, t0, x0, direction)
        return Branch(t0, x0, direction, t0, x0, t_end, "blowup", None, p)

    res = solve_ivp(
        f,
        (t0, horizon),
        x0,
        method="DOP853",
        rtol=settings.rtol,
        atol=settings.atol,
        dense_output=True,
        events=events,
    )
    if res.status == -1:
        raise IntegrationFailure(f"integrator failed from t0={t0}: {res.message}")
    t_stop = float(res.t[-1])
    x_stop = res.y[:, -1].copy()
    if res.status == 1 and res.t_events[0].size:
        t_end, p = _extrapolate(f, t_stop, x_stop, direction)
        return Branch(t0, x0, direction, t_stop, x_stop, t_end, "blowup", res.sol, p)
    if res.status == 1:
        return Branch(t0, x0, direction, t_stop, x_stop, t_stop, "window", res.sol)
    return Branch(t0, x0, direction, t_stop, x_stop, float(horizon), "horizon", res.sol)


def _extrapolate(f: Callable, t: float, x: np.ndarray, direction: int) -> tuple:
    """Remaining escape time from a local power-law fit of the vector field."""
    norm = float(np.linalg.norm(x))
    unit = x / norm
    v1 = f(t, x)
    v2 = f(t, 1.01 * x)
    radial = float(np.dot(v1, unit)) * direction
    n1, n2 = float(np.linalg.norm(v1)), float(np.linalg.norm(v2))
    if radial <= 0 or n1 == 0 or n2 == 0:
        return t, 0.0
    p = math.log(n2 / n1) / math.log(1.01)
    if p <= 1.05:
        return t, p
    remaining = norm / ((p - 1.0) * radial)
    return t + direction * remaining, p


class TwoSided:
    """Evaluator for a solution through ``(t0, x0)`` built from two branches."""

    def __init__(self, backward: Branch, forward: Branch):
        self.backward = backward
        self.forward = forward
        self.t0 = forward.t0
        self.dim = forward.x0.size

    @property
    def endpoints(self) -> tuple:
        return self.backward.t_end, self.forward.t_end

    def evaluate(self, t):
        v = self.evaluate_many(np.array([float(t)]))
        return float(v[0]) if self.dim == 1 else v[0]

    def evaluate_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.size, self.dim))
        fwd = ts >= self.t0
        if fwd.any():
            out[fwd] = self.forward.evaluate_many(ts[fwd])
        if (~fwd).any():
            out[~fwd] = self.backward.evaluate_many(ts[~fwd])
        return out[:, 0] if self.dim == 1 else out


def solve_through(rhs: Callable, t0: float, x0, settings: OdeSettings = OdeSettings()) -> TwoSided:
    back = integrate_branch(rhs, t0, x0, -1, settings)
    fwd = integrate_branch(rhs, t0, x0, +1, settings)
    return TwoSided(back, fwd)
