"""JSON/CSV encoding of domains, maps and trajectories, plus config parsing.

Piecewise-linear maps serialize exactly (Fractions as ``"p/q"`` strings).
Any other map is written as a CSV block of samples and comes back as an
interpolant on the same domain.
"""
from __future__ import annotations

import ast
import csv
import io
import json
import math
import operator
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .core import (
    ElementDomain,
    IntervalDomain,
    OpenDomain,
    PartialMap,
    PiecewiseLinear,
    Table,
    TimeGroup,
    _num_json,
    parse_num,
)
from .errors import ConfigError

SAMPLE_RADIUS = 10.0
SAMPLE_SPACING = 1e-2


# ---------------------------------------------------------------------------
# domains and maps


def domain_to_json(domain: OpenDomain) -> dict:
    data = domain.to_json()
    if isinstance(domain, ElementDomain):
        data["group"] = {"kind": domain.group.kind, "n": domain.group.n}
    return data


def domain_from_json(data: dict) -> OpenDomain:
    if data["kind"] == "intervals":
        return IntervalDomain(tuple((parse_num(a), parse_num(b)) for a, b in data["intervals"]))
    group = TimeGroup(**data.get("group", {"kind": "integers"}))
    elems = [tuple(e) if isinstance(e, list) else e for e in data["elements"]]
    return ElementDomain(frozenset(elems), group)


def _json_value(v):
    if isinstance(v, Fraction):
        return _num_json(v)
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_json_value(u) for u in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _tag_json(tag: dict) -> dict:
    out = {}
    for k, v in tag.items():
        try:
            json.dumps(_json_value(v))
        except TypeError:
            continue
        out[k] = _json_value(v)
    return out


def map_to_json(phi: PartialMap, radius: float = SAMPLE_RADIUS, spacing: float = SAMPLE_SPACING) -> dict:
    """Exact for interpolants and tables; CSV samples otherwise."""
    out = {"domain": domain_to_json(phi.domain), "dim": phi.dim, "tag": _tag_json(phi.tag)}
    ev = phi.evaluator
    if isinstance(ev, PiecewiseLinear):
        out["evaluator"] = ev.to_json()
    elif isinstance(phi.domain, ElementDomain):
        out["evaluator"] = {
            "kind": "table",
            "entries": [[_json_value(g), _json_value(phi(g))] for g in phi.domain.sorted()],
        }
    else:
        n = max(2, int(round(2 * radius / spacing)) + 1)
        ts = phi.interior_grid(radius, 1e-9, n)
        out["evaluator"] = {"kind": "samples", "csv": trajectory_csv(ts, phi.values(ts))}
    return out


def _parse_entry(v):
    if isinstance(v, list):
        return tuple(_parse_entry(u) for u in v)
    if isinstance(v, str):
        return parse_num(v)
    return v


def map_from_json(data: dict) -> PartialMap:
    domain = domain_from_json(data["domain"])
    ev = data["evaluator"]
    tag = dict(data.get("tag", {}))
    dim = data.get("dim", 1)
    if ev["kind"] == "pwl":
        return PartialMap(domain, PiecewiseLinear.from_json(ev), tag, dim)
    if ev["kind"] == "table":
        values = {_parse_entry(g): _parse_entry(x) for g, x in ev["entries"]}
        return PartialMap(domain, Table(values), tag, dim)
    ts, xs = read_trajectory_csv(ev["csv"])
    if dim != 1:
        raise ConfigError("sampled witnesses are only supported for scalar maps")
    return PartialMap(domain, PiecewiseLinear(list(ts), list(xs[:, 0])), tag, dim)


def trajectory_csv(ts, xs) -> str:
    """CSV text with header ``t,x1,...,xn``."""
    xs = np.asarray(xs, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(xs.shape[1])])
    for t, row in zip(np.asarray(ts, dtype=float), xs):
        w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    return buf.getvalue()


def read_trajectory_csv(text: str):
    rows = list(csv.reader(io.StringIO(text)))
    body = np.asarray([[float(v) for v in r] for r in rows[1:]], dtype=float)
    return body[:, 0], body[:, 1:]


def write_trajectory(path: Path, phi: PartialMap, radius: float = SAMPLE_RADIUS, spacing: float = SAMPLE_SPACING):
    n = max(2, int(round(2 * radius / spacing)) + 1)
    ts = phi.interior_grid(radius, 1e-9, n)
    Path(path).write_text(trajectory_csv(ts, phi.values(ts)), encoding="utf-8")


def dumps(obj: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed separators, trailing newline)."""
    return json.dumps(_json_value_deep(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _json_value_deep(obj):
    if isinstance(obj, dict):
        return {str(k): _json_value_deep(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_value_deep(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return _json_value(obj)


# ---------------------------------------------------------------------------
# config files


def load_json(path) -> Any:
    """Read a JSON file; malformed input raises ConfigError with line context."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror or exc})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {context}") from exc


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh, "sinh": np.sinh, "cosh": np.cosh,
    "arctan": np.arctan,
}
_CONSTS = {"pi": math.pi, "e": math.e}


def compile_rhs(expr: str) -> Callable:
    """Turn an expression in ``t`` and ``x`` (``x1``, ``x2``... for vectors) into ``f(t, x)``.

    Only arithmetic, numeric literals and a small set of numpy functions are
    accepted; anything else is a ConfigError.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"rhs {expr!r}: {exc.msg}") from exc

    def check(node):
        if isinstance(node, ast.Expression):
            return check(node.body)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return check(node.left) and check(node.right)
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return check(node.operand)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return True
        if isinstance(node, ast.Name):
            if node.id in ("t", "x") or node.id in _CONSTS or (node.id[0] == "x" and node.id[1:].isdigit()):
                return True
            raise ConfigError(f"rhs {expr!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
            return all(check(a) for a in node.args)
        if isinstance(node, ast.List):
            return all(check(e) for e in node.elts)
        raise ConfigError(f"rhs {expr!r}: unsupported syntax {type(node).__name__}")

    check(tree)

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](ev(node.operand, env))
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.List):
            return [ev(e, env) for e in node.elts]
        return _FUNCS[node.func.id](*(ev(a, env) for a in node.args))

    def rhs(t, x):
        env = {"t": t, "x": x}
        if np.ndim(x) > 0:
            for i, xi in enumerate(np.asarray(x)):
                env[f"x{i + 1}"] = xi
        out = ev(tree, env)
        if isinstance(out, list):
            return np.asarray(out, dtype=float)
        return out + 0.0 * t if np.ndim(out) == 0 else out

    rhs.expr = expr
    return rhs


__all__ = [
    "compile_rhs",
    "domain_from_json",
    "domain_to_json",
    "dumps",
    "load_json",
    "map_from_json",
    "map_to_json",
    "read_trajectory_csv",
    "trajectory_csv",
    "write_trajectory",
]
