"""End-to-end reproduction of the four worked examples at desk scale.

``run_examples`` returns a JSON-ready report whose ``table`` is compared
with the checked-in ``data/expected_examples.json``.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from importlib import resources

import numpy as np

from .bebutov import is_equilibrium
from .morphism import (
    classify,
    finite_aut_morphism,
    function_grid,
    riccati_scaling,
    scaling_morphism,
    time_change,
    verify_morphism,
)
from .star import BoxWindow, check_compactness, check_uniqueness
from .systems import OdeSystem, inclusion_solution_set, ode_solution_set

EXAMPLE_IDS = ("ex1", "ex2", "ex3", "ex4")


def expected_table() -> dict:
    text = resources.files("starflow").joinpath("data/expected_examples.json").read_text(encoding="utf-8")
    return json.loads(text)


def unit_rate_system():
    """``x' = 1`` as a numerical ODE with global solutions."""
    rhs = lambda t, x: 1.0 + 0.0 * x  # noqa: E731
    rhs.expr = "1"
    return ode_solution_set(OdeSystem(rhs, label="x' = 1"), global_domain=True, autonomous=True)


def example1_systems() -> dict:
    half, one = Fraction(1, 2), Fraction(1)
    return {
        "x' in [1/2, 1]": inclusion_solution_set(lo=half, hi=one),
        "x' in {1/2, 1}": inclusion_solution_set(values=(half, one)),
        "x' = 1": unit_rate_system(),
    }


def _limit_summary(witness: dict) -> dict:
    limit = witness["limit"]["evaluator"]
    return {
        "sequence_length": len(witness["sequence"]),
        "limit_breakpoints": limit.get("ts"),
        "limit_values": limit.get("xs"),
        "membership": witness["membership"],
    }


def example1(seed: int, n_samples: int) -> dict:
    W = BoxWindow((-1.0, 1.0), ((-1.0, 1.0),))
    out = {"compactness": {}, "uniqueness": {}, "details": {}}
    for label, S in example1_systems().items():
        comp = check_compactness(S, W, seed=seed)
        uniq = check_uniqueness(S, W, n_samples=min(n_samples, 64), seed=seed)
        out["compactness"][label] = comp.verdict.value
        out["uniqueness"][label] = uniq.verdict.value
        detail = {"compactness_sample_size": comp.sample_size, "uniqueness_sample_size": uniq.sample_size}
        if comp.refuted:
            detail["compactness_witness"] = _limit_summary(comp.witness)
        if uniq.refuted:
            detail["uniqueness_witness"] = {"point": uniq.witness["point"], "distance": uniq.witness["distance"]}
        out["details"][label] = detail
    return out


def example2(seed: int, n_samples: int, n_maps: int) -> dict:
    out = {}
    for a, b in ((1.0, 4.0), (-1.0, -4.0)):
        m = riccati_scaling(a, b)
        rep = verify_morphism(m, n_samples, seed)
        cls = classify(m, n_maps=n_maps, seed=seed, strict=False, n_samples=n_samples, transport=False)
        c = math.sqrt(a / b)
        tc_err, gap = 0.0, 0.0
        for phi in m.source.sample(n_maps, seed):
            tc = time_change(m, phi)
            tc_err = max(tc_err, float(np.max(np.abs(np.asarray(tc.values) - c * np.asarray(tc.grid)))))
            gap = max(gap, float(tc.endpoints["gap"]) if tc.endpoints["gap"] != "inf" else math.inf)
        entry = {
            "morphism": rep.level.value,
            "classify": cls.level.value,
            "time_change": tc_err <= 1e-9,
            "endpoints": gap <= 1e-6,
            "residual": float(rep.ev_residual),
            "time_change_error": tc_err,
            "endpoint_gap": gap,
        }
        if a < 0:
            r_src, r_dst = math.sqrt(-a), math.sqrt(-b)
            checks = []
            for x in (r_src, -r_src):
                y = m.h(0.0, x)
                checks.append(is_equilibrium(x, m.source).holds and is_equilibrium(y, m.target).holds
                              and abs(abs(y) - r_dst) <= 1e-12)
            moving = (is_equilibrium(0.0, m.source).verdict == "Refuted"
                      and is_equilibrium(m.h(0.0, 0.0), m.target).verdict == "Refuted")
            entry["equilibria"] = all(checks) and moving
        out[m.name] = entry
    return out


def example3(seed: int, n_samples: int, n_maps: int) -> dict:
    half, one = Fraction(1, 2), Fraction(1)
    src = inclusion_solution_set(lo=half, hi=one)
    targets = {2: inclusion_solution_set(lo=one, hi=Fraction(2)), -1: inclusion_solution_set(lo=-one, hi=-half)}
    out = {}
    for c, T in targets.items():
        m = scaling_morphism(src, T, c)
        rep = classify(m, n_maps=n_maps, seed=seed, n_samples=n_samples, transport=False)
        out[m.name] = {"level": rep.level.value, "max_identity_deviation": rep.max_identity_deviation}
    return out


def example4(grid_size: int) -> dict:
    out = {}
    for n, h in ((2, (1, 0)), (3, (1, 2, 0))):
        m = finite_aut_morphism(n, h)
        pts = [(g, f) for g in m.source.group.elements() for f in function_grid(n, grid_size)]
        rep = verify_morphism(m, points=pts)
        out[f"n={n}"] = {"morphism": rep.level.value, "exact_zero": rep.exact_zero, "star_points": rep.n_samples}
    return out


def _table(results: dict) -> dict:
    table = {}
    if "ex1" in results:
        r = results["ex1"]
        table["ex1"] = {"compactness": r["compactness"], "uniqueness": r["uniqueness"]}
    if "ex2" in results:
        table["ex2"] = {k: {f: v[f] for f in ("morphism", "time_change", "endpoints", "equilibria") if f in v}
                        for k, v in results["ex2"].items()}
    if "ex3" in results:
        table["ex3"] = {k: v["level"] for k, v in results["ex3"].items()}
    if "ex4" in results:
        table["ex4"] = {k: {"morphism": v["morphism"], "exact_zero": v["exact_zero"]} for k, v in results["ex4"].items()}
    return table


def _compare(expected, actual, path: str, out: list):
    if isinstance(expected, dict):
        if not isinstance(actual, dict):
            out.append({"path": path, "expected": expected, "actual": actual})
            return
        for key, val in expected.items():
            _compare(val, actual.get(key), f"{path}.{key}", out)
    elif isinstance(expected, list):
        if actual not in expected:
            out.append({"path": path, "expected": expected, "actual": actual})
    elif expected != actual:
        out.append({"path": path, "expected": expected, "actual": actual})


def run_examples(seed: int = 0, only=None, n_samples: int = 200, n_maps: int = 10, grid_size: int = 216) -> dict:
    """Run the selected examples and compare their verdict table with the expected one."""
    ids = [e for e in EXAMPLE_IDS if only is None or e in only]
    results = {}
    if "ex1" in ids:
        results["ex1"] = example1(seed, n_samples)
    if "ex2" in ids:
        results["ex2"] = example2(seed, n_samples, n_maps)
    if "ex3" in ids:
        results["ex3"] = example3(seed, n_samples, n_maps)
    if "ex4" in ids:
        results["ex4"] = example4(grid_size)
    table = _table(results)
    expected = {k: v for k, v in expected_table().items() if k in ids}
    mismatches: list = []
    _compare(expected, table, "table", mismatches)
    return {
        "seed": seed,
        "examples": ids,
        "settings": {"n_samples": n_samples, "n_maps": n_maps, "grid_size": grid_size},
        "results": results,
        "table": table,
        "matches": not mismatches,
        "mismatches": mismatches,
    }


__all__ = ["EXAMPLE_IDS", "example1_systems", "expected_table", "run_examples", "unit_rate_system"]
