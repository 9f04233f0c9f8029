"""``starflow`` command line: axioms, converge, equiv and examples.

Exit codes: 0 success (or match), 1 verdict below the requested level or
examples mismatch, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import ast
import json
import logging
import platform
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import IntervalDomain, parse_num
from .errors import ConfigError, InvalidParameter, PreconditionFailed, StarflowError
from .io import compile_rhs, dumps, load_json, map_from_json, write_trajectory
from .morphism import (
    Level,
    classify,
    finite_aut_morphism,
    identity_morphism,
    riccati_scaling,
    scaling_morphism,
    time_reversal,
)
from .reproduce import EXAMPLE_IDS, run_examples
from .star import (
    BoxWindow,
    FiniteWindow,
    check_compactness,
    check_domain,
    check_existence,
    check_uniqueness,
)
from .systems import (
    OdeSystem,
    ConstantSolutionSet,
    action_solution_set,
    decay_action,
    finite_aut_system,
    inclusion_solution_set,
    ode_solution_set,
    permutation_action,
    riccati_solution_set,
    translation_action,
)
from .topology import test_convergence

log = logging.getLogger("starflow")

OK, BELOW, CONFIG = 0, 1, 2


# ---------------------------------------------------------------------------
# descriptors


def _num(v):
    return parse_num(v) if isinstance(v, str) else v


def _uses_time(expr: str) -> bool:
    return any(isinstance(n, ast.Name) and n.id == "t" for n in ast.walk(ast.parse(expr, mode="eval")))


def system_from_config(data: dict):
    """Build a solution set from a JSON descriptor (see README for the schema)."""
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("system descriptor needs a 'kind'")
    kind = data["kind"]
    try:
        if kind == "riccati":
            return riccati_solution_set(float(data["a"]))
        if kind == "ode":
            expr = str(data["rhs"])
            rhs = compile_rhs(expr)
            window = data.get("window")
            system = OdeSystem(rhs, int(data.get("dim", 1)), tuple(map(tuple, window)) if window else None,
                               label=data.get("label", f"x' = {expr}"))
            return ode_solution_set(system, global_domain=bool(data.get("global_domain", False)),
                                    autonomous=bool(data.get("autonomous", not _uses_time(expr))))
        if kind == "inclusion":
            if "values" in data:
                return inclusion_solution_set(values=tuple(_num(v) for v in data["values"]))
            return inclusion_solution_set(lo=_num(data["lo"]), hi=_num(data["hi"]))
        if kind == "action":
            name = data.get("name", "translation")
            if name == "translation":
                return action_solution_set(translation_action(float(data.get("speed", 1.0))))
            if name == "decay":
                return action_solution_set(decay_action(float(data.get("rate", 1.0))))
            if name == "permutations":
                return action_solution_set(permutation_action(int(data["n"])))
            raise ConfigError(f"unknown action {name!r}")
        if kind == "constants":
            return ConstantSolutionSet()
        if kind == "finite-aut":
            return finite_aut_system(int(data["n"]))[0]
    except KeyError as exc:
        raise ConfigError(f"system descriptor of kind {kind!r} is missing {exc.args[0]!r}") from exc
    except (InvalidParameter, ValueError, TypeError) as exc:
        raise ConfigError(f"system descriptor of kind {kind!r}: {exc}") from exc
    raise ConfigError(f"unknown system kind {kind!r}")


def window_from_config(data: dict, S=None):
    kind = data.get("type", data.get("kind"))
    try:
        if kind == "box":
            t = data.get("t", [-1.0, 1.0])
            times = tuple(tuple(g) for g in t) if t and isinstance(t[0], list) else (float(t[0]), float(t[1]))
            box = tuple((float(a), float(b)) for a, b in data.get("x", [[-1.0, 1.0]]))
            return BoxWindow(times, box, bool(data.get("closed", True)))
        if kind == "finite":
            return FiniteWindow.of((tuple(g) if isinstance(g, list) else _num(g), tuple(x) if isinstance(x, list) else _num(x))
                                   for g, x in data["points"])
        if kind == "default" and S is not None:
            return S.default_window()
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"window descriptor: {exc}") from exc
    raise ConfigError(f"unknown window type {kind!r}")


def _load_systems(paths):
    return [system_from_config(load_json(p)) for p in paths or []]


def _apply_tolerances(S, args):
    if args.tol_point is not None:
        S.tol_point = args.tol_point
    return S


def _write(out: Path, name: str, payload) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(dumps(payload), encoding="utf-8")
    return path


def _write_metadata(out: Path, args, started: float, extra=None):
    meta = {
        "command": args.command,
        "argv": sys.argv[1:],
        "version": __version__,
        "python": platform.python_version(),
        "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "elapsed_seconds": round(time.perf_counter() - started, 3),
    }
    meta.update(extra or {})
    _write(out, "metadata.json", meta)


def _dump_witness_maps(out: Path, verdict_json: dict, prefix: str) -> list:
    """CSV trajectories for every map inside a refutation witness."""
    w = verdict_json.get("witness") or {}
    maps = []
    if "sequence" in w:
        maps += [(f"{prefix}_seq_{i:02d}.csv", m) for i, m in enumerate(w["sequence"])]
    if "limit" in w:
        maps.append((f"{prefix}_limit.csv", w["limit"]))
    if "maps" in w:
        maps += [(f"{prefix}_map_{i}.csv", m) for i, m in enumerate(w["maps"])]
    if "map" in w:
        maps.append((f"{prefix}_map.csv", w["map"]))
    written = []
    for name, data in maps:
        phi = map_from_json(data)
        if not isinstance(phi.domain, IntervalDomain):
            continue
        (out / "witness").mkdir(parents=True, exist_ok=True)
        write_trajectory(out / "witness" / name, phi)
        written.append(f"witness/{name}")
    return written


# ---------------------------------------------------------------------------
# commands


def cmd_axioms(args) -> int:
    if len(args.system or []) != 1:
        raise ConfigError("axioms needs exactly one --system")
    S = _apply_tolerances(_load_systems(args.system)[0], args)
    W = window_from_config(load_json(args.window), S) if args.window else S.default_window()
    D = S.claimed_domain or (S.group.whole() if S.group.kind != "integers" else None)
    verdicts = [
        check_compactness(S, W, seed=args.seed, tol_conv=args.tol_conv or 1e-6) if W.compact else None,
        check_existence(S, W, args.samples, args.seed),
        check_uniqueness(S, W, args.samples, args.seed),
        check_domain(S, D if D is not None else IntervalDomain.whole(), min(args.samples, 32), args.seed),
    ]
    out = Path(args.out)
    report = {"system": S.descriptor, "window": W.to_json(), "seed": args.seed, "verdicts": []}
    for name, v in zip(("Compactness", "Existence", "Uniqueness", "Domain"), verdicts):
        if v is None:
            report["verdicts"].append({"axiom": name, "verdict": "NotApplicable", "notes": ["window is not compact"]})
            continue
        data = v.to_json()
        if v.refuted:
            data["witness_files"] = _dump_witness_maps(out, data, name.lower())
        report["verdicts"].append(data)
    _write(out, "axioms.json", report)
    for row in report["verdicts"]:
        print(f"{row['axiom']:<12} {row['verdict']}")
    return OK


def cmd_converge(args) -> int:
    out = Path(args.out)
    rows = []
    if args.sequence:
        data = load_json(args.sequence)
        try:
            seq = [map_from_json(m) for m in data["maps"]]
            limit = map_from_json(data["limit"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{args.sequence}: sequence file needs 'maps' and 'limit' ({exc})") from exc
        S = _load_systems(args.system)[0] if args.system else None
        rows.append(("sequence", seq, limit, S))
    else:
        if not args.system:
            raise ConfigError("converge needs --system or --sequence")
        for S in _load_systems(args.system):
            for name, seq, _, limit in S.adversarial_sequences():
                rows.append((f"{S.descriptor}:{name}", seq, limit, S))
    report = {"seed": args.seed, "sequences": []}
    for name, seq, limit, S in rows:
        conv = test_convergence(seq, limit, tol_conv=args.tol_conv or 1e-6)
        entry = {"name": name, "length": len(seq), "convergence": conv.to_json()}
        if S is not None:
            entry["limit_membership"] = S.membership(limit).to_json()
        report["sequences"].append(entry)
        print(f"{name}: {conv.verdict.value}")
    _write(out, "converge.json", report)
    return OK


def build_morphism(spec: str, systems: list):
    """Morphism from ``NAME[:ARGS]`` between the given systems."""
    name, _, arg = spec.partition(":")
    if name == "identity":
        return identity_morphism(systems[0])
    if len(systems) != 2 and name != "finite-aut":
        raise ConfigError(f"builder {name!r} needs two --system descriptors")
    if name == "scale":
        if not arg:
            raise ConfigError("builder scale needs a factor, e.g. scale:2")
        return scaling_morphism(systems[0], systems[1], Fraction(arg))
    if name == "time-reversal":
        return time_reversal(systems[0], systems[1])
    if name == "riccati-scaling":
        if arg:
            a, b = (float(v) for v in arg.split(","))
        else:
            a, b = (getattr(S, "a", None) for S in systems)
            if a is None or b is None:
                raise ConfigError("riccati-scaling needs two Riccati systems or explicit a,b")
        return riccati_scaling(a, b)
    if name == "finite-aut":
        n = getattr(systems[0], "n", None)
        if n is None:
            raise ConfigError("finite-aut needs a finite-aut system")
        h = tuple(int(v) for v in arg.split(",")) if arg else tuple(range(n))
        return finite_aut_morphism(n, h)
    raise ConfigError(f"unknown builder {name!r}")


def cmd_equiv(args) -> int:
    systems = [_apply_tolerances(S, args) for S in _load_systems(args.system)]
    if not systems:
        raise ConfigError("equiv needs at least one --system")
    if not args.builder:
        raise ConfigError("equiv needs --builder NAME[:ARGS]")
    try:
        m = build_morphism(args.builder, systems)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"builder {args.builder!r}: {exc}") from exc
    requested = Level(args.level)
    rep = classify(m, n_maps=args.maps, seed=args.seed, strict=False, tol=args.tol_morph or 1e-8,
                   n_samples=args.samples, tol_orbit=args.tol_orbit or 1e-6)
    payload = rep.to_json()
    payload.update({"morphism_name": m.name, "source": m.source.descriptor, "target": m.target.descriptor,
                    "requested": requested.value, "seed": args.seed})
    _write(Path(args.out), "equivalence.json", payload)
    print(f"{m.name}: {rep.level.value}" + (f" ({'; '.join(rep.reasons)})" if rep.reasons else ""))
    return OK if rep.level >= requested else BELOW


def cmd_examples(args) -> int:
    only = None
    if args.only:
        only = [s.strip() for s in args.only.split(",") if s.strip()]
        unknown = [s for s in only if s not in EXAMPLE_IDS]
        if unknown:
            raise ConfigError(f"unknown example id(s) {unknown}; choose from {list(EXAMPLE_IDS)}")
    report = run_examples(args.seed, only, n_samples=args.samples, n_maps=args.maps)
    _write(Path(args.out), "examples.json", report)
    for key, row in report["table"].items():
        print(f"{key}: {json.dumps(json.loads(dumps(row)), sort_keys=True)}")
    print("match" if report["matches"] else f"MISMATCH: {report['mismatches']}")
    return OK if report["matches"] else BELOW


COMMANDS = {"axioms": cmd_axioms, "converge": cmd_converge, "equiv": cmd_equiv, "examples": cmd_examples}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", action="append", help="system descriptor JSON (repeatable)")
    common.add_argument("--window", help="window descriptor JSON")
    common.add_argument("--builder", help="morphism builder NAME[:ARGS]")
    common.add_argument("--sequence", help="JSON file with 'maps' and 'limit' for converge")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=200, help="sampled points per check")
    common.add_argument("--maps", type=int, default=10, help="sampled maps per check")
    common.add_argument("--tol-point", type=float, dest="tol_point")
    common.add_argument("--tol-conv", type=float, dest="tol_conv")
    common.add_argument("--tol-morph", type=float, dest="tol_morph")
    common.add_argument("--tol-orbit", type=float, dest="tol_orbit")
    common.add_argument("--out", default="starflow-out", help="output directory")
    common.add_argument("--only", help="comma-separated example ids (examples)")
    common.add_argument("--level", default=Level.MORPHISM.value, choices=[lv.value for lv in Level],
                        help="requested level for equiv")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="starflow", description="Check solution-set axioms and morphisms.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return CONFIG
    started = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG
    except (PreconditionFailed, StarflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG
    _write_metadata(Path(args.out), args, started, {"exit_code": code})
    return code


if __name__ == "__main__":
    sys.exit(main())
