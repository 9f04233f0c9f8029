import json
import math
from fractions import Fraction

import numpy as np
import pytest

from starflow.core import INF, IntervalDomain, closed_form, interpolant, permutation_group, table_map
from starflow.errors import ConfigError
from starflow.io import (
    compile_rhs,
    domain_from_json,
    domain_to_json,
    dumps,
    load_json,
    map_from_json,
    map_to_json,
    read_trajectory_csv,
    trajectory_csv,
)


def round_trip(phi):
    return map_from_json(json.loads(dumps(map_to_json(phi))))


def test_domain_round_trip_keeps_fractions_and_infinities():
    D = IntervalDomain.of((Fraction(-1, 3), Fraction(2, 7)), (1, INF))
    assert domain_from_json(json.loads(dumps(domain_to_json(D)))) == D


def test_exact_interpolant_round_trip():
    phi = interpolant([Fraction(0), Fraction(1, 2)], [Fraction(0), Fraction(3, 8)],
                      left_slope=Fraction(1), right_slope=Fraction(1, 2))
    back = round_trip(phi)
    assert back.evaluator.is_exact and back.domain == phi.domain
    for t in (Fraction(-3), Fraction(1, 4), Fraction(9, 2)):
        assert back(t) == phi(t)


def test_table_round_trip():
    G = permutation_group(3)
    phi = table_map({g: tuple(Fraction(i, 5) for i in g) for g in G.elements()}, G)
    back = round_trip(phi)
    assert all(back(g) == phi(g) for g in G.elements())


def test_closed_forms_are_sampled():
    phi = closed_form(np.tanh)
    back = round_trip(phi)
    ts = np.linspace(-9.5, 9.5, 77)
    assert np.max(np.abs(back.values(ts) - np.tanh(ts))) <= 1e-4


def test_trajectory_csv_format():
    text = trajectory_csv([0.0, 0.5], [[1.0, 2.0], [3.0, 0.1]])
    assert text.splitlines() == ["t,x1,x2", "0.0,1.0,2.0", "0.5,3.0,0.1"]
    ts, xs = read_trajectory_csv(text)
    assert list(ts) == [0.0, 0.5] and xs.shape == (2, 2)
    assert trajectory_csv([1.0], [0.1]).splitlines()[0] == "t,x1"


def test_dumps_is_deterministic_and_plain_json():
    a = dumps({"b": 1.0, "a": [Fraction(1, 3), math.inf, -math.inf, math.nan]})
    assert a == dumps({"a": [Fraction(1, 3), math.inf, -math.inf, math.nan], "b": 1.0})
    assert json.loads(a) == {"a": ["1/3", "inf", "-inf", None], "b": 1.0}


def test_load_json_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "ode",\n "rhs": }\n')
    with pytest.raises(ConfigError, match=":2:"):
        load_json(bad)


def test_compile_rhs():
    f = compile_rhs("x**2 + sin(t)")
    assert f(0.5, 2.0) == pytest.approx(4.0 + math.sin(0.5))
    g = compile_rhs("[x2, -x1]")
    assert list(g(0.0, np.array([1.0, 2.0]))) == [2.0, -1.0]
    for bad in ("__import__('os')", "x.real", "y + 1", "x +"):
        with pytest.raises(ConfigError):
            compile_rhs(bad)
