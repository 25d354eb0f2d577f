import json
import math

import numpy as np
import pytest
from scipy import integrate as si

from vlebesgue import verify as V
from vlebesgue.ap import Interval
from vlebesgue.exponent import ConstExponent, PiecewiseExponent
from vlebesgue.gridfn import Bump, CharFun, PolyBump, grid_for, inner_product, sample
from vlebesgue.sio import cauchy_S
from vlebesgue.weight import PowerWeight, UNIT_WEIGHT

P2 = ConstExponent(2.0)
SMALL = dict(L=8.0, n=513, depth=6)


def test_s_squared_zero_function():
    rep = V.check_s_squared([0.0 * CharFun(0.0, 1.0)], P2, **SMALL)
    assert rep.cases[0].ratio == 0.0 and rep.passed


def test_s_squared_small_family():
    rep = V.check_s_squared([CharFun(0.0, 1.0), Bump(0.0, 1.0)], P2, n=1025, L=8.0, depth=6)
    assert rep.passed and rep.worst_ratio <= V.S2_TOL


def test_s_squared_weighted():
    w = PowerWeight((0.0,), (0.2,), 0.0)
    p = PiecewiseExponent((-1.0, 1.0), (3.0,), 2.0)
    rep = V.check_s_squared([Bump(0.5, 1.0)], p, w, n=1025, L=8.0, depth=6)
    assert rep.passed


def test_self_adjoint_identical_pair():
    f = CharFun(0.0, 1.0)
    rep = V.check_self_adjoint([(f, f)], **SMALL)
    assert rep.cases[0].lhs <= 1e-12


def test_self_adjoint_disjoint_chars_closed_form():
    f, g = CharFun(0.0, 1.0), CharFun(2.0, 3.0)
    grid = grid_for([f, g], L=8.0, n=1025, depth=6)
    got = inner_product(cauchy_S(sample(f, grid)), sample(g, grid))
    val, _ = si.dblquad(lambda t, x: 1.0 / (t - x), 2.0, 3.0, 0.0, 1.0)
    expect = val / (math.pi * 1j)
    assert abs(got - expect) <= 1e-8
    rep = V.check_self_adjoint([(f, g)], L=8.0, n=1025, depth=6)
    assert rep.passed


def test_self_adjoint_default_pairs():
    pairs = V.default_pairs(6, seed=1)
    assert pairs == V.default_pairs(6, seed=1)
    rep = V.check_self_adjoint(pairs, L=8.0, n=1025, depth=6)
    assert rep.passed and len(rep.cases) == 6


def test_weak_type_examples():
    rep = V.check_weak_type([CharFun(0.0, 1.0)], alpha_grid=[0.1, 0.5, 1.0], L=8.0, n=1025)
    c = rep.cases[0]
    assert rep.passed and 0 < c.lhs < 10
    assert "refinement growth" in rep.notes[0]


def test_weak_type_scaling():
    a = V.check_weak_type([CharFun(0.0, 1.0)], **SMALL).cases[0].lhs
    b = V.check_weak_type([2.0 * CharFun(0.0, 1.0)], **SMALL).cases[0].lhs
    assert b == pytest.approx(a, rel=1e-9)


def test_lerner_chain():
    rep = V.check_lerner_chain(CharFun(0.0, 1.0), Bump(0.5, 1.0), 1.0, 0.5)
    assert rep.passed
    assert [c.asserted for c in rep.cases] == [True, False, False]
    assert rep.cases[0].name.endswith("pointwise")


def test_lerner_battery_subset():
    pairs = V.lerner_family()[:2]
    rep = V.check_lerner_battery(pairs)
    assert len(rep.cases) == 3 * len(pairs) * len(V.LERNER_DELTAS) * len(V.LERNER_LAMBDAS)
    assert rep.passed


def test_operator_norm_unweighted_l2():
    lb = V.operator_norm_lower_bound(P2, UNIT_WEIGHT, [CharFun(0.0, 1.0), Bump(0.0, 1.0)],
                                     L=16.0, n=2049, depth=8)
    assert 0.9 <= lb <= 1.01


def test_operator_norm_divergent_weight():
    w = PowerWeight((0.0,), (0.6,), 0.0)
    r = V.operator_norm_ratios(P2, w, [CharFun(0.0, 1.0)], L=8.0, n=513, depth=6)
    assert math.isinf(r[0])


def test_necessity_probe():
    w = PowerWeight((0.0,), (0.2,), 0.0)
    g = grid_for((), weight=w, exponent=P2, L=8.0, n=513, depth=6)
    rep = V.necessity_probe(P2, w, Interval(-1.0, 1.0), s_lower=1.0, grid=g)
    assert len(rep.cases) == 3 and not any(c.asserted for c in rep.cases)
    assert rep.passed
    with pytest.raises(ValueError, match="interval too small for halving"):
        V.necessity_probe(P2, w, Interval(0.5, 0.5 + 1e-4), s_lower=1.0, grid=g)


def test_holder_suite():
    rep = V.check_holder(n_pairs=12, seed=7)
    assert rep.passed and rep.worst_ratio <= 1.0


def test_report_json_is_strict():
    rep = V.check_s_squared([CharFun(0.0, 1.0)], P2, **SMALL)
    text = json.dumps(rep.to_json(), allow_nan=False)
    assert json.loads(text)["suite"] == "s_squared"
    assert len(rep.csv_rows()[0]) == 6


def test_families_are_stable():
    assert V.dyadic_chars() == V.dyadic_chars()
    assert len(V.lerner_family()) == 12
    assert all(isinstance(e, (CharFun, Bump, PolyBump)) or e is not None
               for e in V.default_family((0.0,)))
