import numpy as np
import pytest
from hypothesis import given, strategies as st

from vlebesgue.exponent import ConstExponent, PiecewiseExponent, conjugate
from vlebesgue.gridfn import Bump, CharFun, make_grid
from vlebesgue.weight import (CriterionInapplicable, GenericWeight, PoleError, PowerWeight,
                              ScaledWeight, UNIT_WEIGHT, eval_weight, eval_weight_safe, invert,
                              ks_criterion, weight_from_json)


def test_eval_examples():
    assert eval_weight(UNIT_WEIGHT, 3.7) == 1.0
    assert eval_weight(PowerWeight((0.0,), (1.0,)), 2.0) == 2.0
    assert eval_weight(PowerWeight((0.0,), (0.0,), 1.0), 0.0) == 1.0
    assert eval_weight(PowerWeight((), (), 2.0), 3.0) == pytest.approx(10.0)


def test_pole():
    w = PowerWeight((0.0,), (-0.3,))
    with pytest.raises(PoleError):
        eval_weight(w, 0.0)
    x = np.array([-1.0, 0.0, 1.0])
    v = eval_weight_safe(w, x, np.array([-0.5, 0.5]))
    assert np.all(np.isfinite(v)) and v[1] == pytest.approx(0.5 ** -0.3)


def test_invert_examples():
    assert invert(PowerWeight((0.0,), (0.3,))).powers == (-0.3,)
    assert invert(UNIT_WEIGHT) == UNIT_WEIGHT
    g = GenericWeight(lambda x: np.exp(np.sin(x)))
    x = make_grid(4.0, 65).nodes
    assert np.allclose(g.eval(x) * invert(g).eval(x), 1.0, atol=1e-12)
    assert np.allclose(invert(g).eval(x), np.exp(-np.sin(x)))


weights = st.builds(
    lambda nodes, powers, li: PowerWeight(tuple(sorted(set(nodes)))[:len(powers)],
                                          tuple(powers[:len(set(nodes))]), li),
    st.lists(st.floats(-3, 3), min_size=0, max_size=3),
    st.lists(st.floats(-0.9, 0.9), min_size=3, max_size=3),
    st.floats(-1, 1))


@given(weights)
def test_invert_involution_and_product(w):
    assert invert(invert(w)) == w
    x = make_grid(4.0, 65).midpoints
    x = x[np.all(np.abs(x[:, None] - np.array(w.nodes)[None, :]) > 1e-9, axis=1)] if w.nodes else x
    assert np.allclose(w.eval(x) * invert(w).eval(x), 1.0, rtol=1e-12)


def test_ks_examples():
    p = ConstExponent(2.0)
    r = ks_criterion(p, PowerWeight((0.0,), (0.3,)))
    assert r.local_values == [pytest.approx(0.8)] and r.infinity_value == pytest.approx(0.8)
    assert r.verdict
    r = ks_criterion(p, PowerWeight((0.0,), (0.6,)))
    assert r.local_values == [pytest.approx(1.1)] and not r.verdict
    r = ks_criterion(p, PowerWeight((0.0,), (0.3,), -0.9))
    assert r.infinity_value == pytest.approx(-0.1) and not r.infinity_check and not r.verdict


def test_ks_generic_inapplicable():
    with pytest.raises(CriterionInapplicable):
        ks_criterion(ConstExponent(2.0), GenericWeight(Bump(0.0, 1.0) + CharFun(-2.0, 2.0)))


exps = st.one_of(st.builds(ConstExponent, st.floats(1.1, 6.0)),
                 st.just(PiecewiseExponent((-1.0, 0.0, 1.0), (1.5, 3.0), 2.0)))


@given(exps, weights)
def test_ks_conjugate_symmetry(p, w):
    assert ks_criterion(p, w).verdict == ks_criterion(conjugate(p), invert(w)).verdict


@pytest.mark.parametrize("w", [
    PowerWeight((-1.0, 2.0), (0.25, -0.3), 0.1),
    GenericWeight(CharFun(-3.0, 3.0) + Bump(0.0, 1.0), (0.0,)),
    ScaledWeight(PowerWeight((0.0,), (0.2,)), 3.0),
])
def test_json_roundtrip(w):
    assert weight_from_json(w.to_json()) == w


def test_generic_must_be_positive():
    with pytest.raises(ValueError):
        GenericWeight(CharFun(0.0, 1.0)).eval(np.array([2.0]))
