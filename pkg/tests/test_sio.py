import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint

from vlebesgue.gridfn import (Bump, CharFun, GridFunction, PolyBump, PowerFun, from_callable,
                              grid_for, integrate, make_grid, sample, tail_eval)
from vlebesgue.sio import (LogSingularity, PVQuadSpec, cauchy_S, cauchy_S_charfun,
                           cauchy_S_many, distribution, local_sharp_M, maximal_M,
                           rearrangement, sharp_both, sharp_delta)


def node(g, x):
    return int(np.flatnonzero(np.isclose(g.nodes, x, atol=1e-14))[0])


def test_charfun_examples():
    assert cauchy_S_charfun(-1, 1, 0.0) == 0
    assert cauchy_S_charfun(-1, 1, 2.0) == pytest.approx(1j * math.log(3) / math.pi)
    assert cauchy_S_charfun(0, 1, -1.0) == pytest.approx(-1j * math.log(2) / math.pi)
    with pytest.raises(LogSingularity, match="log singularity"):
        cauchy_S_charfun(0, 1, 1.0)


def test_charfun_against_quad():
    # principal value via the Cauchy weight of QUADPACK
    for a, b, x in [(-1, 1, 0.3), (0, 2, 1.7), (-0.5, 0.25, 0.0)]:
        pv = sint.quad(lambda t: 1.0, a, b, weight="cauchy", wvar=x)[0]
        assert cauchy_S_charfun(a, b, x) == pytest.approx(pv / (math.pi * 1j), rel=1e-10)


def test_cauchy_S_examples():
    e = CharFun(-1.0, 1.0)
    g = grid_for([e], L=16.0, n=1025, grade_breaks=True)
    s = cauchy_S(sample(e, g))
    assert abs(s.values[node(g, 0.0)]) <= 1e-12
    assert s.values[node(g, 2.0)] == pytest.approx(1j * math.log(3) / math.pi,
                                                 abs=1e-9)
    e = CharFun(0.0, 1.0)
    g = grid_for([e], L=16.0, n=1025, grade_breaks=True)
    assert abs(cauchy_S(sample(e, g)).values[node(g, 0.5)]) <= 1e-12


def test_cauchy_S_matches_closed_form(backend):
    e = CharFun(-0.75, 1.5)
    g = grid_for([e], L=16.0, n=513, grade_breaks=True)
    s = cauchy_S(sample(e, g), backend=backend)
    far = np.min(np.abs(g.nodes[:, None] - np.array([-0.75, 1.5])), axis=1) >= 2 * g.h
    ref = cauchy_S_charfun(-0.75, 1.5, g.nodes[far])
    assert np.max(np.abs(s.values[far] - ref)) <= 1e-9
    # the points flagged around the jumps are reported
    assert s.flagged is not None and s.flagged[node(g, 1.5)]
    assert not s.flagged[node(g, 0.0)]


def test_cauchy_S_smooth_against_quad():
    e = Bump(0.2, 1.0)
    g = grid_for([e], L=8.0, n=513)
    s = cauchy_S(sample(e, g))
    for x in (0.0, 0.5, 1.75, 3.0):
        pv = sint.quad(lambda t: e(np.array([t]))[0].real, -0.8, 1.2, weight="cauchy",
                       wvar=x, limit=200)[0]
        assert s.values[node(g, x)] == pytest.approx(pv / (math.pi * 1j), abs=1e-9)


def test_tail_model_outside_domain():
    e = CharFun(0.0, 1.0)
    g = grid_for([e], L=8.0, n=257, grade_breaks=True)
    s = cauchy_S(sample(e, g))
    xs = np.array([12.0, -20.0, 100.0])
    assert np.allclose(tail_eval(s.tail, xs), cauchy_S_charfun(0, 1, xs), rtol=1e-8)


def test_pvquad_spec_validation():
    with pytest.raises(ValueError):
        PVQuadSpec(subtraction_radius_cells=1.0)
    with pytest.raises(ValueError):
        PVQuadSpec(tail_mode="bogus")
    with pytest.raises(ValueError):
        PVQuadSpec(tail_terms=0)


exprs = st.one_of(
    st.builds(lambda a, w: CharFun(a, a + w), st.sampled_from([-2.0, -1.0, -0.5, 0.0, 0.75]),
              st.sampled_from([0.5, 1.0, 1.25])),
    st.builds(lambda c, r: Bump(c, r), st.floats(-2, 2), st.floats(0.3, 1.5)),
)
cplx = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@settings(max_examples=10)
@given(exprs, exprs, cplx, cplx)
def test_S_linear(e1, e2, a, b):
    g = grid_for([e1, e2], L=8.0, n=129, grade_breaks=True)
    f1, f2 = sample(e1, g), sample(e2, g)
    lhs = cauchy_S(f1.scale(a) + f2.scale(b))
    s1, s2 = cauchy_S_many([f1, f2])
    rhs = s1.scale(a) + s2.scale(b)
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-8
    assert np.max(np.abs(lhs.qvalues - rhs.qvalues)) <= 1e-8


def test_maximal_examples(backend):
    e = CharFun(0.0, 1.0)
    g = grid_for([e], L=4.0, n=129)
    m = maximal_M(sample(e, g), backend)
    assert m.values[node(g, 0.5)] == pytest.approx(1.0)
    assert m.values[node(g, 2.0)] == pytest.approx(0.5)
    z = GridFunction(g, np.zeros(len(g.nodes)), np.zeros(len(g.points)))
    assert not np.any(maximal_M(z, backend).values)


def _max_oracle(f):
    # brute force over all mesh intervals
    g = f.grid
    k = g.order
    cells = (g.weights * np.abs(f.qvalues)).reshape(-1, k).sum(axis=1)
    cum = np.concatenate(([0.0], np.cumsum(cells)))
    n = len(g.nodes)
    out = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            avg = (cum[j] - cum[i]) / (g.nodes[j] - g.nodes[i])
            out[i:j + 1] = np.maximum(out[i:j + 1], avg)
    return out


@settings(max_examples=10)
@given(exprs, exprs, st.one_of(st.just(0.0), st.floats(1e-6, 4)))
def test_maximal_properties(e1, e2, c):
    g = grid_for([e1, e2], L=4.0, n=33)
    f1, f2 = sample(e1, g), sample(e2, g)
    m1, m2 = maximal_M(f1), maximal_M(f2)
    assert np.allclose(m1.values, _max_oracle(f1), rtol=1e-12, atol=1e-14)
    m12 = maximal_M(f1 + f2)
    assert np.all(m12.values <= m1.values + m2.values + 1e-10)
    assert np.allclose(maximal_M(f1.scale(c)).values, c * m1.values, rtol=1e-12, atol=0)


def test_maximal_dominates_continuous():
    e = Bump(0.0, 2.0)
    g = grid_for([e], L=4.0, n=513)
    f = sample(e, g)
    assert np.all(np.abs(f.values) <= maximal_M(f).values + 1e-3)


def test_rearrangement_examples():
    e = 2 * CharFun(0.0, 1.0) + CharFun(1.0, 3.0)
    g = grid_for([e], L=4.0, n=129)
    f = sample(e, g)
    assert rearrangement(f, 0.5) == 2 and rearrangement(f, 2.0) == 1 and rearrangement(f, 4.0) == 0
    assert np.allclose(rearrangement(sample(CharFun(-1.0, 0.5), g), [0.0, 1.0, 1.49, 1.5, 2.0]),
                       [1, 1, 1, 0, 0])
    with pytest.raises(ValueError):
        rearrangement(f, -1.0)


def test_rearrangement_triangle():
    g = make_grid(2.0, 513)
    f = from_callable(lambda x: np.maximum(0.0, 1 - np.abs(x)), g)
    t = np.linspace(0, 2.5, 26)
    assert np.allclose(rearrangement(f, t), np.maximum(0, 1 - t / 2), atol=g.h)


@settings(max_examples=15)
@given(exprs, exprs)
def test_rearrangement_equimeasurable(e1, e2):
    g = grid_for([e1, e2], L=4.0, n=129)
    f = sample(e1, g) + sample(e2, g).scale(0.5j)
    # f* is a step function with breaks at the cumulative Gauss weights
    v = np.sort(np.abs(f.qvalues))[::-1]
    ts = np.linspace(0, 8, 200)
    r = rearrangement(f, ts)
    assert np.all(np.diff(r) <= 0)
    assert np.sum(np.abs(f.qvalues) * g.weights) == pytest.approx(
        integrate(f.abs(), exact=False).real, rel=1e-6)
    assert distribution(f, 0.0) <= 8.0
    assert v[0] == pytest.approx(rearrangement(f, 0.0))


def _step(L=4.0, n=65):
    g = make_grid(L, n, order=4)
    return from_callable(lambda x: (x > 0).astype(float), g), g


def test_sharp_examples(backend):
    f, g = _step()
    i0 = node(g, 0.0)
    sp = sharp_both(f, 0.5, 0.25, backend)
    assert sp.sharp.values[i0] == pytest.approx(0.25, abs=1e-12)
    assert sp.local.values[i0] == pytest.approx(0.5, abs=1e-12)
    assert local_sharp_M(f, 0.5, backend).values[i0] == pytest.approx(0.0, abs=1e-12)
    c = from_callable(lambda x: np.full(x.shape, 3.0), g)
    assert np.allclose(sharp_delta(c, 1.0, backend).values, 0)
    assert np.allclose(local_sharp_M(c, 0.25, backend).values, 0)


def test_sharp_linear_function():
    g = make_grid(2.0, 33, order=4)
    f = from_callable(lambda x: np.where(np.abs(x) < 1, x, 0.0), g)
    # on Q = (-1, 1) the best constant is 0 and the mean deviation is 1/2
    assert sharp_delta(f, 1.0).values[node(g, 0.0)] >= 0.5 - 1e-12


def test_sharp_rejects():
    f, _ = _step(n=33)
    with pytest.raises(ValueError):
        sharp_both(f, 0.0, 0.5)
    with pytest.raises(ValueError):
        sharp_both(f, 0.5, 1.0)


@settings(max_examples=10)
@given(st.lists(st.floats(-3, 3), min_size=33, max_size=33),
       st.sampled_from([0.5, 1.0]), st.sampled_from([0.25, 0.5]))
def test_sharp_relation_pointwise(vals, delta, lam):
    g = make_grid(2.0, 33, order=4)
    v = np.asarray(vals)
    f = from_callable(lambda x: np.interp(x, g.nodes, v) * (1 + 0.5j * np.sin(3 * x)), g)
    sp = sharp_both(f, delta, lam)
    bound = (1 / lam) ** (1 / delta)
    assert np.all(sp.local.values.real <= bound * sp.sharp.values.real + 1e-10)
    assert np.all(sp.local.qvalues.real <= bound * sp.sharp.qvalues.real + 1e-10)
