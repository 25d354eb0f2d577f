import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from vlebesgue.gridfn import (Bump, CharFun, GridError, GridFunction, PolyBump, PowerFun,
                              SupportError, expr_from_json, grid_for, inner_product,
                              integrate, make_grid, sample, tail_add, tail_eval)


def test_uniform_grid():
    g = make_grid(1.0, 33)
    assert len(g.nodes) == 33
    assert np.allclose(np.diff(g.nodes), 1 / 16)
    assert g.nodes[0] == -1 and g.nodes[-1] == 1


def test_graded_grid_halves_toward_node():
    g = make_grid(16.0, 4097, [0.0], 8)
    h = g.h
    i0 = int(np.flatnonzero(g.nodes == 0.0)[0])
    right = np.diff(g.nodes[i0:i0 + 10])
    assert right[0] == pytest.approx(h * 2.0 ** -8)
    # points at h 2**-k: the two innermost cells match, then widths double
    assert right[1] == pytest.approx(right[0])
    assert np.allclose(right[2:9] / right[1:8], 2.0)
    assert g.widths.min() == pytest.approx(h / 256)
    assert np.all(np.diff(g.nodes) > 0)
    assert g.nodes[0] == -16 and g.nodes[-1] == 16


@pytest.mark.parametrize("L,n", [(0.0, 33), (-1.0, 33), (1.0, 32)])
def test_make_grid_rejects(L, n):
    with pytest.raises(GridError):
        make_grid(L, n)


def test_sample_examples():
    g = make_grid(1.0, 33)
    f = sample(CharFun(0.0, 1.0), g)
    inside = (g.nodes > 0) & (g.nodes < 1)
    assert np.all(f.values[inside] == 1) and np.all(f.values[~inside] == 0)
    f2 = sample(2j * CharFun(0.0, 1.0), g)
    assert f2.values[np.flatnonzero(g.nodes == 0.5)[0]] == 2j
    gp = grid_for([PowerFun(0.0, -0.5, 0.0, 1.0)], L=1.0, n=33, depth=4)
    fp = sample(PowerFun(0.0, -0.5, 0.0, 1.0), gp)
    assert fp.values[np.flatnonzero(gp.nodes == 0.25)[0]] == pytest.approx(2.0)


def test_sample_at_singular_node_is_finite():
    e = PowerFun(0.0, -0.5, -1.0, 1.0)
    g = grid_for([e], L=2.0, n=33, depth=4)
    f = sample(e, g)
    i0 = int(np.flatnonzero(g.nodes == 0.0)[0])
    assert np.isfinite(f.values[i0]) and f.values[i0].real > 0


def test_support_outside_domain():
    with pytest.raises(SupportError):
        sample(CharFun(0.0, 3.0), make_grid(2.0, 33))


def test_integrate_examples():
    g = make_grid(1.0, 33)
    assert integrate(sample(CharFun(0.0, 1.0), g)) == pytest.approx(1.0, abs=1e-15)
    sq = PolyBump((0.0, 0.0, 1.0), 0.5, 0.5, smooth=False)
    assert abs(integrate(sample(sq, g), exact=False) - 1 / 3) <= 1e-8
    e = PowerFun(0.0, -0.5, 0.0, 1.0)
    gp = grid_for([e], L=1.0, n=1025, depth=8)
    assert abs(integrate(sample(e, gp)) - 2.0) <= 1e-6
    assert abs(integrate(sample(e, gp), exact=False) - 2.0) <= 1e-6


def test_integrate_bump_against_quad():
    g = make_grid(2.0, 257)
    e = Bump(0.3, 1.2)
    ref = sint.quad(lambda x: e(np.array([x]))[0].real, -0.9, 1.5, epsabs=1e-13)[0]
    assert integrate(sample(e, g)).real == pytest.approx(ref, rel=1e-9)


def test_inner_product_examples():
    g = make_grid(4.0, 65)
    a, b = sample(CharFun(0.0, 1.0), g), sample(CharFun(0.5, 2.0), g)
    assert inner_product(a, b) == pytest.approx(0.5)
    assert inner_product(a.scale(1j), a) == pytest.approx(1j)
    with pytest.raises(GridError):
        inner_product(a, sample(CharFun(0.0, 1.0), make_grid(4.0, 129)))


exprs = st.one_of(
    st.builds(lambda a, w: CharFun(a, a + w), st.floats(-3, 2), st.floats(0.1, 1.5)),
    st.builds(lambda c, r: Bump(c, r), st.floats(-2, 2), st.floats(0.2, 1.5)),
    st.builds(lambda a, w, g: PowerFun(a, g, a, a + w), st.floats(-3, 2), st.floats(0.2, 1.5),
              st.floats(-0.5, 1.0)),
)
scalars = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


@given(exprs, exprs, scalars, scalars)
def test_integrate_linear(e1, e2, a, b):
    g = grid_for([e1, e2], L=4.0, n=129, depth=6)
    f1, f2 = sample(e1, g), sample(e2, g)
    lhs = integrate(f1.scale(a) + f2.scale(b))
    rhs = a * integrate(f1) + b * integrate(f2)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(rhs))


smooth_exprs = st.one_of(
    st.builds(lambda a, w: CharFun(a, a + w), st.floats(-3, 2), st.floats(0.1, 1.5)),
    st.builds(lambda c, r: Bump(c, r), st.floats(-2, 2), st.floats(0.2, 1.5)),
)


@given(smooth_exprs, smooth_exprs, scalars, scalars)
def test_integrate_linear_quadrature_path(e1, e2, a, b):
    g = grid_for([e1, e2], L=4.0, n=129, depth=6)
    f1, f2 = sample(e1, g), sample(e2, g)
    lhs = integrate(f1.scale(a) + f2.scale(b), exact=False)
    rhs = a * integrate(f1, exact=False) + b * integrate(f2, exact=False)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(rhs))


@given(exprs, exprs)
def test_inner_product_conjugate_symmetric(e1, e2):
    g = grid_for([e1, e2], L=4.0, n=129, depth=6)
    f1, f2 = sample(1j * e1, g), sample(e2, g)
    assert inner_product(f1, f2) == pytest.approx(np.conj(inner_product(f2, f1)))


@given(exprs)
def test_expr_json_roundtrip(e):
    assert expr_from_json(e.to_json()) == e


FAMILY = [PowerFun(0.1, -0.5, -1.0, 1.0), PowerFun(0.0, 0.5, 0.0, 1.0), Bump(0.3, 1.1),
          PolyBump((1.0, -2.0), 0.2, 0.7), CharFun(-0.3, 0.7) + PowerFun(0.2, -0.3, 0.2, 1.0)]


def _refinement_diffs(e, exact):
    vals = [integrate(sample(e, grid_for([e], L=2.0, n=2 ** k + 1, depth=8)), exact=exact)
            for k in range(9, 14)]
    return np.abs(np.diff(vals))


@pytest.mark.parametrize("e", FAMILY)
def test_refinement_convergence(e):
    d = _refinement_diffs(e, True)
    # differences between consecutive refinements shrink, down to rounding
    assert np.all((np.diff(d) <= 0) | (d[1:] < 1e-14))


@pytest.mark.parametrize("e", [PowerFun(0.0, -0.5, -1.0, 1.0), PowerFun(0.0, -0.9, 0.0, 1.0),
                               CharFun(-0.3, 0.7) + PowerFun(0.25, -0.3, 0.25, 1.0)])
def test_refinement_convergence_quadrature_path(e):
    d = _refinement_diffs(e, False)
    assert np.all(np.diff(d) <= 0)


@pytest.mark.parametrize("gamma", [-0.3, -0.6, -0.9])
def test_grading_beats_uniform(gamma):
    e = PowerFun(0.0, gamma, 0.0, 1.0)
    exact = 1.0 / (gamma + 1.0)
    g = grid_for([e], L=2.0, n=65, depth=8)
    graded = abs(integrate(sample(e, g), exact=False) - exact)
    # same number of mesh points, no grading, no singular-cell treatment
    u = make_grid(2.0, len(g.nodes), [], 0, [1.0 + 2.0 / (len(g.nodes) - 1) / 3])
    uniform = abs(integrate(sample(e, u), exact=False) - exact)
    assert graded * 10 <= uniform


def test_tail_helpers():
    t = tail_add((1.0,), (0.0, 2.0))
    assert t == (1 + 0j, 2 + 0j)
    x = np.array([2.0, -4.0])
    assert np.allclose(tail_eval(t, x), 1 / x + 2 / x ** 2)


def test_gridfunction_validates():
    g = make_grid(1.0, 33)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(3), np.zeros(len(g.points)))
    v = np.zeros(len(g.nodes))
    v[0] = np.nan
    with pytest.raises(ValueError):
        GridFunction(g, v, np.zeros(len(g.points)))
