import os
import subprocess
import sys

import numpy as np
import pytest

from vlebesgue import kernels
from vlebesgue.gridfn import Bump, CharFun, grid_for, make_grid, sample
from vlebesgue.sio import cell_integrals_abs

pytestmark = pytest.mark.skipif("cython" not in kernels.available(),
                                reason="compiled extension not built")


def _inputs():
    e = CharFun(-1.0, 0.5) + (1 - 2j) * Bump(0.5, 1.0)
    g = grid_for([e], L=4.0, n=129, depth=4, grade_breaks=True)
    return g, sample(e, g)


def test_pv_apply_backends_agree():
    g, f = _inputs()
    t = np.concatenate((g.nodes, g.points))
    cols = np.stack([f.qvalues, f.qvalues.conj() * 0.3], axis=1)
    a, ja = kernels.pv_apply(t, g.cell_a, g.cell_b, g.ref_x, g.ref_w, cols, 8.0, "numpy")
    b, jb = kernels.pv_apply(t, g.cell_a, g.cell_b, g.ref_x, g.ref_w, cols, 8.0, "cython")
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))
    assert np.allclose(ja, jb, atol=1e-12)


def test_maximal_sweep_backends_agree():
    g, f = _inputs()
    cum = np.concatenate(([0.0], np.cumsum(cell_integrals_abs(f))))
    a = kernels.maximal_sweep(cum, g.nodes, "numpy")
    b = kernels.maximal_sweep(cum, g.nodes, "cython")
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-13, atol=0)


@pytest.mark.parametrize("delta,lam", [(0.5, 0.25), (1.0, 0.5), (0.7, 0.3)])
@pytest.mark.parametrize("cplx", [False, True])
def test_sharp_intervals_backends_agree(delta, lam, cplx):
    g = make_grid(2.0, 33, order=4)
    rng = np.random.default_rng(3)
    re = rng.normal(size=len(g.points))
    im = rng.normal(size=len(g.points)) if cplx else np.zeros(len(g.points))
    w = np.asarray(g.weights)
    a = kernels.sharp_intervals(re, im, w, g.n_cells, g.order, delta, lam, "numpy")
    b = kernels.sharp_intervals(re, im, w, g.n_cells, g.order, delta, lam, "cython")
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-14)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.maximal_sweep(np.zeros(3), np.arange(3.0), "fortran")


def test_env_selects_fallback():
    code = "from vlebesgue import kernels; print(kernels.default_backend())"
    env = dict(os.environ, VLEB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"


def test_threads_env(monkeypatch):
    monkeypatch.setenv("VLEB_THREADS", "3")
    assert kernels.n_threads() == 3
    monkeypatch.setenv("VLEB_THREADS", "0")
    assert kernels.n_threads() >= 1
    monkeypatch.setenv("VLEB_THREADS", "many")
    with pytest.raises(ValueError):
        kernels.n_threads()


def test_thread_count_does_not_change_results(monkeypatch):
    g, f = _inputs()
    t = np.concatenate((g.nodes, g.points))
    monkeypatch.setenv("VLEB_THREADS", "1")
    a, _ = kernels.pv_apply(t, g.cell_a, g.cell_b, g.ref_x, g.ref_w, f.qvalues, 8.0, "cython")
    monkeypatch.setenv("VLEB_THREADS", "4")
    b, _ = kernels.pv_apply(t, g.cell_a, g.cell_b, g.ref_x, g.ref_w, f.qvalues, 8.0, "cython")
    assert np.array_equal(a, b)
