"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback.  ``VLEB_PURE_PYTHON=1`` forces the fallback and ``VLEB_THREADS``
caps the worker count of the compiled kernels (0 = all cores).
"""
from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"numpy": _fallback}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled


def available() -> list:
    return sorted(_BACKENDS)


def default_backend() -> str:
    if os.environ.get("VLEB_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
        return "numpy"
    return "cython"


def n_threads() -> int:
    raw = os.environ.get("VLEB_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"VLEB_THREADS must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


def _impl(backend) -> ModuleType:
    name = backend or default_backend()
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available()})")
    return _BACKENDS[name]


def _extra(mod):
    return {"nthreads": n_threads()} if mod is _compiled else {}


def barycentric(ref_x: np.ndarray):
    """Barycentric weights and differentiation matrix for the nodes ``ref_x``."""
    diff = ref_x[:, None] - ref_x[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    D = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return bary, D


def pv_apply(targets, cell_a, cell_b, ref_x, ref_w, vals, near, backend=None):
    mod = _impl(backend)
    bary, D = barycentric(np.asarray(ref_x, float))
    vals = np.asarray(vals, dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    return mod.pv_apply(targets, cell_a, cell_b, ref_x, ref_w, bary, D, vals, near,
                        **_extra(mod))


def maximal_sweep(cum, nodes, backend=None):
    return _impl(backend).maximal_sweep(cum, nodes)


def sharp_intervals(re, im, w, C, k, delta, lam, backend=None):
    mod = _impl(backend)
    return mod.sharp_intervals(re, im, w, C, k, delta, lam, **_extra(mod))


interval_sup = _fallback.interval_sup
