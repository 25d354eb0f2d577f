"""The Cauchy singular integral, the maximal operator, rearrangements and
sharp maximal functions on grid functions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gridfn import (GridFunction, Grid, SupportError, singular_cell_mask,
                     power_law_cell, _singular_distances)

# relative size of an interpolant mismatch treated as a jump of the input;
# log singularities of the input itself stay below a few 1e-3
JUMP_TOL = 1e-2
FLAG_CELLS = 2


class LogSingularity(ValueError):
    pass


@dataclass(frozen=True)
class PVQuadSpec:
    """Settings of the principal value quadrature.

    Source cells within ``subtraction_radius_cells`` of a target (measured in
    widths of the source cell) are integrated through their interpolating
    polynomial with the singular part subtracted and integrated exactly.
    ``tail_mode='first_moment'`` accounts for the input tail beyond ``[-L, L]``
    and attaches ``tail_terms`` moments of f as the tail of Sf
    (``Sf(x) = -(1/(pi i)) sum_k m_k x**-(k+1)`` outside the support).
    """

    subtraction_radius_cells: float = 4.0
    tail_mode: str = "first_moment"
    tail_terms: int = 16

    def __post_init__(self):
        if not self.subtraction_radius_cells >= 2:
            raise ValueError("subtraction radius must be at least 2 cells")
        if self.tail_mode not in ("none", "first_moment"):
            raise ValueError(f"unknown tail mode {self.tail_mode!r}")
        if self.tail_terms < 1:
            raise ValueError("tail_terms must be positive")


DEFAULT_PV = PVQuadSpec()


def cauchy_S_charfun(a: float, b: float, x) -> complex:
    """Closed form ``(1/(pi i)) ln|(b - x)/(a - x)|`` of ``S chi_(a,b)``."""
    if not a < b:
        raise ValueError("need a < b")
    x = np.asarray(x, dtype=float)
    if np.any((x == a) | (x == b)):
        raise LogSingularity("log singularity: x at an endpoint")
    out = np.log(np.abs((b - x) / (a - x))) / (np.pi * 1j)
    return complex(out) if out.ndim == 0 else out


def _outside_power(j: int, L: float) -> float:
    """``int_{|t| > L} t**-j dt``; zero for odd j, the finite part for ``j <= 0``."""
    if j % 2:
        return 0.0
    return 2.0 / ((j - 1) * L ** (j - 1))


def _tail_transform(x: np.ndarray, L: float, tail: tuple) -> np.ndarray:
    """``int_{|t| > L} (sum_j c_j t**-j)/(t - x) dt`` for ``|x| <= L``.

    Uses the power series in ``x/L`` for ``|x| < L/2`` and the recursion
    ``I_j = (I_{j-1} - int_{|t|>L} t**-j)/x`` from
    ``I_0 = ln((L + x)/(L - x))`` elsewhere.  At ``x = +-L`` the divergent
    ``ln|L - x|`` is dropped, the same finite part the interior cells take.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    u = x / L
    inner = np.abs(u) < 0.5
    far = ~inner
    xf = x[far]
    edge = np.abs(xf) >= L
    I = np.empty_like(xf)
    ok = ~edge
    I[ok] = np.log((L + xf[ok]) / (L - xf[ok]))
    I[edge] = np.sign(xf[edge]) * np.log(2.0 * L)
    ui = u[inner]
    n = np.arange(80)
    powers = ui[:, None] ** n[None, :]
    for j, c in enumerate(tail, start=1):
        I = (I - _outside_power(j, L)) / xf
        if c == 0:
            continue
        odd = (j + n) % 2 == 1
        series = (2.0 / L ** j) * (powers[:, odd] @ (1.0 / (j + n[odd])))
        out[inner] += c * series
        out[far] += c * I
    return out


def _apply_cols(grid: Grid, cols: np.ndarray, targets: np.ndarray,
                spec: PVQuadSpec, backend=None):
    near = 2.0 * spec.subtraction_radius_cells
    return kernels.pv_apply(targets, grid.cell_a, grid.cell_b, grid.ref_x,
                            grid.ref_w, cols, near, backend)


def _jump_flags(grid: Grid, jump: np.ndarray, scale: float) -> np.ndarray:
    hit = np.flatnonzero(jump > JUMP_TOL * max(scale, 1e-300))
    flags = np.zeros(len(grid.nodes), dtype=bool)
    for i in hit:
        flags[max(i - FLAG_CELLS, 0):i + FLAG_CELLS + 1] = True
    return flags


def _finish(f: GridFunction, col: np.ndarray, targets: np.ndarray,
            spec: PVQuadSpec, jump: np.ndarray, nodes_only: bool) -> GridFunction:
    g = f.grid
    tail = ()
    if spec.tail_mode == "first_moment":
        if f.tail:
            col = col + _tail_transform(targets, g.L, f.tail)
        moments = []
        for k in range(spec.tail_terms):
            m = complex(np.dot(g.weights, g.points ** k * f.qvalues))
            m += sum(c * _outside_power(j - k, g.L) for j, c in enumerate(f.tail, start=1))
            moments.append(m)
        tail = tuple(-m / (np.pi * 1j) for m in moments)
    col = col / (np.pi * 1j)
    nn = len(g.nodes)
    scale = float(np.max(np.abs(f.qvalues), initial=0.0))
    flags = _jump_flags(g, jump[:nn], scale)
    q = np.zeros(len(g.points), dtype=complex) if nodes_only else col[nn:]
    return GridFunction(g, col[:nn], q, None, tail, flags)


def cauchy_S(f: GridFunction, spec: PVQuadSpec = DEFAULT_PV, at: str = "all",
             backend=None) -> GridFunction:
    """``(1/(pi i)) PV int f(t)/(t - x) dt`` at the mesh and Gauss points.

    Mesh points within two cells of a jump of f, where ``Sf`` has a
    logarithmic singularity, are returned in ``flagged``; their values are the
    finite part.  With ``at='nodes'`` only the nodal values are computed and
    the Gauss-point values are left at zero.
    """
    g = f.grid
    if at not in ("all", "nodes"):
        raise ValueError("at must be 'all' or 'nodes'")
    targets = g.nodes if at == "nodes" else np.concatenate((g.nodes, g.points))
    res, jump = _apply_cols(g, f.qvalues, targets, spec, backend)
    return _finish(f, res[:, 0], targets, spec, jump, at == "nodes")


def cauchy_S_many(fs, spec: PVQuadSpec = DEFAULT_PV, backend=None, batch: int = 32):
    """``cauchy_S`` of several functions on a common grid, batched."""
    fs = list(fs)
    if not fs:
        return []
    g = fs[0].grid
    for f in fs[1:]:
        if not f.grid.same_as(g):
            raise ValueError("all functions must share a grid")
    targets = np.concatenate((g.nodes, g.points))
    out = []
    for s in range(0, len(fs), batch):
        chunk = fs[s:s + batch]
        cols = np.stack([f.qvalues for f in chunk], axis=1)
        res, _ = _apply_cols(g, cols, targets, spec, backend)
        for i, f in enumerate(chunk):
            # the kernel reports the largest jump over a batch; split it per column
            out.append(_finish(f, res[:, i], targets, spec, _node_jumps(f), False))
    return out


def _node_jumps(f: GridFunction) -> np.ndarray:
    """``|P_right(x) - P_left(x)|`` of the cell interpolants at each mesh point."""
    g = f.grid
    V = f.cell_values
    bary, _ = kernels.barycentric(g.ref_x)

    def at(t):
        d = t - g.ref_x
        lw = bary / d
        return lw / lw.sum()

    right_end = V @ at(1.0)   # value of cell c at its right end
    left_end = V @ at(-1.0)
    jump = np.zeros(len(g.nodes))
    jump[1:-1] = np.abs(left_end[1:] - right_end[:-1])
    jump[0] = abs(left_end[0])
    jump[-1] = abs(right_end[-1])
    return jump


# ---------------------------------------------------------------------------
# Maximal operator and rearrangement
# ---------------------------------------------------------------------------


def cell_integrals_abs(f: GridFunction) -> np.ndarray:
    """Per-cell integrals of ``|f|``; singular cells use the power-law fit."""
    g = f.grid
    k = g.order
    a = np.abs(f.qvalues)
    out = (g.weights * a).reshape(g.n_cells, k).sum(axis=1)
    mask = singular_cell_mask(g)
    if np.any(mask):
        cells = np.flatnonzero(mask)
        for c, d in zip(cells, _singular_distances(g, cells)):
            val, _ = power_law_cell(a[c * k:(c + 1) * k], d, g.widths[c])
            if val is not None and math.isfinite(val):
                out[c] = val
    return out


def maximal_M(f: GridFunction, backend=None) -> GridFunction:
    """Hardy-Littlewood maximal function over intervals with mesh endpoints.

    Nodal values take the sup over intervals containing the mesh point;
    Gauss-point values the sup over intervals containing the cell.
    """
    g = f.grid
    cum = np.concatenate(([0.0], np.cumsum(cell_integrals_abs(f))))
    nv, cv = kernels.maximal_sweep(cum, g.nodes, backend)
    return GridFunction(g, nv, np.repeat(cv, g.order))


def distribution(f: GridFunction, lam: float) -> float:
    """``|{x in [-L, L] : |f(x)| > lam}|`` by Gauss-weight sums."""
    g = f.grid
    return float(np.sum(g.weights[np.abs(f.qvalues) > lam]))


def _rearr_sorted(vals: np.ndarray, wts: np.ndarray):
    order = np.argsort(-vals, kind="stable")
    return vals[order], np.cumsum(wts[order])


def _rearr_at(v: np.ndarray, cw: np.ndarray, t: float) -> float:
    i = int(np.searchsorted(cw, t * (1.0 + 1e-12), side="right"))
    return float(v[i]) if i < len(v) else 0.0


def rearrangement(f: GridFunction, t):
    """Nonincreasing rearrangement ``f*(t) = inf{s : |{|f| > s}| <= t}``.

    The distribution is that of the Gauss-point values with their weights, so
    ``int f* = int |f|`` holds to rounding.
    """
    v, cw = _rearr_sorted(np.abs(f.qvalues), f.grid.weights)
    if np.ndim(t) == 0:
        if t < 0:
            raise ValueError("t must be nonnegative")
        return _rearr_at(v, cw, float(t))
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return np.array([_rearr_at(v, cw, x) for x in t])


# ---------------------------------------------------------------------------
# Sharp maximal functions
# ---------------------------------------------------------------------------


@dataclass
class SharpPair:
    sharp: GridFunction
    local: GridFunction
    delta: float
    lam: float


def sharp_both(f: GridFunction, delta: float, lam: float, backend=None) -> SharpPair:
    """``f#_delta`` and ``M#_lambda f`` from one shared candidate search.

    For every interval with mesh endpoints the best constant is searched among
    the weighted quantiles of ``Re f`` at resolution 1/64 and the midpoints of
    adjacent quantiles (imaginary part fixed at the weighted median of
    ``Im f``).  Both functions use the same candidates, so the pointwise bound
    ``M#_lambda f <= (1/lambda)**(1/delta) f#_delta`` holds exactly.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    g = f.grid
    C, k = g.n_cells, g.order
    q = f.qvalues
    Fd, Ml = kernels.sharp_intervals(q.real.copy(), q.imag.copy(), np.asarray(g.weights),
                                     C, k, float(delta), float(lam), backend)
    nf, cf = kernels.interval_sup(Fd)
    nm, cm = kernels.interval_sup(Ml)
    return SharpPair(GridFunction(g, nf, np.repeat(cf, k)),
                     GridFunction(g, nm, np.repeat(cm, k)), delta, lam)


def sharp_delta(f: GridFunction, delta: float, backend=None) -> GridFunction:
    """``f#_delta(x) = sup_Q inf_c (avg_Q |f - c|**delta)**(1/delta)``."""
    return sharp_both(f, delta, 0.5, backend).sharp


def local_sharp_M(f: GridFunction, lam: float, backend=None) -> GridFunction:
    """``M#_lambda f(x) = sup_Q inf_c ((f - c) chi_Q)^*(lambda |Q|)``."""
    return sharp_both(f, 1.0, lam, backend).local
