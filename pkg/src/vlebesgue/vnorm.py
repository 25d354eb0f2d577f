"""Modulars and Luxemburg norms on weighted variable Lebesgue spaces.

All norm computations reduce a function to a list of *atoms* ``(c_i, e_i)``
so that the modular at scale ``lam`` is ``sum c_i lam**-e_i``: one atom per
Gauss point, one per cell touching a singular node (integrated through a
fitted power law) and a few for the analytic tail beyond ``[-L, L]``.  The
scale solving ``modular = 1`` is then found by bisection.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exponent import VariableExponent, conjugate
from .gridfn import (GridFunction, Grid, FunctionExpr, sample, power_law_cell,
                     singular_cell_mask, _singular_distances, integrate,
                     tail_eval)
from .weight import WeightSpec

REL_BRACKET = 1e-8
MODULAR_BAND = 1e-6
MAX_DOUBLINGS = 200
TAIL_SPAN = 40.0
TAIL_CELL = 0.5


class NormOverflow(ArithmeticError):
    pass


@dataclass
class Atoms:
    coef: np.ndarray
    expo: np.ndarray
    dist: np.ndarray
    divergent: bool
    betas: list = field(default_factory=list)

    def modular(self, lam: float) -> float:
        if self.divergent:
            return math.inf
        return float(np.sum(self.coef * lam ** -self.expo))


@dataclass
class ModularResult:
    value: float
    divergence_flag: bool
    refinement_trace: list

    def to_json(self):
        return {"value": _num(self.value), "divergent": self.divergence_flag,
                "refinement_trace": [_num(v) for v in self.refinement_trace]}


@dataclass
class NormResult:
    value: float
    bracket: tuple
    modular_at_value: float
    divergent: bool = False

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def to_json(self):
        return {"value": _num(self.value), "bracket": [_num(b) for b in self.bracket],
                "modular_at_value": _num(self.modular_at_value),
                "divergent": self.divergent, "rel_bracket_tol": REL_BRACKET,
                "modular_band": MODULAR_BAND}


def _num(v):
    return v if math.isfinite(v) else ("+inf" if v > 0 else "-inf")


def _tail_atoms(f: GridFunction, p: VariableExponent, w: Optional[WeightSpec]):
    if not f.tail:
        return None
    L = f.grid.L
    ref_x, ref_w = np.polynomial.legendre.leggauss(6)
    ncell = int(TAIL_SPAN / TAIL_CELL)
    left = np.arange(ncell) * TAIL_CELL
    s = (left[:, None] + TAIL_CELL * 0.5 * (ref_x[None, :] + 1)).ravel()
    ws = np.tile(TAIL_CELL * 0.5 * ref_w, ncell)
    coefs, expos = [], []
    for sign in (1.0, -1.0):
        # x = +-L e**s, dx = |x| ds
        x = sign * L * np.exp(s)
        t = np.abs(tail_eval(f.tail, x))
        if w is not None:
            t = t * w.eval(x)
        e = p.value(x)
        h = t ** e * np.abs(x)
        coefs.append(ws * h)
        expos.append(e)
        # remainder beyond the last sample: exponential fit in s
        h0, h1 = h[-2 * 6], h[-1]
        if h1 == 0:
            continue
        rate = math.log(h1 / h0) / (s[-1] - s[-12]) if h0 > 0 else 0.0
        if rate >= -1e-6:
            return "divergent"
        h_end = h1 * math.exp(rate * (TAIL_SPAN - s[-1]))
        coefs.append(np.array([h_end / -rate]))
        expos.append(np.array([e[-1]]))
    return np.concatenate(coefs), np.concatenate(expos)


def modular_atoms(f: GridFunction, p: VariableExponent,
                  w: Optional[WeightSpec] = None) -> Atoms:
    g = f.grid
    k = g.order
    mag = np.abs(f.qvalues)
    if w is not None:
        mag = mag * w.eval(g.points)
    e = p.value(g.points)
    with np.errstate(divide="ignore", over="ignore"):
        h = mag ** e
    coef = g.weights * h
    dist = np.full(coef.shape, np.inf)
    divergent = False
    betas = []
    extra_c, extra_e, extra_d = [], [], []
    sing = np.asarray(g.singular)
    if sing.size:
        dist = np.min(np.abs(g.points[:, None] - sing[None, :]), axis=1)
        mask = singular_cell_mask(g)
        cells = np.flatnonzero(mask)
        for c, d in zip(cells, _singular_distances(g, cells)):
            sl = slice(c * k, (c + 1) * k)
            val, beta = power_law_cell(h[sl], d, g.widths[c])
            if val is None:
                continue
            betas.append(beta)
            if math.isinf(val):
                divergent = True
            coef[sl] = 0.0
            extra_c.append(val)
            extra_e.append(float(np.mean(e[sl])))
            extra_d.append(0.0)
    tail = _tail_atoms(f, p, w)
    if isinstance(tail, str):
        divergent = True
    elif tail is not None:
        extra_c.extend(tail[0])
        extra_e.extend(tail[1])
        extra_d.extend([np.inf] * len(tail[0]))
    if not np.all(np.isfinite(coef)):
        divergent = True
    coef = np.concatenate((coef, np.asarray(extra_c, float)))
    expo = np.concatenate((e, np.asarray(extra_e, float)))
    dist = np.concatenate((dist, np.asarray(extra_d, float)))
    return Atoms(coef, expo, dist, divergent, betas)


def modular(f: GridFunction, p: VariableExponent, lam: float = 1.0,
            w: Optional[WeightSpec] = None) -> ModularResult:
    """``int |f w / lam|**p(x) dx`` with divergence detection.

    The refinement trace lists the modular restricted to points at distance
    at least ``h 2**-d`` from the singular nodes, ``d = 0..depth``, followed
    by the full value.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    atoms = modular_atoms(f, p, w)
    if atoms.divergent:
        trace = _trace(atoms, f.grid, lam)
        return ModularResult(math.inf, True, trace + [math.inf])
    val = atoms.modular(lam)
    return ModularResult(val, False, _trace(atoms, f.grid, lam) + [val])


def _trace(atoms: Atoms, grid: Grid, lam: float):
    if not grid.singular:
        return []
    with np.errstate(over="ignore", invalid="ignore"):
        terms = atoms.coef * lam ** -atoms.expo
    out = []
    for d in range(grid.depth + 1):
        cut = grid.h * 2.0 ** -d
        m = atoms.dist >= cut
        out.append(float(np.sum(terms[m & np.isfinite(terms)])))
    return out


def norm_from_atoms(atoms: Atoms) -> NormResult:
    if atoms.divergent:
        return NormResult(math.inf, (math.inf, math.inf), math.inf, True)
    c, e = atoms.coef, atoms.expo
    nz = c > 0
    c, e = c[nz], e[nz]
    if c.size == 0:
        return NormResult(0.0, (0.0, 0.0), 0.0)
    total = float(np.sum(c))
    emin, emax = float(e.min()), float(e.max())
    if emax - emin <= 1e-15 * emax:
        lam = total ** (1.0 / emin)
        m = float(np.sum(c * lam ** -e))
        return NormResult(lam, (lam, lam), m)

    def mod(lam):
        return float(np.sum(c * lam ** -e))

    cands = (total ** (1.0 / emin), total ** (1.0 / emax))
    lo, hi = min(cands), max(cands)
    for _ in range(MAX_DOUBLINGS):
        if mod(lo) >= 1.0:
            break
        lo *= 0.5
    else:
        raise NormOverflow("lower bracket did not converge")
    for _ in range(MAX_DOUBLINGS):
        if mod(hi) <= 1.0:
            break
        hi *= 2.0
    else:
        raise NormOverflow("upper bracket did not converge")
    for _ in range(400):
        if hi / lo - 1.0 <= REL_BRACKET:
            break
        mid = math.sqrt(lo * hi)
        if mod(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    # Newton polish on log(modular) in log(lam), kept inside the bracket
    lam = hi
    for _ in range(6):
        t = c * lam ** -e
        m = float(np.sum(t))
        if m == 1.0:
            break
        dm = -float(np.sum(e * t)) / m
        nxt = lam * math.exp(-math.log(m) / dm)
        if not lo <= nxt <= hi or nxt == lam:
            break
        lam = nxt
    return NormResult(lam, (lo, hi), mod(lam))


def luxemburg_norm(f: GridFunction, p: VariableExponent) -> NormResult:
    """``inf{lam > 0 : modular(f/lam) <= 1}``."""
    return norm_from_atoms(modular_atoms(f, p, None))


def weighted_norm(f: GridFunction, p: VariableExponent, w: WeightSpec) -> NormResult:
    """``|| f w ||_{p(.)}``; the grid should be graded toward w's nodes."""
    return norm_from_atoms(modular_atoms(f, p, w))


def norm_of_weight_on(grid: Grid, a: float, b: float, p: VariableExponent,
                      w: WeightSpec) -> NormResult:
    """``|| w chi_(a,b) ||_{p(.)}`` evaluated on the sub-grid of ``(a, b)``."""
    sub = grid.restrict(a, b)
    ones = GridFunction(sub, np.ones(len(sub.nodes)), np.ones(len(sub.points)))
    return weighted_norm(ones, p, w)


@dataclass
class HolderResult:
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    constant: float = 2.0

    def to_json(self):
        return {"lhs": _num(self.lhs), "rhs": _num(self.rhs), "ratio": _num(self.ratio),
                "pass": self.passed, "K": self.constant}


def holder_check(f: GridFunction, g: GridFunction, p: VariableExponent,
                 K: float = 2.0) -> HolderResult:
    """``int |f g| <= K ||f||_{p(.)} ||g||_{p'(.)}`` with K = 2."""
    prod = (f * g).abs()
    lhs = integrate(prod, exact=False).real
    nf = luxemburg_norm(f, p).value
    ng = luxemburg_norm(g, conjugate(p)).value
    rhs = K * nf * ng
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return HolderResult(lhs, rhs, ratio, bool(lhs <= rhs * (1 + 1e-12)), K)


@dataclass
class DualEstimate:
    lower_bound: float
    argmax: int
    values: list


def dual_norm_estimate(g: GridFunction, p: VariableExponent, w: WeightSpec,
                       family: Sequence[FunctionExpr]) -> DualEstimate:
    """Lower bound for the associate norm of g: max of ``|int f g|`` over
    family members normalized to unit weighted norm."""
    if not family:
        raise ValueError("empty family")
    vals = []
    for e in family:
        f = sample(e, g.grid)
        n = weighted_norm(f, p, w)
        if not n.finite or n.value == 0:
            vals.append(0.0)
            continue
        pair = abs(np.dot(g.grid.weights, f.qvalues * g.qvalues))
        vals.append(float(pair / n.value))
    i = int(np.argmax(vals))
    return DualEstimate(vals[i], i, vals)
