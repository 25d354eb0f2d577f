"""The interval functional of the weight class and its sup over interval families."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exponent import VariableExponent, conjugate
from .gridfn import Grid, grid_for, DEFAULT_L, DEFAULT_N
from .vnorm import norm_of_weight_on, _num
from .weight import WeightSpec, PowerWeight, invert, ks_criterion, KSResult

QUALIFIER = "no divergence detected at depth levels"
GROWTH_FACTOR = 10.0
INF_EXPONENT_TOL = 1e-3
_FAR = (2.0 ** 20, 2.0 ** 30)


@dataclass(frozen=True, order=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("interval endpoints must be finite")
        if not self.a < self.b:
            raise ValueError(f"empty interval ({self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)

    def halves(self):
        m = self.center
        return Interval(self.a, m), Interval(m, self.b)

    def to_json(self):
        return [self.a, self.b]


def ap_functional(p: VariableExponent, w: WeightSpec, q: Interval,
                  grid: Optional[Grid] = None) -> float:
    """``|Q|**-1 ||w chi_Q||_{p(.)} ||w**-1 chi_Q||_{p'(.)}``; ``inf`` on divergence."""
    if grid is None:
        grid = ap_grid(p, w)
    if q.a < -grid.L - 1e-12 or q.b > grid.L + 1e-12:
        raise ValueError(f"interval ({q.a}, {q.b}) not inside [-L, L]")
    n1 = norm_of_weight_on(grid, q.a, q.b, p, w)
    if not n1.finite:
        return math.inf
    n2 = norm_of_weight_on(grid, q.a, q.b, conjugate(p), invert(w))
    if not n2.finite:
        return math.inf
    return n1.value * n2.value / q.length


def ap_grid(p: VariableExponent, w: WeightSpec, L: float = DEFAULT_L,
            n: int = DEFAULT_N, depth: int = 8) -> Grid:
    return grid_for((), weight=w, exponent=p, L=L, n=n, depth=depth)


def _nodes(p, w):
    return sorted(set(float(x) for x in w.singular_nodes())
                  | set(float(x) for x in p.breakpoints()))


def _family_level(nodes, levels: int, L: float):
    out = []
    kmax = int(math.floor(math.log2(L)))
    for k in range(-levels, kmax + 1):
        ell = 2.0 ** k
        step = max(ell / 2, L / 64)
        a = -L
        while a + ell <= L + 1e-12:
            out.append((a, a + ell))
            a += step
        for s in nodes:
            out.extend([(s - ell / 2, s + ell / 2), (s - ell, s), (s, s + ell)])
    out.append((-L, L))
    return [(a, b) for a, b in out if a >= -L - 1e-12 and b <= L + 1e-12]


def interval_family(p: VariableExponent, w: WeightSpec, levels: int,
                    L: float = DEFAULT_L, with_levels: bool = False):
    """Deterministic family of test intervals.

    Dyadic lengths ``2**k`` for ``k = -levels .. floor(log2 L)`` with left
    endpoints every ``max(length/2, L/64)``; for every node of w or p the
    intervals centred at the node and the two with an endpoint at it; and
    ``[-L, L]``.  Families are nested in ``levels``.  With ``with_levels``
    each interval comes with the smallest level that contains it.
    """
    if levels < 3:
        raise ValueError("levels must be at least 3")
    nodes = _nodes(p, w)
    seen = {}
    for lev in range(3, levels + 1):
        for a, b in _family_level(nodes, lev, L):
            key = (round(a, 12), round(b, 12))
            if key not in seen:
                seen[key] = (Interval(a, b), lev)
    items = sorted(seen.values(), key=lambda t: (t[1], t[0].a, t[0].b))
    return items if with_levels else [q for q, _ in items]


def infinity_exponent(p: VariableExponent, w: WeightSpec) -> float:
    """Growth rate of the functional on ``(-R, R)`` as ``R -> inf``.

    With ``|w|**p ~ |x|**beta`` and ``|w|**-p' ~ |x|**beta'`` at infinity the
    functional behaves like ``R**e``,
    ``e = max(beta + 1, 0)/p + max(beta' + 1, 0)/p' - 1``.  The slopes are
    fitted between ``2**20`` and ``2**30`` on each side.
    """
    pc = conjugate(p)
    wi = invert(w)
    first, second = 0.0, 0.0
    x0, x1 = _FAR
    for sign in (1.0, -1.0):
        xs = sign * np.array([x0, x1])
        for ww, pp, slot in ((w, p, 0), (wi, pc, 1)):
            e = pp.value(xs)
            v = ww.eval(xs) ** e
            beta = math.log(v[1] / v[0]) / math.log(x1 / x0)
            r = max(beta + 1.0, 0.0) / float(e[1])
            if slot == 0:
                first = max(first, r)
            else:
                second = max(second, r)
    return first + second - 1.0


@dataclass
class ApReport:
    values: list
    sup_estimate: float
    divergent: bool
    argmax: Optional[Interval]
    family: dict
    trace: list
    infinity_exponent: float
    divergence_source: list = field(default_factory=list)
    qualifier: str = QUALIFIER

    def to_json(self):
        return {
            "sup_estimate": _num(self.sup_estimate),
            "divergent": self.divergent,
            "argmax": self.argmax.to_json() if self.argmax else None,
            "family": self.family,
            "trace": [[lev, _num(v)] for lev, v in self.trace],
            "infinity_exponent": self.infinity_exponent,
            "divergence_source": self.divergence_source,
            "qualifier": self.qualifier,
            "n_intervals": len(self.values),
        }

    def csv_rows(self):
        return [(q.a, q.b, v) for q, v, _ in self.values]


def ap_estimate(p: VariableExponent, w: WeightSpec, levels: int = 8,
                grid: Optional[Grid] = None) -> ApReport:
    """Sup of the functional over ``interval_family``; a lower bound of the class constant.

    Divergent when an interval carries an infinite norm, when the
    large-interval exponent is positive, or when the per-level sup grows by
    a factor of at least 10 between level 3 and ``levels``.
    """
    if grid is None:
        grid = ap_grid(p, w)
    fam = interval_family(p, w, levels, grid.L, with_levels=True)
    values = []
    for q, lev in fam:
        values.append((q, ap_functional(p, w, q, grid), lev))
    trace = []
    for lev in range(3, levels + 1):
        vs = [v for _, v, l in values if l <= lev]
        trace.append((lev, max(vs)))
    finite = [(v, q) for q, v, _ in values if math.isfinite(v)]
    sup = max(finite)[0] if finite else math.inf
    argmax = max(values, key=lambda t: t[1])[0] if values else None
    e_inf = infinity_exponent(p, w)
    sources = []
    if any(math.isinf(v) for _, v, _ in values):
        sources.append("local: infinite norm on an interval")
    if e_inf > INF_EXPONENT_TOL:
        sources.append("infinity: functional grows on large intervals")
    t0, t1 = trace[0][1], trace[-1][1]
    if math.isfinite(t1) and t1 >= GROWTH_FACTOR * t0:
        sources.append("trace: sup grew by at least 10x across levels")
    family = {"levels": levels, "L": grid.L, "nodes": _nodes(p, w),
              "rule": "dyadic lengths, node-centred and node-anchored intervals, [-L, L]"}
    return ApReport(values, sup, bool(sources), argmax, family, trace, e_inf, sources)


@dataclass
class Classification:
    in_class: bool
    report: ApReport
    ks: Optional[KSResult]

    @property
    def ks_verdict(self) -> Optional[bool]:
        return None if self.ks is None else self.ks.verdict

    @property
    def concordant(self) -> Optional[bool]:
        return None if self.ks is None else self.ks.verdict == self.in_class

    def to_json(self):
        return {"in_class": self.in_class, "ks_verdict": self.ks_verdict,
                "concordant": self.concordant, "report": self.report.to_json(),
                "ks": self.ks.to_json() if self.ks else None}


def classify(p: VariableExponent, w: WeightSpec, levels: int = 8,
             grid: Optional[Grid] = None) -> Classification:
    """Membership surrogate: in the class when no divergence is detected."""
    rep = ap_estimate(p, w, levels, grid)
    ks = ks_criterion(p, w) if isinstance(w, PowerWeight) else None
    return Classification(not rep.divergent, rep, ks)
