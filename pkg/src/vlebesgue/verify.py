"""Property suites for the singular integral on weighted variable Lebesgue spaces.

Every suite returns a :class:`VerifyReport`.  Cases marked ``asserted`` decide
the pass/fail status; the others record empirical ratios whose constants are
unknown and are reported only.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ap import Interval
from .exponent import (VariableExponent, ConstExponent, PiecewiseExponent,
                       LogLikeExponent, AtanExponent, conjugate)
from .gridfn import (FunctionExpr, CharFun, Bump, PowerFun, PolyBump, Grid, GridFunction,
                     grid_for, make_grid, sample, integrate, inner_product, tail_eval,
                     DEFAULT_L, DEFAULT_N)
from .sio import cauchy_S, cauchy_S_many, maximal_M, sharp_both
from .vnorm import weighted_norm, norm_of_weight_on, holder_check, _num
from .weight import WeightSpec, UNIT_WEIGHT, invert

FAMILY_VERSION = 1
S2_TOL = 1e-2
SELF_ADJ_TOL = 1e-6
LERNER_SLACK = 1e-10
DENOM_GUARD = 1e-8
S_INFLATION = 1.5
RELATIVE_ALPHAS = tuple(2.0 ** j for j in range(-6, 5))


@dataclass
class Case:
    name: str
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    asserted: bool = True
    extra: dict = field(default_factory=dict)

    def to_json(self):
        d = {"name": self.name, "lhs": _num(self.lhs), "rhs": _num(self.rhs),
             "ratio": _num(self.ratio), "pass": self.passed, "asserted": self.asserted}
        if self.extra:
            d["extra"] = {k: (_num(v) if isinstance(v, float) else v)
                          for k, v in self.extra.items()}
        return d


@dataclass
class VerifyReport:
    suite: str
    cases: list
    tolerances: dict
    grid: dict
    notes: list = field(default_factory=list)

    @property
    def worst_ratio(self) -> float:
        r = [c.ratio for c in self.cases if not math.isnan(c.ratio)]
        return max(r) if r else 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases if c.asserted)

    def to_json(self):
        return {"suite": self.suite, "pass": self.passed,
                "worst_ratio": _num(self.worst_ratio), "tolerances": self.tolerances,
                "grid": self.grid, "family_version": FAMILY_VERSION,
                "notes": self.notes, "cases": [c.to_json() for c in self.cases]}

    def csv_rows(self):
        return [(c.name, c.lhs, c.rhs, c.ratio, c.passed, c.asserted) for c in self.cases]


def _ratio(lhs, rhs):
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs == 0 else math.inf


# ---------------------------------------------------------------------------
# Test families
# ---------------------------------------------------------------------------


def dyadic_chars() -> list:
    """Indicators of dyadic intervals of length 1/4 .. 2 around the origin."""
    out = []
    for k in (-2, -1, 0, 1):
        ell = 2.0 ** k
        for j in (-2, -1, 0, 1):
            out.append(CharFun(j * ell, (j + 1) * ell))
    return out


def dipoles() -> list:
    """Zero-mean pairs ``chi_(a,b) - chi_(b,c)``."""
    triples = [(-1.0, 0.0, 1.0), (0.5, 1.5, 2.5), (-2.0, -1.5, -1.0),
               (-0.25, 0.0, 0.25), (1.0, 3.0, 5.0)]
    return [CharFun(a, b) - CharFun(b, c) for a, b, c in triples]


def concentration_radii(levels: int = 3) -> list:
    return [2.0 ** (-1 - 2 * k) for k in range(levels)]


def bumps_near(nodes: Sequence[float], levels: int = 3) -> list:
    """For each node and level, a bump of radius r centred at ``node + 2r``."""
    nodes = list(nodes) or [0.0]
    return [[Bump(s + 2 * r, r) for s in nodes] for r in concentration_radii(levels)]


def smooth_bumps() -> list:
    return [Bump(0.0, 1.0), Bump(0.5, 1.0), Bump(-1.0, 0.5), Bump(2.0, 2.0),
            PolyBump((0.0, 1.0), 0.0, 1.0), PolyBump((1.0, 0.0, -2.0), 0.5, 1.5)]


def default_family(nodes: Sequence[float] = ()) -> list:
    fam = dyadic_chars() + dipoles() + smooth_bumps()
    for level in bumps_near(nodes):
        fam.extend(level)
    return fam


def s_squared_family() -> list:
    return dipoles() + smooth_bumps()


def _family_grid(exprs, w=None, p=None, L=DEFAULT_L, n=DEFAULT_N, depth=8) -> Grid:
    return grid_for(exprs, weight=w, exponent=p, L=L, n=n, depth=depth, grade_breaks=True)


def _grid_meta(g: Grid) -> dict:
    return g.metadata()


def _masked(f: GridFunction, flags) -> GridFunction:
    """f with the cells touching flagged mesh points zeroed and the tail dropped."""
    g = f.grid
    if flags is None:
        return GridFunction(g, f.values, f.qvalues)
    bad = flags[:-1] | flags[1:]
    q = np.where(np.repeat(bad, g.order), 0, f.qvalues)
    v = np.where(flags, 0, f.values)
    return GridFunction(g, v, q)


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


def check_s_squared(family: Sequence[FunctionExpr], p: VariableExponent,
                    w: WeightSpec = UNIT_WEIGHT, L: float = DEFAULT_L,
                    n: int = DEFAULT_N, depth: int = 8) -> VerifyReport:
    """Relative error ``||S(Sf) - f|| / ||f||`` in the weighted norm.

    Cells within two cells of a logarithmic singularity of Sf are excluded
    from the numerator.
    """
    family = list(family)
    g = _family_grid(family, w, p, L, n, depth)
    fs = [sample(e, g) for e in family]
    s1 = cauchy_S_many(fs)
    s2 = cauchy_S_many(s1)
    cases = []
    for e, f, a, b in zip(family, fs, s1, s2):
        flags = a.flagged | b.flagged
        diff = _masked(b - f, flags)
        den = weighted_norm(f, p, w).value
        num = weighted_norm(diff, p, w).value
        err = _ratio(num, den) if den > 0 or num > 0 else 0.0
        cases.append(Case(_name(e), num, den, err, bool(err <= S2_TOL),
                          extra={"excluded_mesh_points": int(flags.sum())}))
    return VerifyReport("s_squared", cases, {"relative_error": S2_TOL}, _grid_meta(g))


def check_self_adjoint(pairs: Sequence, p: VariableExponent = ConstExponent(2.0),
                       w: WeightSpec = UNIT_WEIGHT, L: float = DEFAULT_L,
                       n: int = DEFAULT_N, depth: int = 8) -> VerifyReport:
    """``|<Sf, g> - <f, Sg>| <= 1e-6 ||f||_2 ||g||_2`` for every pair."""
    pairs = list(pairs)
    uniq = []
    for f, g in pairs:
        for e in (f, g):
            if e not in uniq:
                uniq.append(e)
    grid = _family_grid(uniq, None, None, L, n, depth)
    samples = [sample(e, grid) for e in uniq]
    images = cauchy_S_many(samples)
    cases = []
    for f, g in pairs:
        i, j = uniq.index(f), uniq.index(g)
        lhs = inner_product(images[i], samples[j])
        rhs = inner_product(samples[i], images[j])
        nf = math.sqrt(inner_product(samples[i], samples[i]).real)
        ng = math.sqrt(inner_product(samples[j], samples[j]).real)
        diff = abs(lhs - rhs)
        bound = SELF_ADJ_TOL * nf * ng
        cases.append(Case(f"{_name(f)} | {_name(g)}", diff, bound, _ratio(diff, bound),
                          bool(diff <= bound), extra={"Sf_g": str(lhs), "f_Sg": str(rhs)}))
    return VerifyReport("self_adjoint", cases, {"relative": SELF_ADJ_TOL},
                        _grid_meta(grid))


def default_pairs(count: int = 50, seed: int = 42) -> list:
    fam = dyadic_chars() + dipoles() + smooth_bumps()
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        i, j = rng.integers(0, len(fam), size=2)
        out.append((fam[int(i)], fam[int(j)]))
    return out


def _level_measure(sf: GridFunction, alpha: float) -> float:
    g = sf.grid
    inside = float(np.sum(g.weights[np.abs(sf.qvalues) > alpha]))
    outside = 0.0
    if sf.tail:
        # |tail| decays monotonically beyond L once the leading term dominates
        xs = g.L * np.exp(np.linspace(0.0, 40.0, 4001))
        for sign in (1.0, -1.0):
            v = np.abs(tail_eval(sf.tail, sign * xs))
            above = np.flatnonzero(v > alpha)
            if above.size:
                outside += xs[above[-1]] - g.L
    return inside + outside


def weak_type_constant(f: GridFunction, alphas: Sequence[float]) -> tuple:
    sf = cauchy_S(f)
    norm1 = integrate(f.abs(), exact=False).real
    if norm1 == 0:
        return 0.0, None
    best, arg = 0.0, None
    for a in alphas:
        v = a * _level_measure(sf, a) / norm1
        if v > best:
            best, arg = v, a
    return best, arg


def check_weak_type(family: Sequence[FunctionExpr], alpha_grid: Optional[Sequence[float]] = None,
                    L: float = DEFAULT_L, n: int = DEFAULT_N, depth: int = 8) -> VerifyReport:
    """Empirical weak (1,1) constant ``sup_alpha alpha |{|Sf| > alpha}| / ||f||_1``.

    Passes when the constant changes by less than 2x between the grid with
    ``(n + 1)/2`` points and the one with ``n``.  Without ``alpha_grid`` the
    levels are ``2**j * ||f||_1`` for ``j = -6..4``.
    """
    cases = []
    meta = None
    for e in family:
        vals = []
        for nn in ((n + 1) // 2, n):
            g = _family_grid([e], None, None, L, nn, depth)
            f = sample(e, g)
            if alpha_grid is None:
                norm1 = integrate(f.abs(), exact=False).real
                alphas = [r * norm1 for r in RELATIVE_ALPHAS]
            else:
                alphas = list(alpha_grid)
            vals.append(weak_type_constant(f, alphas)[0])
            meta = _grid_meta(g)
        c0, c1 = vals
        growth = _ratio(max(c0, c1), min(c0, c1)) if max(c0, c1) > 0 else 1.0
        cases.append(Case(_name(e), c1, c0, growth, bool(growth < 2.0),
                          extra={"C_K_coarse": c0, "C_K_fine": c1}))
    rep = VerifyReport("weak_type", cases, {"refinement_growth": 2.0}, meta or {})
    rep.notes.append("ratio is the refinement growth of the empirical weak-type constant")
    return rep


def _lerner_grid(exprs) -> Grid:
    return grid_for(exprs, L=4.0, n=65, depth=0, order=4)


def _lerner_cases(name, grid, fs, gs, phi, sharp, local, delta, lam):
    const = (1.0 / lam) ** (1.0 / delta)
    alt = (1.0 / lam) ** delta

    def pts(h):
        return np.concatenate((h.values.real, h.cell_values[:, 0].real))

    lhs = pts(local)
    shp = pts(sharp)
    rhs = const * shp
    viol = int(np.sum(lhs > rhs + LERNER_SLACK))
    ok = rhs > DENOM_GUARD
    r2 = float(np.max(lhs[ok] / rhs[ok])) if np.any(ok) else 0.0
    r2_alt = float(np.max(lhs[ok] / (alt * shp[ok]))) if np.any(ok) else 0.0
    mg = maximal_M(gs)
    num = integrate((phi * gs).abs(), exact=False).real
    den = float(np.dot(grid.weights, local.qvalues.real * mg.qvalues.real))
    r1 = _ratio(num, den)
    mfx = pts(maximal_M(fs))
    ok3 = mfx > DENOM_GUARD
    r3 = float(np.max(shp[ok3] / mfx[ok3])) if np.any(ok3) else 0.0
    name = f"{name} ; delta={delta} lambda={lam}"
    return [
        Case(name + " : pointwise", float(np.max(lhs - rhs)), LERNER_SLACK, r2,
             viol == 0, True, {"violations": viol, "R2_alt_normalization": r2_alt}),
        Case(name + " : R1", num, den, r1, True, False),
        Case(name + " : R3", r3, 1.0, r3, True, False),
    ]


LERNER_NOTES = ["R1 and R3 are reported only; their constants are not known numerically",
                "R2_alt uses the (1/lambda)**delta normalization and is reported only"]


def check_lerner_chain(f: FunctionExpr, g: FunctionExpr, delta: float, lam: float,
                       grid: Optional[Grid] = None) -> VerifyReport:
    """Sharp-function chain for ``phi = Sf`` and a nonnegative ``g``.

    Asserted: ``M#_lam phi <= (1/lam)**(1/delta) phi#_delta + 1e-10`` at
    every mesh point and cell.  Reported: ``R1 = int |phi g| /
    int M#_lam phi Mg``, ``R2`` the sup of the pointwise ratio, and ``R3 =
    sup (Sf)#_delta / Mf``.  The default grid is ``[-4, 4]`` with 65 points.
    """
    grid = _lerner_grid([f, g]) if grid is None else grid
    fs, gs = sample(f, grid), sample(g, grid)
    phi = cauchy_S(fs)
    sp = sharp_both(phi, delta, lam)
    cases = _lerner_cases(f"{_name(f)} ; {_name(g)}", grid, fs, gs, phi,
                          sp.sharp, sp.local, delta, lam)
    return VerifyReport("lerner", cases, {"slack": LERNER_SLACK,
                                          "denominator_guard": DENOM_GUARD},
                        _grid_meta(grid), list(LERNER_NOTES))


def lerner_family() -> list:
    """Pairs (f, g) for the sharp-function chain on the coarse grid."""
    fs = [CharFun(0.0, 1.0), CharFun(-1.0, 1.0), CharFun(-1.0, 0.0) - CharFun(0.0, 1.0),
          Bump(0.0, 1.0), PolyBump((0.0, 1.0), 0.0, 1.0, smooth=False),
          2.0 * CharFun(0.0, 1.0) + CharFun(1.0, 3.0)]
    gs = [CharFun(0.0, 1.0), Bump(0.5, 1.0)]
    return [(f, g) for f in fs for g in gs]


LERNER_DELTAS = (0.5, 1.0)
LERNER_LAMBDAS = (0.25, 0.5)


def check_lerner_battery(pairs=None, deltas=LERNER_DELTAS,
                         lams=LERNER_LAMBDAS) -> VerifyReport:
    """The chain over every pair and every (delta, lambda) combination.

    The best-constant candidates depend on the data only, so one sweep per
    delta (and per lambda) serves every combination.
    """
    pairs = lerner_family() if pairs is None else list(pairs)
    grid = _lerner_grid([e for pr in pairs for e in pr])
    cache = {}
    cases = []
    for f, g in pairs:
        if f not in cache:
            fs = sample(f, grid)
            phi = cauchy_S(fs)
            n = max(len(deltas), len(lams))
            runs = [sharp_both(phi, deltas[min(i, len(deltas) - 1)],
                               lams[min(i, len(lams) - 1)]) for i in range(n)]
            sharp = {r.delta: r.sharp for r in runs}
            local = {r.lam: r.local for r in runs}
            cache[f] = (fs, phi, sharp, local)
        fs, phi, sharp, local = cache[f]
        gs = sample(g, grid)
        for delta in deltas:
            for lam in lams:
                cases.extend(_lerner_cases(f"{_name(f)} ; {_name(g)}", grid, fs, gs, phi,
                                           sharp[delta], local[lam], delta, lam))
    return VerifyReport("lerner", cases, {"slack": LERNER_SLACK,
                                          "denominator_guard": DENOM_GUARD},
                        _grid_meta(grid), list(LERNER_NOTES))


def operator_norm_ratios(p: VariableExponent, w: WeightSpec, family: Sequence[FunctionExpr],
                         L: float = DEFAULT_L, n: int = DEFAULT_N, depth: int = 8,
                         grid: Optional[Grid] = None) -> list:
    """``||Sf||/||f||`` in the weighted norm for each member (inf when ||Sf|| diverges)."""
    family = list(family)
    if grid is None:
        grid = _family_grid(family, w, p, L, n, depth)
    fs = [sample(e, grid) for e in family]
    out = []
    for f, sf in zip(fs, cauchy_S_many(fs)):
        nf = weighted_norm(f, p, w)
        if not nf.finite or nf.value == 0:
            out.append(math.nan)
            continue
        out.append(weighted_norm(sf, p, w).value / nf.value)
    return out


def operator_norm_lower_bound(p: VariableExponent, w: WeightSpec,
                              family: Sequence[FunctionExpr], **kw) -> float:
    """Max over the family of ``||Sf|| / ||f||``; members with infinite norm are skipped."""
    r = [x for x in operator_norm_ratios(p, w, family, **kw) if not math.isnan(x)]
    if not r:
        raise ValueError("no family member has a finite nonzero norm")
    return max(r)


def norm_ratio_trace(p: VariableExponent, w: WeightSpec, levels: int = 3,
                     L: float = DEFAULT_L, n: int = DEFAULT_N, depth: int = 8) -> list:
    """Operator-norm lower bounds over bumps concentrating at the weight nodes."""
    groups = bumps_near(w.singular_nodes(), levels)
    flat = [e for grp in groups for e in grp]
    ratios = operator_norm_ratios(p, w, flat, L, n, depth)
    out, i = [], 0
    for grp in groups:
        vals = [r for r in ratios[i:i + len(grp)] if not math.isnan(r)]
        out.append(max(vals) if vals else math.nan)
        i += len(grp)
    return out


def necessity_probe(p: VariableExponent, w: WeightSpec, q: Interval,
                    s_lower: Optional[float] = None, grid: Optional[Grid] = None) -> VerifyReport:
    """Halving inequalities for ``Q = Q1 u Q2`` with ``S_est = 1.5 * s_lower``.

    (i) ``||w chi_Q2|| <= 2 pi S_est ||w chi_Q1||`` (and with the halves
    swapped); (ii) ``||w chi_Q1|| ||w**-1 chi_Q1||' <= (2 pi S_est)**2 |Q1|``.
    ``S_est`` inflates a lower bound, so the outcome is advisory.
    """
    if grid is None:
        grid = grid_for((), weight=w, exponent=p)
    inside = grid.nodes[(grid.nodes > q.a) & (grid.nodes < q.b)]
    if len(inside) + 1 < 4:
        raise ValueError("interval too small for halving")
    if s_lower is None:
        s_lower = operator_norm_lower_bound(p, w, default_family(w.singular_nodes()))
    s_est = S_INFLATION * s_lower
    q1, q2 = q.halves()
    n1 = norm_of_weight_on(grid, q1.a, q1.b, p, w).value
    n2 = norm_of_weight_on(grid, q2.a, q2.b, p, w).value
    d1 = norm_of_weight_on(grid, q1.a, q1.b, conjugate(p), invert(w)).value
    k = 2 * math.pi * s_est
    cases = [
        Case("halves Q2 vs Q1", n2, k * n1, _ratio(n2, k * n1), bool(n2 <= k * n1), False),
        Case("halves Q1 vs Q2", n1, k * n2, _ratio(n1, k * n2), bool(n1 <= k * n2), False),
        Case("product on Q1", n1 * d1, k * k * q1.length, _ratio(n1 * d1, k * k * q1.length),
             bool(n1 * d1 <= k * k * q1.length), False),
    ]
    return VerifyReport("necessity", cases, {"S_inflation": S_INFLATION},
                        {**_grid_meta(grid), "interval": q.to_json(), "S_est": s_est},
                        ["advisory: S_est inflates an empirical lower bound of the operator norm"])


# ---------------------------------------------------------------------------
# Hölder suite
# ---------------------------------------------------------------------------


HOLDER_EXPONENTS = (
    ConstExponent(2.0),
    PiecewiseExponent((-1.0, 0.0, 1.0), (1.5, 3.0), 2.0),
    LogLikeExponent(1.5, 1.0),
    AtanExponent(2.5, 1.5),
)


def _random_expr(rng: np.random.Generator) -> FunctionExpr:
    kind = int(rng.integers(0, 4))
    a = float(np.round(rng.uniform(-3, 2), 3))
    b = float(np.round(a + rng.uniform(0.25, 2.5), 3))
    c = float(np.round(rng.uniform(0.2, 3.0), 3))
    if kind == 0:
        return c * CharFun(a, b)
    if kind == 1:
        return c * PowerFun(a, float(np.round(rng.uniform(-0.3, 1.0), 3)), a, b)
    if kind == 2:
        return c * Bump(0.5 * (a + b), 0.5 * (b - a))
    return CharFun(a, b) + c * Bump(b, 0.5)


def check_holder(n_pairs: int = 200, seed: int = 42, exponents=HOLDER_EXPONENTS,
                 L: float = 8.0, n: int = 513) -> VerifyReport:
    """``int |fg| <= 2 ||f||_p ||g||_p'`` on seeded random pairs, spread over the exponents."""
    rng = np.random.default_rng(seed)
    cases = []
    meta = {}
    for i in range(n_pairs):
        p = exponents[i % len(exponents)]
        fe, ge = _random_expr(rng), _random_expr(rng)
        g = grid_for([fe, ge], exponent=p, L=L, n=n, depth=8)
        r = holder_check(sample(fe, g), sample(ge, g), p)
        cases.append(Case(f"pair {i} p={p.kind}", r.lhs, r.rhs, r.ratio, r.passed))
        meta = _grid_meta(g)
    return VerifyReport("holder", cases, {"K": 2.0}, meta)


def _name(e: FunctionExpr) -> str:
    return json.dumps(e.to_json(), sort_keys=True, separators=(",", ":"))
