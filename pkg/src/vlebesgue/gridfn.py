"""Grids on a truncated line, symbolic test functions and their samples.

A :class:`Grid` is a partition of ``[-L, L]`` into cells.  Every cell carries
``order`` Gauss-Legendre points; all quadrature in the package runs over these
points, so functions are never evaluated exactly at a breakpoint or at a
singular node.  Nodal values (at the mesh points) are kept alongside for
reporting and for the pointwise operators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

DEFAULT_L = 16.0
DEFAULT_N = 4097
DEFAULT_ORDER = 6

_MERGE_TOL = 1e-12


class GridError(ValueError):
    pass


class SupportError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Grid:
    """Cell partition of ``[-L, L]`` with per-cell Gauss-Legendre points."""

    L: float
    n_points: int
    nodes: np.ndarray
    singular: tuple
    depth: int
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        ref_x, ref_w = np.polynomial.legendre.leggauss(self.order)
        a = self.nodes[:-1]
        b = self.nodes[1:]
        mid = 0.5 * (a + b)
        hw = 0.5 * (b - a)
        pts = (mid[:, None] + hw[:, None] * ref_x[None, :]).ravel()
        wts = (hw[:, None] * ref_w[None, :]).ravel()
        for name, val in (("ref_x", ref_x), ("ref_w", ref_w), ("points", pts),
                          ("weights", wts)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        self.nodes.setflags(write=False)

    @property
    def h(self) -> float:
        """Spacing of the underlying uniform mesh."""
        return 2.0 * self.L / (self.n_points - 1)

    @property
    def n_cells(self) -> int:
        return len(self.nodes) - 1

    @property
    def cell_a(self) -> np.ndarray:
        return self.nodes[:-1]

    @property
    def cell_b(self) -> np.ndarray:
        return self.nodes[1:]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def metadata(self) -> dict:
        return {
            "L": self.L,
            "n": self.n_points,
            "depth": self.depth,
            "order": self.order,
            "singular_nodes": [float(s) for s in self.singular],
            "n_mesh_points": int(len(self.nodes)),
            "min_cell": float(self.widths.min()),
        }

    def same_as(self, other: "Grid") -> bool:
        return (self is other) or (
            self.order == other.order
            and len(self.nodes) == len(other.nodes)
            and bool(np.array_equal(self.nodes, other.nodes))
        )

    def restrict(self, a: float, b: float) -> "Grid":
        """Sub-grid covering ``[a, b]``; partial end cells are kept."""
        if not (-self.L - 1e-12 <= a < b <= self.L + 1e-12):
            raise GridError(f"interval ({a}, {b}) outside [-L, L]")
        tol = _MERGE_TOL * self.L
        inner = self.nodes[(self.nodes > a + tol) & (self.nodes < b - tol)]
        nodes = np.concatenate(([a], inner, [b]))
        sing = tuple(s for s in self.singular if a - tol <= s <= b + tol)
        sing = tuple(a if abs(s - a) <= tol else b if abs(s - b) <= tol else s
                     for s in sing)
        return Grid(self.L, self.n_points, nodes, sing, self.depth, self.order)


def _merge_points(pts: np.ndarray, keep: Sequence[float], tol: float) -> np.ndarray:
    pts = np.unique(pts)
    keep = np.asarray(sorted(set(float(k) for k in keep)))
    out = []
    for x in pts:
        if keep.size:
            j = np.searchsorted(keep, x)
            near = [keep[i] for i in (j - 1, j) if 0 <= i < keep.size
                    and abs(keep[i] - x) <= tol]
            if near:
                x = near[0]
        if out and abs(x - out[-1]) <= tol:
            if x in keep:
                out[-1] = x
            continue
        out.append(x)
    return np.asarray(out, dtype=float)


def make_grid(L: float = DEFAULT_L, n: int = DEFAULT_N,
              singular_nodes: Iterable[float] = (), depth: int = 0,
              breakpoints: Iterable[float] = (),
              order: int = DEFAULT_ORDER) -> Grid:
    """Uniform ``n``-point mesh on ``[-L, L]`` refined toward singular nodes.

    Around each singular node ``s`` the points ``s +- h 2**-k`` for
    ``k = 1..depth`` are inserted, so the cells next to ``s`` halve at every
    level.  ``breakpoints`` are inserted without grading.
    """
    if not L > 0:
        raise GridError("domain half width L must be positive")
    if n < 33:
        raise GridError("n must be at least 33")
    if depth < 0:
        raise GridError("grading depth must be nonnegative")
    L = float(L)
    h = 2.0 * L / (n - 1)
    base = np.linspace(-L, L, n)
    sing = sorted(set(float(s) for s in singular_nodes))
    for s in sing:
        if not -L <= s <= L:
            raise GridError(f"singular node {s} outside [-L, L]")
    extra = [float(b) for b in breakpoints if -L < float(b) < L]
    for s in sing:
        extra.append(s)
        for k in range(1, depth + 1):
            for x in (s - h * 2.0 ** -k, s + h * 2.0 ** -k):
                if -L < x < L:
                    extra.append(x)
    keep = [-L, L] + [float(b) for b in breakpoints if -L <= float(b) <= L] + sing
    nodes = _merge_points(np.concatenate((base, np.asarray(extra, float))),
                          keep, _MERGE_TOL * L)
    return Grid(L, int(n), nodes, tuple(sing), int(depth), int(order))


# ---------------------------------------------------------------------------
# Symbolic functions
# ---------------------------------------------------------------------------


class FunctionExpr:
    """Base of the expression tree; leaves have bounded support."""

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def support(self) -> tuple:
        raise NotImplementedError

    def breakpoints(self) -> list:
        return []

    def singular_nodes(self) -> list:
        return []

    def exact_integral(self) -> Optional[complex]:
        """Closed-form integral over the real line, or None if unavailable."""
        return None

    def numeric_leaves(self) -> list:
        """(coefficient, leaf) pairs whose integral has no closed form."""
        return []

    def to_json(self) -> dict:
        raise NotImplementedError

    def __add__(self, other):
        return Sum(self, other)

    def __mul__(self, c):
        return Scale(complex(c), self)

    __rmul__ = __mul__

    def __neg__(self):
        return Scale(-1.0, self)

    def __sub__(self, other):
        return Sum(self, Scale(-1.0, other))


@dataclass(frozen=True)
class CharFun(FunctionExpr):
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("CharFun needs a < b")

    def evaluate(self, x):
        return ((x > self.a) & (x < self.b)).astype(complex)

    def support(self):
        return (self.a, self.b)

    def breakpoints(self):
        return [self.a, self.b]

    def exact_integral(self):
        return complex(self.b - self.a)

    def to_json(self):
        return {"type": "char", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class PowerFun(FunctionExpr):
    """``|x - x0|**gamma`` on the open interval ``(a, b)``."""

    x0: float
    gamma: float
    a: float
    b: float

    def __post_init__(self):
        if not self.gamma > -1:
            raise ValueError("PowerFun exponent must exceed -1")
        if not self.a < self.b:
            raise ValueError("PowerFun needs a < b")

    def evaluate(self, x):
        inside = (x > self.a) & (x < self.b)
        d = np.abs(x - self.x0)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(inside, d ** self.gamma, 0.0)
        return v.astype(complex)

    def support(self):
        return (self.a, self.b)

    def breakpoints(self):
        pts = [self.a, self.b]
        if self.a < self.x0 < self.b:
            pts.append(self.x0)
        return pts

    def singular_nodes(self):
        if float(self.gamma).is_integer() and self.gamma >= 0:
            return []
        return [self.x0] if self.a <= self.x0 <= self.b else []

    def _antider(self, t):
        # antiderivative of |t - x0|**gamma
        d = t - self.x0
        return math.copysign(abs(d) ** (self.gamma + 1) / (self.gamma + 1), d)

    def exact_integral(self):
        return complex(self._antider(self.b) - self._antider(self.a))

    def to_json(self):
        return {"type": "pow", "x0": self.x0, "gamma": self.gamma,
                "a": self.a, "b": self.b}


def _bump(x, center, radius):
    r = (x - center) / radius
    inside = np.abs(r) < 1
    out = np.zeros_like(r)
    ri = r[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ri * ri))
    return out


@dataclass(frozen=True)
class Bump(FunctionExpr):
    """Smooth bump ``exp(1 - 1/(1 - r^2))`` with peak 1 at ``center``."""

    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("Bump radius must be positive")

    def evaluate(self, x):
        return _bump(x, self.center, self.radius).astype(complex)

    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def breakpoints(self):
        return list(self.support())

    def numeric_leaves(self):
        return [(1.0, self)]

    def to_json(self):
        return {"type": "bump", "center": self.center, "radius": self.radius}


@dataclass(frozen=True)
class PolyBump(FunctionExpr):
    """Polynomial ``sum c_k x**k`` times a bump; ``smooth=False`` uses a flat bump."""

    coeffs: tuple
    center: float
    radius: float
    smooth: bool = True

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.radius > 0:
            raise ValueError("PolyBump radius must be positive")

    def evaluate(self, x):
        poly = np.polynomial.polynomial.polyval(x, self.coeffs)
        if self.smooth:
            env = _bump(x, self.center, self.radius)
        else:
            env = (np.abs(x - self.center) < self.radius).astype(float)
        return (poly * env).astype(complex)

    def support(self):
        return (self.center - self.radius, self.center + self.radius)

    def breakpoints(self):
        return list(self.support())

    def exact_integral(self):
        if self.smooth:
            return None
        anti = np.polynomial.polynomial.polyint(self.coeffs)
        a, b = self.support()
        pv = np.polynomial.polynomial.polyval
        return complex(pv(b, anti) - pv(a, anti))

    def numeric_leaves(self):
        return [(1.0, self)] if self.smooth else []

    def to_json(self):
        return {"type": "polybump", "coeffs": list(self.coeffs),
                "center": self.center, "radius": self.radius,
                "smooth": self.smooth}


@dataclass(frozen=True)
class Scale(FunctionExpr):
    c: complex
    expr: FunctionExpr

    def evaluate(self, x):
        return self.c * self.expr.evaluate(x)

    def support(self):
        return self.expr.support()

    def breakpoints(self):
        return self.expr.breakpoints()

    def singular_nodes(self):
        return self.expr.singular_nodes()

    def exact_integral(self):
        v = self.expr.exact_integral()
        return None if v is None else self.c * v

    def numeric_leaves(self):
        return [(self.c * k, leaf) for k, leaf in self.expr.numeric_leaves()]

    def to_json(self):
        c = complex(self.c)
        return {"type": "scale", "re": c.real, "im": c.imag,
                "expr": self.expr.to_json()}


@dataclass(frozen=True)
class Sum(FunctionExpr):
    left: FunctionExpr
    right: FunctionExpr

    def evaluate(self, x):
        return self.left.evaluate(x) + self.right.evaluate(x)

    def support(self):
        (a1, b1), (a2, b2) = self.left.support(), self.right.support()
        return (min(a1, a2), max(b1, b2))

    def breakpoints(self):
        return self.left.breakpoints() + self.right.breakpoints()

    def singular_nodes(self):
        return self.left.singular_nodes() + self.right.singular_nodes()

    def exact_integral(self):
        # closed-form part only; numeric leaves are added by integrate()
        parts = [_closed_part(self.left), _closed_part(self.right)]
        return parts[0] + parts[1]

    def numeric_leaves(self):
        return self.left.numeric_leaves() + self.right.numeric_leaves()

    def to_json(self):
        return {"type": "sum", "terms": [self.left.to_json(), self.right.to_json()]}


def _closed_part(e: FunctionExpr) -> complex:
    if isinstance(e, Sum):
        return _closed_part(e.left) + _closed_part(e.right)
    if isinstance(e, Scale):
        return e.c * _closed_part(e.expr)
    v = e.exact_integral()
    return 0j if v is None else v


def expr_from_json(d: dict) -> FunctionExpr:
    """Inverse of ``FunctionExpr.to_json``; node tags char/pow/bump/polybump/scale/sum."""
    if not isinstance(d, dict) or "type" not in d:
        raise ValueError(f"function node must be an object with 'type': {d!r}")
    t = d["type"]
    fields = {k: v for k, v in d.items() if k != "type"}
    allowed = {
        "char": {"a", "b"},
        "pow": {"x0", "gamma", "a", "b"},
        "bump": {"center", "radius"},
        "polybump": {"coeffs", "center", "radius", "smooth"},
        "scale": {"re", "im", "expr"},
        "sum": {"terms"},
    }
    if t not in allowed:
        raise ValueError(f"unknown function node type {t!r}")
    unknown = set(fields) - allowed[t]
    if unknown:
        raise ValueError(f"unknown keys for {t!r}: {sorted(unknown)}")
    if t == "char":
        return CharFun(float(d["a"]), float(d["b"]))
    if t == "pow":
        return PowerFun(float(d["x0"]), float(d["gamma"]), float(d["a"]), float(d["b"]))
    if t == "bump":
        return Bump(float(d["center"]), float(d["radius"]))
    if t == "polybump":
        return PolyBump(tuple(d["coeffs"]), float(d["center"]), float(d["radius"]),
                        bool(d.get("smooth", True)))
    if t == "scale":
        return Scale(complex(d.get("re", 0.0), d.get("im", 0.0)), expr_from_json(d["expr"]))
    terms = [expr_from_json(x) for x in d["terms"]]
    if not terms:
        raise ValueError("sum needs at least one term")
    out = terms[0]
    for e in terms[1:]:
        out = Sum(out, e)
    return out


# ---------------------------------------------------------------------------
# Sampled functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function on a grid.

    ``values`` are nodal values (one per mesh point) and ``qvalues`` the values
    at the Gauss points, cell by cell.  ``tail`` holds coefficients
    ``(c_1, c_2, ...)`` of the model ``sum_j c_j x**-j`` used for ``|x| > L``;
    compactly supported functions have an empty tail.
    """

    grid: Grid
    values: np.ndarray
    qvalues: np.ndarray
    provenance: Optional[FunctionExpr] = None
    tail: tuple = ()
    flagged: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        q = np.asarray(self.qvalues, dtype=complex)
        if v.shape != self.grid.nodes.shape:
            raise ValueError("values length must equal the number of mesh points")
        if q.shape != self.grid.points.shape:
            raise ValueError("qvalues length must equal the number of Gauss points")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(q))):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "qvalues", q)
        tail = tuple(complex(c) for c in self.tail)
        while tail and tail[-1] == 0:
            tail = tail[:-1]
        object.__setattr__(self, "tail", tail)

    # arithmetic keeps provenance when both operands carry one
    def _check(self, other):
        if not self.grid.same_as(other.grid):
            raise GridError("grid mismatch")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._check(other)
        prov = (Sum(self.provenance, other.provenance)
                if self.provenance is not None and other.provenance is not None else None)
        tail = tail_add(self.tail, other.tail)
        return GridFunction(self.grid, self.values + other.values,
                            self.qvalues + other.qvalues, prov, tail,
                            _or_flags(self.flagged, other.flagged))

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c) -> "GridFunction":
        c = complex(c)
        prov = Scale(c, self.provenance) if self.provenance is not None else None
        return GridFunction(self.grid, c * self.values, c * self.qvalues, prov,
                            tuple(c * t for t in self.tail), self.flagged)

    __rmul__ = scale

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values * other.values,
                                self.qvalues * other.qvalues, None, (),
                                _or_flags(self.flagged, other.flagged))
        return self.scale(other)

    def abs(self) -> "GridFunction":
        """Pointwise modulus on ``[-L, L]``; the tail model is dropped."""
        return GridFunction(self.grid, np.abs(self.values), np.abs(self.qvalues),
                            None, (), self.flagged)

    def conj(self) -> "GridFunction":
        return GridFunction(self.grid, np.conj(self.values), np.conj(self.qvalues),
                            None, tuple(np.conj(t) for t in self.tail),
                            self.flagged)

    def restrict(self, a: float, b: float) -> "GridFunction":
        """Multiply by the indicator of ``(a, b)`` (cells must align with a, b)."""
        g = self.grid
        mq = (g.points > a) & (g.points < b)
        mn = (g.nodes > a) & (g.nodes < b)
        return GridFunction(g, np.where(mn, self.values, 0), np.where(mq, self.qvalues, 0))

    @property
    def cell_values(self) -> np.ndarray:
        return self.qvalues.reshape(self.grid.n_cells, self.grid.order)

    @property
    def is_zero(self) -> bool:
        return (not np.any(self.qvalues)) and not self.tail


def tail_add(t1: tuple, t2: tuple) -> tuple:
    n = max(len(t1), len(t2))
    t1 = tuple(t1) + (0j,) * (n - len(t1))
    t2 = tuple(t2) + (0j,) * (n - len(t2))
    return tuple(a + b for a, b in zip(t1, t2))


def tail_eval(tail: tuple, x: np.ndarray) -> np.ndarray:
    """``sum_j c_j x**-j`` for the tail model coefficients."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=complex)
    inv = 1.0 / x
    pw = np.ones_like(x)
    for c in tail:
        pw = pw * inv
        out += c * pw
    return out


def _or_flags(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a | b


def from_callable(fn: Callable, grid: Grid) -> GridFunction:
    """Sample an arbitrary vectorized function (nodal values must be finite)."""
    v = np.asarray(fn(grid.nodes), dtype=complex)
    q = np.asarray(fn(grid.points), dtype=complex)
    return GridFunction(grid, v, q)


def sample(e: FunctionExpr, g: Grid) -> GridFunction:
    """Evaluate ``e`` at the mesh and Gauss points of ``g``."""
    a, b = e.support()
    tol = _MERGE_TOL * g.L
    if a < -g.L - tol or b > g.L + tol:
        raise SupportError(f"support ({a}, {b}) not inside [-{g.L}, {g.L}]")
    with np.errstate(divide="ignore", invalid="ignore"):
        v = e.evaluate(g.nodes)
    bad = ~np.isfinite(v)
    if np.any(bad):
        # a node sitting on a power singularity takes the neighbouring midpoint value
        mids = g.midpoints
        for i in np.flatnonzero(bad):
            cand = [mids[i]] if i < len(mids) else []
            if i > 0:
                cand.append(mids[i - 1])
            vals = [complex(e.evaluate(np.array([m]))[0]) for m in cand]
            vals = [z for z in vals if np.isfinite(z) and z != 0] or [0j]
            v[i] = vals[0]
    q = e.evaluate(g.points)
    return GridFunction(g, v, q, provenance=e)


def grid_for(exprs: Iterable[FunctionExpr] = (), weight=None, exponent=None,
             L: float = DEFAULT_L, n: int = DEFAULT_N, depth: int = 8,
             order: int = DEFAULT_ORDER, grade_breaks: bool = False,
             extra_singular: Iterable[float] = ()) -> Grid:
    """Grid that resolves every breakpoint and singular node of the inputs.

    Power singularities of the functions and weight nodes are graded.  With
    ``grade_breaks`` the jump points are graded too, which resolves the
    logarithmic singularities of the Cauchy transform of step functions.
    """
    exprs = list(exprs)
    sing = set(float(s) for s in extra_singular)
    brk = set()
    for e in exprs:
        sing.update(float(s) for s in e.singular_nodes())
        brk.update(float(s) for s in e.breakpoints())
    if weight is not None:
        sing.update(float(s) for s in weight.singular_nodes())
    if exponent is not None:
        brk.update(float(s) for s in exponent.breakpoints())
    if grade_breaks:
        sing.update(s for s in brk if -L < s < L)
    sing = {s for s in sing if -L <= s <= L}
    return make_grid(L, n, sorted(sing), depth if sing else 0, sorted(brk), order)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def singular_cell_mask(grid: Grid) -> np.ndarray:
    """Cells having an endpoint on one of the grid's singular nodes."""
    if not grid.singular:
        return np.zeros(grid.n_cells, dtype=bool)
    s = np.asarray(grid.singular)
    tol = _MERGE_TOL * grid.L
    da = np.min(np.abs(grid.cell_a[:, None] - s[None, :]), axis=1)
    db = np.min(np.abs(grid.cell_b[:, None] - s[None, :]), axis=1)
    return (da <= tol) | (db <= tol)


POWER_FIT_TOL = 0.5


def power_law_cell(h: np.ndarray, d: np.ndarray, width: float):
    """Integral over a cell of a function behaving like ``C d**beta``.

    ``h`` are nonnegative integrand samples at distances ``d`` from the
    singular endpoint.  Returns ``(value, beta)``; value is ``inf`` when the
    fitted exponent is not above -1.  Returns ``(None, nan)`` when no power
    law fits (zeros, or samples off the fitted line by more than a factor
    ``e**0.5``).
    """
    i0, i1 = int(np.argmin(d)), int(np.argmax(d))
    h0, h1 = h[i0], h[i1]
    if h0 == 0 and h1 == 0 and not np.any(h):
        return 0.0, float("nan")
    if not np.all(h > 0):
        return None, float("nan")
    beta = math.log(h1 / h0) / math.log(d[i1] / d[i0])
    # round-off noise fits no power law; leave such cells to the Gauss rule
    ld, lh = np.log(d), np.log(h)
    resid = lh - (lh[i0] + beta * (ld - ld[i0]))
    if np.max(np.abs(resid)) > POWER_FIT_TOL:
        return None, float("nan")
    if beta <= -1.0 + 1e-9:
        return math.inf, beta
    c = h0 / d[i0] ** beta
    return c * width ** (beta + 1) / (beta + 1), beta


def _singular_distances(grid: Grid, cells: np.ndarray):
    s = np.asarray(grid.singular)
    tol = _MERGE_TOL * grid.L
    out = []
    for c in cells:
        a, b = grid.nodes[c], grid.nodes[c + 1]
        pts = grid.points[c * grid.order:(c + 1) * grid.order]
        if np.min(np.abs(s - a)) <= tol:
            out.append(pts - a)
        else:
            out.append(b - pts)
    return out


def integrate(f: GridFunction, exact: bool = True) -> complex:
    """Integral of ``f`` over ``[-L, L]``.

    With provenance, closed-form leaves (characteristic, power, flat
    polynomial) integrate exactly and only smooth bumps use the Gauss rule.
    Otherwise the Gauss rule is used, with the cells touching a singular
    node replaced by a fitted power law.
    """
    g = f.grid
    if exact and f.provenance is not None:
        e = f.provenance
        total = _closed_part(e)
        for coef, leaf in e.numeric_leaves():
            total += coef * complex(np.dot(g.weights, leaf.evaluate(g.points)))
        return complex(total)
    q = f.qvalues
    w = g.weights
    mask = singular_cell_mask(g)
    if not np.any(mask):
        return complex(np.dot(w, q))
    k = g.order
    cells = np.flatnonzero(mask)
    keep = np.ones(q.shape, dtype=bool)
    extra = 0j
    for c, d in zip(cells, _singular_distances(g, cells)):
        seg = q[c * k:(c + 1) * k]
        phase = seg[np.argmax(np.abs(seg))]
        if phase == 0:
            keep[c * k:(c + 1) * k] = False
            continue
        u = phase / abs(phase)
        r = seg / u
        if np.max(np.abs(r.imag)) > 1e-12 * np.max(np.abs(r)) or np.any(r.real < 0):
            continue
        val, _ = power_law_cell(r.real, d, g.widths[c])
        if val is None:
            continue
        keep[c * k:(c + 1) * k] = False
        extra += u * val
    return complex(np.dot(w[keep], q[keep]) + extra)


def inner_product(f: GridFunction, g: GridFunction) -> complex:
    """``int f conj(g)`` over the grid."""
    if not f.grid.same_as(g.grid):
        raise GridError("grid mismatch")
    return complex(np.dot(f.grid.weights, f.qvalues * np.conj(g.qvalues)))
