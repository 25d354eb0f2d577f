"""Variable exponents, conjugates and log-Hölder diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class ExponentError(ValueError):
    pass


class VariableExponent:
    """An exponent ``p: R -> (1, inf)`` with declared bounds and tail value."""

    kind = "abstract"

    p_minus: float
    p_plus: float
    p_inf: float

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))

    def breakpoints(self) -> list:
        return []

    def is_constant(self) -> bool:
        return False

    def constant_outside_interval(self) -> bool:
        """True when p is constant outside some bounded interval."""
        return False

    def to_json(self) -> dict:
        raise NotImplementedError

    def _check_declared(self):
        if not 1 < self.p_minus <= self.p_plus < math.inf:
            raise ExponentError(
                f"need 1 < p_minus <= p_plus < inf, got {self.p_minus}, {self.p_plus}")
        if not self.p_minus - 1e-12 <= self.p_inf <= self.p_plus + 1e-12:
            raise ExponentError("p_inf must lie in [p_minus, p_plus]")


@dataclass(frozen=True)
class ConstExponent(VariableExponent):
    q: float
    kind = "const"

    def __post_init__(self):
        self._check_declared()

    p_minus = property(lambda self: float(self.q))
    p_plus = property(lambda self: float(self.q))
    p_inf = property(lambda self: float(self.q))

    def value(self, x):
        return np.full(np.shape(x), float(self.q))

    def is_constant(self):
        return True

    def constant_outside_interval(self):
        return True

    def to_json(self):
        return {"kind": "const", "value": self.q}


@dataclass(frozen=True)
class PiecewiseExponent(VariableExponent):
    """``values[i]`` on ``(breaks[i], breaks[i+1])`` and ``outside`` elsewhere."""

    breaks: tuple
    values: tuple
    outside: float
    kind = "piecewise"

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.breaks) != len(self.values) + 1:
            raise ExponentError("need len(breaks) == len(values) + 1")
        if any(b1 >= b2 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ExponentError("breaks must be strictly increasing")
        self._check_declared()

    @property
    def p_minus(self):
        return min(self.values + (float(self.outside),))

    @property
    def p_plus(self):
        return max(self.values + (float(self.outside),))

    @property
    def p_inf(self):
        return float(self.outside)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.outside))
        for lo, hi, v in zip(self.breaks, self.breaks[1:], self.values):
            out[(x >= lo) & (x < hi)] = v
        return out

    def breakpoints(self):
        return list(self.breaks)

    def constant_outside_interval(self):
        return True

    def to_json(self):
        return {"kind": "piecewise", "breaks": list(self.breaks),
                "values": list(self.values), "outside": self.outside}


@dataclass(frozen=True)
class LogLikeExponent(VariableExponent):
    """``p(x) = c0 + c1 / log(e + |x|)`` with ``c1 >= 0``."""

    c0: float
    c1: float
    kind = "loglike"

    def __post_init__(self):
        if self.c1 < 0:
            raise ExponentError("c1 must be nonnegative")
        self._check_declared()

    p_minus = property(lambda self: float(self.c0))
    p_plus = property(lambda self: float(self.c0 + self.c1))
    p_inf = property(lambda self: float(self.c0))

    def value(self, x):
        return self.c0 + self.c1 / np.log(math.e + np.abs(x))

    def to_json(self):
        return {"kind": "loglike", "c0": self.c0, "c1": self.c1}


@dataclass(frozen=True)
class AtanExponent(VariableExponent):
    """``p(x) = c0 + c1 arctan(x)/pi``; the limits at +-inf differ when c1 != 0."""

    c0: float
    c1: float
    kind = "atan"

    def __post_init__(self):
        self._check_declared()

    p_minus = property(lambda self: float(self.c0 - abs(self.c1) / 2))
    p_plus = property(lambda self: float(self.c0 + abs(self.c1) / 2))
    p_inf = property(lambda self: float(self.c0))

    def value(self, x):
        return self.c0 + self.c1 * np.arctan(x) / np.pi

    def to_json(self):
        return {"kind": "atan", "c0": self.c0, "c1": self.c1}


def _conj(q):
    return q / (q - 1.0)


@dataclass(frozen=True)
class ConjugateExponent(VariableExponent):
    base: VariableExponent
    kind = "conjugate"

    p_minus = property(lambda self: _conj(self.base.p_plus))
    p_plus = property(lambda self: _conj(self.base.p_minus))
    p_inf = property(lambda self: _conj(self.base.p_inf))

    def value(self, x):
        return _conj(self.base.value(x))

    def breakpoints(self):
        return self.base.breakpoints()

    def constant_outside_interval(self):
        return self.base.constant_outside_interval()

    def to_json(self):
        return {"kind": "conjugate", "base": self.base.to_json()}


def conjugate(p: VariableExponent) -> VariableExponent:
    """The exponent ``p'`` with ``1/p + 1/p' = 1`` pointwise."""
    if isinstance(p, ConjugateExponent):
        return p.base
    if isinstance(p, ConstExponent):
        return ConstExponent(_conj(float(p.q)))
    if isinstance(p, PiecewiseExponent):
        return PiecewiseExponent(p.breaks, tuple(_conj(v) for v in p.values),
                                 _conj(p.outside))
    return ConjugateExponent(p)


def exponent_from_json(d: dict) -> VariableExponent:
    kind = d.get("kind")
    keys = {
        "const": {"value"},
        "piecewise": {"breaks", "values", "outside"},
        "loglike": {"c0", "c1"},
        "atan": {"c0", "c1"},
        "conjugate": {"base"},
    }
    if kind not in keys:
        raise ExponentError(f"unknown exponent kind {kind!r}")
    unknown = set(d) - keys[kind] - {"kind"}
    if unknown:
        raise ExponentError(f"unknown keys for exponent {kind!r}: {sorted(unknown)}")
    if kind == "const":
        return ConstExponent(float(d["value"]))
    if kind == "piecewise":
        return PiecewiseExponent(tuple(d["breaks"]), tuple(d["values"]),
                                 float(d["outside"]))
    if kind == "loglike":
        return LogLikeExponent(float(d["c0"]), float(d["c1"]))
    if kind == "atan":
        return AtanExponent(float(d["c0"]), float(d["c1"]))
    return ConjugateExponent(exponent_from_json(d["base"]))


def bounds(p: VariableExponent, sample_grid, tol: float = 1e-9):
    """Observed ``(min, max)`` of p over the mesh and Gauss points of a grid.

    Raises ExponentError when the observation leaves the declared bounds, or,
    for constant and piecewise bodies, when it misses them by more than tol.
    """
    x = np.concatenate((sample_grid.nodes, sample_grid.points))
    v = p.value(x)
    lo, hi = float(v.min()), float(v.max())
    if lo < p.p_minus - tol or hi > p.p_plus + tol:
        raise ExponentError(
            f"observed range ({lo}, {hi}) outside declared ({p.p_minus}, {p.p_plus})")
    if isinstance(p, (ConstExponent, PiecewiseExponent)):
        inside = [b for b in p.breakpoints()]
        covered = not inside or (min(inside) > -sample_grid.L or max(inside) < sample_grid.L)
        if covered and (abs(lo - p.p_minus) > tol or abs(hi - p.p_plus) > tol):
            raise ExponentError(
                f"observed range ({lo}, {hi}) differs from declared "
                f"({p.p_minus}, {p.p_plus})")
    return lo, hi


@dataclass
class LogHolderDiagnostic:
    c1_est: float
    c2_est: float
    decay_ok: bool
    local_ok: bool
    tail_means: tuple
    note: str = "estimates are lower bounds of the true suprema"

    @property
    def globally_log_holder(self) -> bool:
        return self.decay_ok and self.local_ok

    def to_json(self):
        return {"c1_est": self.c1_est, "c2_est": self.c2_est,
                "decay_ok": self.decay_ok, "local_ok": self.local_ok,
                "tail_means": list(self.tail_means), "note": self.note}


def _c1_sup(alpha, L, n_base, depth, rng, n_random):
    xs = np.linspace(-L, L, n_base)
    best = 0.0
    for k in range(-int(math.log2(2 * L)), depth + 1):
        d = 2.0 ** -k
        x = xs[xs + d <= L]
        if x.size == 0:
            continue
        diff = np.abs(alpha(x) - alpha(x + d))
        # straddle each mesh point too, so jumps located on the mesh are seen
        y = xs[(xs - d / 2 >= -L) & (xs + d / 2 <= L)]
        diff2 = np.abs(alpha(y - d / 2) - alpha(y + d / 2))
        m = max(diff.max(initial=0.0), diff2.max(initial=0.0))
        best = max(best, m * math.log(math.e + 1.0 / d))
    if n_random:
        a = rng.uniform(-L, L, n_random)
        b = rng.uniform(-L, L, n_random)
        d = np.abs(a - b)
        ok = d > 0
        vals = np.abs(alpha(a[ok]) - alpha(b[ok])) * np.log(math.e + 1.0 / d[ok])
        best = max(best, float(vals.max(initial=0.0)))
    return best


def log_holder_diagnostic(p: VariableExponent, pair_budget: int = 1000,
                          L: float = 16.0, seed: int = 42) -> LogHolderDiagnostic:
    """Sampled log-Hölder constants of ``alpha = 1/p``.

    The pair set is every mesh point paired at dyadic separations down to
    ``2**-log2(pair_budget)`` plus ``pair_budget`` seeded random pairs.  A
    second sweep four dyadic levels finer decides ``local_ok``: a jump makes
    the local constant grow with resolution.
    """
    if pair_budget < 1000:
        raise ExponentError("pair_budget must be at least 1000")

    def alpha(x):
        return 1.0 / p.value(np.asarray(x, dtype=float))

    depth = int(math.ceil(math.log2(pair_budget)))
    rng = np.random.default_rng(seed)
    c1 = _c1_sup(alpha, L, 257, depth, rng, pair_budget)
    c1_fine = _c1_sup(alpha, L, 257, depth + 4, None, 0)
    local_ok = c1_fine <= 1.1 * c1 + 1e-15

    far = np.geomspace(1.0, 2.0 ** 40, 4001)
    near = np.linspace(-L, L, 2049)
    xs = np.concatenate((near, far, -far))
    alpha_inf = 1.0 / p.p_inf
    c2 = float(np.max(np.abs(alpha(xs) - alpha_inf) * np.log(math.e + np.abs(xs))))
    tail = np.geomspace(2.0 ** 30, 2.0 ** 40, 101)
    right, left = float(np.mean(alpha(tail))), float(np.mean(alpha(-tail)))
    decay_ok = abs(right - left) <= 1e-6
    return LogHolderDiagnostic(c1, c2, decay_ok, local_ok, (left, right))
