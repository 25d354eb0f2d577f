"""Weights: power weights with nodes, generic positive weights, and the KS test."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exponent import VariableExponent
from .gridfn import FunctionExpr, expr_from_json


class PoleError(ValueError):
    """Weight evaluated exactly at a node carrying a negative power."""


class CriterionInapplicable(TypeError):
    pass


class WeightSpec:
    def eval(self, x) -> np.ndarray:
        raise NotImplementedError

    def singular_nodes(self) -> list:
        return []

    def to_json(self) -> dict:
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x)


@dataclass(frozen=True)
class PowerWeight(WeightSpec):
    """``|x - i|**lambda_inf * prod_j |x - x_j|**lambda_j``."""

    nodes: tuple = ()
    powers: tuple = ()
    lambda_inf: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(float(x) for x in self.nodes))
        object.__setattr__(self, "powers", tuple(float(x) for x in self.powers))
        if len(self.nodes) != len(self.powers):
            raise ValueError("nodes and powers must have equal length")
        if any(a >= b for a, b in zip(self.nodes, self.nodes[1:])):
            raise ValueError("weight nodes must be strictly increasing")

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        out = np.sqrt(x * x + 1.0) ** self.lambda_inf
        for xj, lj in zip(self.nodes, self.powers):
            d = np.abs(x - xj)
            if lj < 0 and np.any(d == 0):
                raise PoleError(f"weight evaluated at node {xj} with power {lj}")
            out = out * d ** lj
        return out

    def singular_nodes(self):
        return [x for x, l in zip(self.nodes, self.powers) if l != 0]

    @property
    def total_power(self) -> float:
        return self.lambda_inf + sum(self.powers)

    def to_json(self):
        return {"kind": "power", "nodes": list(self.nodes),
                "powers": list(self.powers), "lambda_inf": self.lambda_inf}


@dataclass(frozen=True)
class GenericWeight(WeightSpec):
    """A positive weight given by a FunctionExpr or a vectorized callable.

    ``nodes`` lists points where the weight may be singular; grids grade
    toward them.  ``inverted`` flips the weight to its reciprocal.
    """

    body: object
    nodes: tuple = ()
    inverted: bool = False

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        if isinstance(self.body, FunctionExpr):
            v = self.body.evaluate(x)
            if np.any(np.abs(v.imag) > 1e-14 * np.abs(v.real)):
                raise ValueError("generic weight must be real")
            v = v.real
        else:
            v = np.asarray(self.body(x), dtype=float)
        if np.any(~(v > 0)) or np.any(~np.isfinite(v)):
            raise ValueError("generic weight must be positive and finite on the mesh")
        return 1.0 / v if self.inverted else v

    def singular_nodes(self):
        return list(self.nodes)

    def to_json(self):
        if not isinstance(self.body, FunctionExpr):
            raise TypeError("callable weights are not serializable")
        return {"kind": "generic", "expr": self.body.to_json(),
                "nodes": list(self.nodes), "inverted": self.inverted}


@dataclass(frozen=True)
class ScaledWeight(WeightSpec):
    """``c * base`` for a constant ``c > 0``."""

    base: WeightSpec
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("weight scale must be positive")

    def eval(self, x):
        return self.c * self.base.eval(x)

    def singular_nodes(self):
        return self.base.singular_nodes()

    def to_json(self):
        return {"kind": "scaled", "c": self.c, "base": self.base.to_json()}


UNIT_WEIGHT = PowerWeight()


def eval_weight(w: WeightSpec, x):
    """Weight values at ``x``; raises PoleError on a node with negative power."""
    scalar = np.ndim(x) == 0
    v = w.eval(np.atleast_1d(np.asarray(x, dtype=float)))
    return float(v[0]) if scalar else v


def eval_weight_safe(w: WeightSpec, x: np.ndarray, cell_mid: Optional[np.ndarray] = None):
    """Evaluate at mesh points, replacing poles by a neighbouring midpoint value."""
    x = np.asarray(x, dtype=float)
    try:
        return w.eval(x)
    except PoleError:
        pass
    out = np.empty_like(x)
    for i, xi in enumerate(x):
        try:
            out[i] = w.eval(np.array([xi]))[0]
        except PoleError:
            if cell_mid is not None and len(cell_mid):
                j = min(i, len(cell_mid) - 1)
                out[i] = w.eval(np.array([cell_mid[j]]))[0]
            else:
                out[i] = np.inf
    return out


def invert(w: WeightSpec) -> WeightSpec:
    if isinstance(w, PowerWeight):
        return PowerWeight(w.nodes, tuple(-l for l in w.powers), -w.lambda_inf)
    if isinstance(w, GenericWeight):
        return GenericWeight(w.body, w.nodes, not w.inverted)
    if isinstance(w, ScaledWeight):
        return ScaledWeight(invert(w.base), 1.0 / w.c)
    raise TypeError(f"cannot invert {type(w).__name__}")


def weight_from_json(d: dict) -> WeightSpec:
    kind = d.get("kind")
    if kind == "power":
        unknown = set(d) - {"kind", "nodes", "powers", "lambda_inf"}
        if unknown:
            raise ValueError(f"unknown keys for power weight: {sorted(unknown)}")
        return PowerWeight(tuple(d.get("nodes", ())), tuple(d.get("powers", ())),
                           float(d.get("lambda_inf", 0.0)))
    if kind == "generic":
        unknown = set(d) - {"kind", "expr", "nodes", "inverted"}
        if unknown:
            raise ValueError(f"unknown keys for generic weight: {sorted(unknown)}")
        return GenericWeight(expr_from_json(d["expr"]), tuple(d.get("nodes", ())),
                             bool(d.get("inverted", False)))
    if kind == "scaled":
        unknown = set(d) - {"kind", "c", "base"}
        if unknown:
            raise ValueError(f"unknown keys for scaled weight: {sorted(unknown)}")
        return ScaledWeight(weight_from_json(d["base"]), float(d["c"]))
    raise ValueError(f"unknown weight kind {kind!r}")


@dataclass
class KSResult:
    local_values: list
    local_checks: list
    infinity_value: float
    infinity_check: bool
    verdict: bool
    constant_outside_nodes: bool

    def to_json(self):
        return {
            "local_values": self.local_values,
            "local_checks": self.local_checks,
            "infinity_value": self.infinity_value,
            "infinity_check": self.infinity_check,
            "verdict": self.verdict,
            "p_constant_outside_interval": self.constant_outside_nodes,
        }


def ks_criterion(p: VariableExponent, w: WeightSpec) -> KSResult:
    """Check ``0 < 1/p(x_j) + l_j < 1`` at every node and
    ``0 < 1/p(inf) + l_inf + sum l_j < 1`` at infinity."""
    if not isinstance(w, PowerWeight):
        raise CriterionInapplicable("KS criterion needs a power weight")
    locs, checks = [], []
    for xj, lj in zip(w.nodes, w.powers):
        v = float(1.0 / p.value(np.array([xj]))[0] + lj)
        locs.append(v)
        checks.append(bool(0.0 < v < 1.0))
    vinf = 1.0 / p.p_inf + w.lambda_inf + sum(w.powers)
    inf_ok = bool(0.0 < vinf < 1.0)
    return KSResult(locs, checks, float(vinf), inf_ok, bool(all(checks) and inf_ok),
                    p.constant_outside_interval())
