"""Command-line driver: JSON config in, report.json + CSV + manifest.json out."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .ap import QUALIFIER, Interval, ap_grid, classify
from .exponent import exponent_from_json
from .gridfn import CharFun, expr_from_json, grid_for, sample
from .sio import cauchy_S, maximal_M
from .vnorm import modular, weighted_norm
from .weight import CriterionInapplicable, PowerWeight, ks_criterion, weight_from_json
from . import verify as V

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

VERIFY_SUITES = ("s_squared", "self_adjoint", "weak_type", "lerner", "holder",
                 "operator_norm", "necessity")
SUITES = ("norm", "modular", "apply_s", "apply_m", "ap", "ks", "sweep") + VERIFY_SUITES
FAMILIES = ("default", "s_squared", "dipoles", "chars", "bumps", "smooth")
SWEEP_LAMBDAS = (-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6)
SWEEP_COLUMNS = ("lambda", "ks_verdict", "ap_divergent",
                 "norm_ratio_l1", "norm_ratio_l2", "norm_ratio_l3")

_TOP_KEYS = {"grid", "exponent", "weight", "suites", "family", "f", "g", "levels",
             "seed", "out_dir", "lambdas", "interval", "lam", "pairs"}
_GRID_KEYS = {"L", "n", "depth"}


class ConfigError(ValueError):
    def __init__(self, msg: str, line: int = 1):
        super().__init__(f"config line {line}: {msg}")
        self.line = line


@dataclass
class RunConfig:
    L: float = 16.0
    n: int = 4097
    depth: int = 8
    exponent: dict = field(default_factory=lambda: {"kind": "const", "value": 2.0})
    weight: dict = field(default_factory=lambda: {"kind": "power"})
    suites: list = field(default_factory=lambda: ["norm"])
    family: object = "default"
    f: dict = field(default_factory=lambda: CharFun(0.0, 1.0).to_json())
    g: Optional[dict] = None
    levels: int = 8
    seed: int = 42
    out_dir: str = "out"
    lambdas: list = field(default_factory=lambda: list(SWEEP_LAMBDAS))
    interval: list = field(default_factory=lambda: [-1.0, 1.0])
    lam: float = 1.0
    pairs: int = 50

    def to_json(self):
        return {"grid": {"L": self.L, "n": self.n, "depth": self.depth},
                "exponent": self.exponent, "weight": self.weight, "suites": list(self.suites),
                "family": self.family, "f": self.f, "g": self.g, "levels": self.levels,
                "seed": self.seed, "out_dir": self.out_dir, "lambdas": list(self.lambdas),
                "interval": list(self.interval), "lam": self.lam, "pairs": self.pairs}

    # parsed views
    @property
    def p(self):
        return exponent_from_json(self.exponent)

    @property
    def w(self):
        return weight_from_json(self.weight)


def _line_of(text: str, key: str) -> int:
    i = text.find(f'"{key}"')
    return text.count("\n", 0, i) + 1 if i >= 0 else 1


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document; raises ``ConfigError``."""
    if not text.strip():
        return _validate(RunConfig(), "")
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(d, dict):
        raise ConfigError("top level must be an object")
    for k in d:
        if k not in _TOP_KEYS:
            raise ConfigError(f"unknown key {k!r}", _line_of(text, k))
    cfg = RunConfig()
    grid = d.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid must be an object", _line_of(text, "grid"))
    for k in grid:
        if k not in _GRID_KEYS:
            raise ConfigError(f"unknown key grid.{k}", _line_of(text, k))
    try:
        cfg.L = float(grid.get("L", cfg.L))
        cfg.n = _int(grid.get("n", cfg.n))
        cfg.depth = _int(grid.get("depth", cfg.depth))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}", _line_of(text, "grid")) from None
    for k in ("exponent", "weight", "family", "f", "g", "out_dir"):
        if k in d:
            setattr(cfg, k, d[k])
    conv = {"levels": _int, "seed": _int, "pairs": _int, "lam": float,
            "lambdas": lambda v: [float(x) for x in v],
            "interval": lambda v: [float(x) for x in v]}
    for k, fn in conv.items():
        if k in d:
            try:
                setattr(cfg, k, fn(d[k]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{k}: {exc}", _line_of(text, k)) from None
    if "suites" in d:
        cfg.suites = d["suites"]
    return _validate(cfg, text)


def _int(x) -> int:
    if isinstance(x, bool) or not float(x).is_integer():
        raise ValueError(f"expected an integer, got {x!r}")
    return int(x)


def _validate(cfg: RunConfig, text: str) -> RunConfig:
    def fail(msg, key):
        raise ConfigError(msg, _line_of(text, key))

    if not isinstance(cfg.suites, list) or not cfg.suites:
        fail("suites must be a nonempty list", "suites")
    for s in cfg.suites:
        if s not in SUITES:
            fail(f"unknown suite {s!r}; choose from {', '.join(SUITES)}", "suites")
    if not (cfg.L > 0 and math.isfinite(cfg.L)):
        fail("grid.L must be positive", "L")
    if cfg.n < 33:
        fail("grid.n must be at least 33", "n")
    if cfg.depth < 0:
        fail("grid.depth must be nonnegative", "depth")
    if cfg.levels < 3:
        fail("levels must be at least 3", "levels")
    try:
        cfg.p
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        fail(f"exponent: {exc}", "exponent")
    try:
        w = cfg.w
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        fail(f"weight: {exc}", "weight")
    nodes = [abs(x) for x in w.singular_nodes()]
    if nodes and not cfg.L > 2 * max(nodes):
        fail(f"grid.L = {cfg.L} must exceed twice the largest weight node ({max(nodes)})", "L")
    for k in ("f", "g"):
        v = getattr(cfg, k)
        if v is not None:
            try:
                expr_from_json(v)
            except (ValueError, KeyError, TypeError) as exc:
                fail(f"{k}: {exc}", k)
    fam = cfg.family
    if isinstance(fam, str):
        if fam not in FAMILIES:
            fail(f"unknown family {fam!r}; choose from {', '.join(FAMILIES)}", "family")
    elif isinstance(fam, list) and fam:
        try:
            [expr_from_json(e) for e in fam]
        except (ValueError, KeyError, TypeError) as exc:
            fail(f"family: {exc}", "family")
    else:
        fail("family must be a name or a nonempty list of functions", "family")
    if len(cfg.interval) != 2 or not cfg.interval[0] < cfg.interval[1]:
        fail("interval must be [a, b] with a < b", "interval")
    if max(abs(x) for x in cfg.interval) > cfg.L:
        fail("interval must lie inside [-L, L]", "interval")
    if not cfg.lam > 0:
        fail("lam must be positive", "lam")
    if cfg.pairs < 1:
        fail("pairs must be positive", "pairs")
    if any(2 * abs(l) == 1 for l in cfg.lambdas):
        fail("lambda = +-1/2 is excluded from sweeps", "lambdas")
    return cfg


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


@dataclass
class SuiteResult:
    name: str
    passed: bool
    report: dict
    header: tuple
    rows: list


def _family(cfg: RunConfig, default: str = "default") -> list:
    fam = cfg.family
    if isinstance(fam, list):
        return [expr_from_json(e) for e in fam]
    if fam == "default":
        fam = default
    if fam == "default":
        return V.default_family(cfg.w.singular_nodes())
    return {"s_squared": V.s_squared_family, "dipoles": V.dipoles, "chars": V.dyadic_chars,
            "smooth": V.smooth_bumps,
            "bumps": lambda: [e for grp in V.bumps_near(cfg.w.singular_nodes()) for e in grp],
            }[fam]()


def _grid(cfg, exprs):
    return grid_for(exprs, weight=cfg.w, exponent=cfg.p, L=cfg.L, n=cfg.n, depth=cfg.depth)


def _suite_norm(cfg, ctx):
    f = expr_from_json(cfg.f)
    g = _grid(cfg, [f])
    r = weighted_norm(sample(f, g), cfg.p, cfg.w)
    rep = {"f": cfg.f, "norm": r.to_json(), "grid": g.metadata()}
    return SuiteResult("norm", True, rep, ("quantity", "value"),
                       [("norm", r.value), ("bracket_lo", r.bracket[0]),
                        ("bracket_hi", r.bracket[1]), ("divergent", r.divergent)])


def _suite_modular(cfg, ctx):
    f = expr_from_json(cfg.f)
    g = _grid(cfg, [f])
    r = modular(sample(f, g), cfg.p, cfg.lam, cfg.w)
    rep = {"f": cfg.f, "lambda": cfg.lam, "modular": r.to_json(), "grid": g.metadata()}
    return SuiteResult("modular", True, rep, ("depth", "value"),
                       list(enumerate(r.refinement_trace)))


def _pointwise(name, cfg, op):
    f = expr_from_json(cfg.f)
    g = grid_for([f], weight=cfg.w, exponent=cfg.p, L=cfg.L, n=cfg.n, depth=cfg.depth,
                 grade_breaks=True)
    h = op(sample(f, g))
    flags = h.flagged if h.flagged is not None else np.zeros(len(g.nodes), bool)
    rows = [(float(x), float(v.real), float(v.imag), bool(fl))
            for x, v, fl in zip(g.nodes, h.values, flags)]
    rep = {"f": cfg.f, "grid": g.metadata(), "n_flagged": int(flags.sum()),
           "tail": [[c.real, c.imag] for c in h.tail],
           "values": [list(r) for r in rows]}
    return SuiteResult(name, True, rep, ("x", "re", "im", "flagged"), rows)


def _suite_apply_s(cfg, ctx):
    return _pointwise("apply_s", cfg, cauchy_S)


def _suite_apply_m(cfg, ctx):
    return _pointwise("apply_m", cfg, maximal_M)


def _suite_ap(cfg, ctx):
    p, w = cfg.p, cfg.w
    c = classify(p, w, cfg.levels, ap_grid(p, w, cfg.L, cfg.n, cfg.depth))
    rep = c.to_json()
    rows = [(q.a, q.b, lev, v, c.report.divergent) for q, v, lev in c.report.values]
    return SuiteResult("ap", True, rep, ("a", "b", "level", "value", "divergent"), rows)


def _suite_ks(cfg, ctx):
    try:
        r = ks_criterion(cfg.p, cfg.w)
    except CriterionInapplicable as exc:
        return SuiteResult("ks", True, {"applicable": False, "reason": str(exc)},
                           ("node", "value", "in_range"), [])
    rows = [(x, v, ok) for x, v, ok in zip(cfg.w.nodes, r.local_values, r.local_checks)]
    rows.append(("inf", r.infinity_value, r.infinity_check))
    return SuiteResult("ks", True, r.to_json(), ("node", "value", "in_range"), rows)


def _suite_sweep(cfg, ctx):
    p = cfg.p
    rows, points = [], []
    ok = True
    for lam in cfg.lambdas:
        w = PowerWeight((0.0,), (lam,))
        c = classify(p, w, cfg.levels, ap_grid(p, w, cfg.L, cfg.n, cfg.depth))
        tr = V.norm_ratio_trace(p, w, 3, cfg.L, cfg.n, cfg.depth)
        ok = ok and bool(c.concordant)
        rows.append((lam, c.ks_verdict, c.report.divergent, *tr))
        points.append({"lambda": lam, "ks_verdict": c.ks_verdict,
                       "in_class": c.in_class, "ap_divergent": c.report.divergent,
                       "concordant": c.concordant, "ap_trace": c.report.to_json()["trace"],
                       "norm_ratio_trace": [V._num(x) for x in tr],
                       "divergence_source": c.report.divergence_source})
    rep = {"exponent": cfg.exponent, "levels": cfg.levels, "qualifier": QUALIFIER,
           "points": points, "pass": ok}
    return SuiteResult("sweep", ok, rep, SWEEP_COLUMNS, rows)


def _verify_result(rep: V.VerifyReport) -> SuiteResult:
    return SuiteResult(rep.suite, rep.passed, rep.to_json(),
                       ("case", "lhs", "rhs", "ratio", "pass", "asserted"), rep.csv_rows())


def _suite_s_squared(cfg, ctx):
    fam = _family(cfg, "s_squared")
    return _verify_result(V.check_s_squared(fam, cfg.p, cfg.w, cfg.L, cfg.n, cfg.depth))


def _suite_self_adjoint(cfg, ctx):
    pairs = V.default_pairs(cfg.pairs, cfg.seed)
    return _verify_result(V.check_self_adjoint(pairs, cfg.p, cfg.w, cfg.L, cfg.n, cfg.depth))


def _suite_weak_type(cfg, ctx):
    fam = _family(cfg, "s_squared")
    return _verify_result(V.check_weak_type(fam, None, cfg.L, cfg.n, cfg.depth))


def _suite_lerner(cfg, ctx):
    pairs = None
    if cfg.g is not None:
        pairs = [(expr_from_json(cfg.f), expr_from_json(cfg.g))]
    return _verify_result(V.check_lerner_battery(pairs))


def _suite_holder(cfg, ctx):
    return _verify_result(V.check_holder(200, cfg.seed))


def _operator_norm(cfg, ctx):
    if "operator_norm" not in ctx:
        fam = _family(cfg)
        ctx["operator_norm"] = (fam, V.operator_norm_ratios(cfg.p, cfg.w, fam, cfg.L,
                                                            cfg.n, cfg.depth))
    return ctx["operator_norm"]


def _suite_operator_norm(cfg, ctx):
    fam, ratios = _operator_norm(cfg, ctx)
    cases = [V.Case(V._name(e), r, 1.0, r, True, False) for e, r in zip(fam, ratios)]
    finite = [r for r in ratios if not math.isnan(r)]
    bound = max(finite) if finite else math.nan
    rep = V.VerifyReport("operator_norm", cases, {},
                         _grid(cfg, fam).metadata(),
                         [f"lower bound {V._num(bound)}; ratios are reported only"])
    out = _verify_result(rep)
    out.report["lower_bound"] = V._num(bound)
    return out


def _suite_necessity(cfg, ctx):
    fam, ratios = _operator_norm(cfg, ctx)
    finite = [r for r in ratios if not math.isnan(r)]
    if not finite:
        raise RuntimeError("no family member has a finite nonzero norm")
    q = Interval(*cfg.interval)
    g = ap_grid(cfg.p, cfg.w, cfg.L, cfg.n, cfg.depth)
    return _verify_result(V.necessity_probe(cfg.p, cfg.w, q, max(finite), g))


RUNNERS = {
    "norm": _suite_norm, "modular": _suite_modular, "apply_s": _suite_apply_s,
    "apply_m": _suite_apply_m, "ap": _suite_ap, "ks": _suite_ks, "sweep": _suite_sweep,
    "s_squared": _suite_s_squared, "self_adjoint": _suite_self_adjoint,
    "weak_type": _suite_weak_type, "lerner": _suite_lerner, "holder": _suite_holder,
    "operator_norm": _suite_operator_norm, "necessity": _suite_necessity,
}


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def _clean(x):
    """JSON-safe copy: non-finite floats become tokens, numpy scalars become Python."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return V._num(float(x))
    if isinstance(x, complex):
        return [_clean(x.real), _clean(x.imag)]
    return x


def fmt(x) -> str:
    """CSV cell: 12 significant digits, ``+inf`` for divergence."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return "%.12g" % x
    return str(x)


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _write(path: str, text: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return hashlib.sha256(text.encode()).hexdigest()


def run(cfg: RunConfig, log=None) -> int:
    """Run the configured suites in order and write the outputs; returns the exit status."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    ctx = {}
    results = []
    for name in cfg.suites:
        if log:
            log(f"running {name}")
        results.append(RUNNERS[name](cfg, ctx))
    ok = all(r.passed for r in results)
    report = {"version": __version__, "pass": ok,
              "suites": {r.name: r.report for r in results},
              "order": [r.name for r in results]}
    files = {"report.json": _write(os.path.join(cfg.out_dir, "report.json"), _dumps(report))}
    for r in results:
        fn = f"{r.name}.csv"
        files[fn] = _write(os.path.join(cfg.out_dir, fn), _csv_text(r.header, r.rows))
    grids = {r.name: r.report["grid"] for r in results
             if isinstance(r.report.get("grid"), dict)}
    manifest = {"tool": "vlebesgue", "version": __version__, "config": cfg.to_json(),
                "grids": grids, "files": files,
                "suites": {r.name: r.passed for r in results}}
    _write(os.path.join(cfg.out_dir, "manifest.json"), _dumps(manifest))
    if log:
        for r in results:
            log(f"{r.name}: {'pass' if r.passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_SUBCOMMANDS = {"norm": "norm", "modular": "modular", "apply-s": "apply_s",
                "apply-m": "apply_m", "ap-check": "ap", "ks-check": "ks", "sweep": "sweep"}


def _global_flags(ap, default):
    ap.add_argument("--config", default=default, help="JSON run configuration")
    ap.add_argument("--out", default=default, help="output directory (overrides out_dir)")
    ap.add_argument("--grid-n", type=int, default=default, help="mesh points (overrides grid.n)")
    ap.add_argument("--seed", type=int, default=default, help="seed (overrides seed)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vleb", description=__doc__)
    _global_flags(ap, None)
    # the same flags are accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("suite", choices=VERIFY_SUITES + ("all",))
    sub.add_parser("run", parents=[common], help="run the suites listed in the config")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        if args.command in _SUBCOMMANDS:
            cfg.suites = [_SUBCOMMANDS[args.command]]
        elif args.command == "verify":
            cfg.suites = list(VERIFY_SUITES) if args.suite == "all" else [args.suite]
        if args.out:
            cfg.out_dir = args.out
        if args.grid_n is not None:
            cfg.n = args.grid_n
        if args.seed is not None:
            cfg.seed = args.seed
        cfg = _validate(cfg, text)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, log=lambda s: print(s, file=sys.stderr))


if __name__ == "__main__":
    sys.exit(main())
