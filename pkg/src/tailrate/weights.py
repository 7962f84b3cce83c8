"""Admissible comparison weights and Young functions.

A weight is a nondecreasing function ``phi`` on ``[0, inf)`` with
``phi(0) = 1`` that is submultiplicative up to a constant ``K``.  Built-in
families are evaluated in closed form; custom weights are expressions in
``t`` whose admissibility is only checked on a caller grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import exprlang
from .errors import DomainError, InputError, NoRootError, WeightRangeError

__all__ = [
    "Weight",
    "YoungFunction",
    "AdmissibilityReport",
    "parse_weight",
    "parse_young",
    "eval_weight",
    "check_admissibility",
    "young_eval_and_inverse",
    "check_young",
]

_HUGE = np.finfo(np.float64).max


@dataclass(frozen=True)
class Weight:
    kind: str  # "poly" | "logpoly" | "exp" | "custom"
    p: float = 0.0
    q: float = 0.0
    alpha: float = 0.0
    body: exprlang.Expr | None = field(default=None, compare=False)
    source: str = ""

    def __post_init__(self):
        if self.kind not in ("poly", "logpoly", "exp", "custom"):
            raise InputError(f"unknown weight kind {self.kind!r}")
        if self.p < 0 or self.q < 0 or self.alpha < 0:
            raise InputError("weight parameters must be nonnegative")
        if self.kind == "custom" and self.body is None:
            raise InputError("custom weight needs an expression body")

    @classmethod
    def polynomial(cls, p):
        return cls("poly", p=float(p))

    @classmethod
    def log_polynomial(cls, p, q):
        return cls("logpoly", p=float(p), q=float(q))

    @classmethod
    def exponential(cls, alpha):
        return cls("exp", alpha=float(alpha))

    @classmethod
    def custom(cls, source):
        return cls("custom", body=exprlang.parse(source, ("t",)), source=source)

    def raw(self, t):
        """Evaluate without range validation (used by admissibility checks)."""
        t = np.asarray(t, dtype=np.float64)
        with np.errstate(over="ignore"):
            if self.kind == "poly":
                out = np.power(1.0 + t, self.p)
            elif self.kind == "logpoly":
                out = np.power(1.0 + t, self.p) * np.power(1.0 + np.log1p(t), self.q)
            elif self.kind == "exp":
                out = np.exp(self.alpha * t)
            else:
                out = np.asarray(exprlang.evaluate(self.body, {"t": t}), dtype=np.float64)
        if self.kind != "custom":
            out = np.minimum(out, _HUGE)
        return out

    def __call__(self, t):
        return eval_weight(self, t)

    def spec(self):
        if self.kind == "poly":
            return f"poly:p={_g(self.p)}"
        if self.kind == "logpoly":
            return f"logpoly:p={_g(self.p)},q={_g(self.q)}"
        if self.kind == "exp":
            return f"exp:a={_g(self.alpha)}"
        return f"custom:{self.source}"

    __str__ = spec

    def with_parameter(self, value):
        """Same family with its scale parameter replaced (p, alpha or q)."""
        if self.kind == "poly":
            return Weight.polynomial(value)
        if self.kind == "exp":
            return Weight.exponential(value)
        if self.kind == "logpoly":
            return Weight.log_polynomial(self.p, value)
        raise InputError("custom weights have no scale parameter")


def _g(v):
    return repr(float(v)).removesuffix(".0") if float(v).is_integer() else repr(float(v))


def _parse_params(text, allowed):
    params = {}
    if not text:
        return params
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in allowed:
            raise InputError(f"bad weight parameter {item!r}; expected one of {sorted(allowed)}")
        try:
            params[key] = float(value)
        except ValueError:
            raise InputError(f"weight parameter {key} is not a number: {value!r}") from None
    return params


def parse_weight(spec: str) -> Weight:
    """Parse ``poly:p=2``, ``logpoly:p=1,q=2``, ``exp:a=0.5`` or ``custom:<expr in t>``."""
    kind, _, rest = spec.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "custom":
        if not rest.strip():
            raise InputError("custom weight needs an expression")
        return Weight.custom(rest.strip())
    if kind == "poly":
        return Weight.polynomial(_parse_params(rest, {"p"}).get("p", 1.0))
    if kind == "logpoly":
        params = _parse_params(rest, {"p", "q"})
        return Weight.log_polynomial(params.get("p", 0.0), params.get("q", 1.0))
    if kind == "exp":
        params = _parse_params(rest, {"a", "alpha"})
        return Weight.exponential(params.get("a", params.get("alpha", 1.0)))
    raise InputError(f"unknown weight spec {spec!r}")


def eval_weight(w: Weight, t):
    """Return ``phi(t)`` for scalar or array ``t >= 0``."""
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("weights are defined on t >= 0 only")
    out = w.raw(arr)
    if w.kind == "custom":
        if not np.all(np.isfinite(out)):
            raise WeightRangeError(f"custom weight {w.source!r} is not finite on the input")
        if np.any(out < 1.0 - 1e-12):
            raise WeightRangeError(f"custom weight {w.source!r} drops below 1")
    return float(out) if arr.ndim == 0 else out


@dataclass
class AdmissibilityReport:
    monotone_ok: bool
    normalized_ok: bool
    submult_constant_K: float
    grid_max: float
    violations: list = field(default_factory=list)

    @property
    def ok(self):
        return self.monotone_ok and self.normalized_ok and not self.violations

    def to_dict(self):
        return {
            "monotone_ok": self.monotone_ok,
            "normalized_ok": self.normalized_ok,
            "submult_constant_K": self.submult_constant_K,
            "grid_max": self.grid_max,
            "violations": [list(v) for v in self.violations],
        }


def check_admissibility(w: Weight, grid, cap: float | None = None) -> AdmissibilityReport:
    """Check normalisation, monotonicity and submultiplicativity on ``grid``.

    ``K`` is the exact on-grid maximum of ``phi(r+s) / (phi(r) phi(s))`` over
    all pairs; pairs whose ratio exceeds ``cap`` are listed as violations.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.size == 0:
        raise InputError("admissibility grid is empty")
    if np.any(np.diff(g) < 0):
        raise InputError("admissibility grid must be sorted")
    if g[0] != 0.0:
        raise InputError("admissibility grid must include 0")
    vals = w.raw(g)
    finite = np.all(np.isfinite(vals))
    normalized_ok = bool(abs(vals[0] - 1.0) <= 1e-12)
    monotone_ok = bool(finite and np.all(np.diff(vals) >= -1e-12 * np.abs(vals[1:])))

    r, s = np.meshgrid(g, g, indexing="ij")
    iu = np.triu_indices(g.size)
    rr, ss = r[iu], s[iu]
    with np.errstate(all="ignore"):
        num = w.raw(rr + ss)
        den = w.raw(rr) * w.raw(ss)
        ratio = num / den
    ratio = np.where(np.isfinite(ratio), ratio, np.inf)
    K = float(max(1.0, np.max(ratio)))
    violations = []
    if cap is not None:
        bad = np.nonzero(ratio > cap)[0]
        violations = [(float(rr[k]), float(ss[k]), float(ratio[k])) for k in bad]
    return AdmissibilityReport(monotone_ok, normalized_ok, K, float(g[-1]), violations)


@dataclass(frozen=True)
class YoungFunction:
    kind: str  # "power" | "expm1" | "custom"
    exponent: float = 1.0
    body: exprlang.Expr | None = field(default=None, compare=False)
    source: str = ""

    def __post_init__(self):
        if self.kind not in ("power", "expm1", "custom"):
            raise InputError(f"unknown Young function kind {self.kind!r}")
        if self.kind == "power" and self.exponent < 1:
            raise InputError("power Young functions need exponent >= 1")
        if self.kind == "custom" and self.body is None:
            raise InputError("custom Young function needs an expression body")

    @classmethod
    def power(cls, exponent):
        return cls("power", exponent=float(exponent))

    @classmethod
    def exp_minus_one(cls):
        return cls("expm1")

    @classmethod
    def custom(cls, source):
        return cls("custom", body=exprlang.parse(source, ("t",)), source=source)

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        with np.errstate(over="ignore"):
            if self.kind == "power":
                out = np.power(y, self.exponent)
            elif self.kind == "expm1":
                out = np.expm1(y)
            else:
                out = np.asarray(exprlang.evaluate(self.body, {"t": y}), dtype=np.float64)
        return float(out) if out.ndim == 0 else out

    def inverse_at_one(self):
        if self.kind == "power":
            return 1.0
        if self.kind == "expm1":
            return math.log(2.0)
        return _bisect_level(self, 1.0)

    def spec(self):
        if self.kind == "power":
            return f"power:e={_g(self.exponent)}"
        if self.kind == "expm1":
            return "expm1"
        return f"custom:{self.source}"

    __str__ = spec


def parse_young(spec: str) -> YoungFunction:
    """Parse ``power:e=2``, ``expm1`` or ``custom:<expr in t>``."""
    kind, _, rest = spec.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "power":
        params = _parse_params(rest, {"e", "exponent"})
        return YoungFunction.power(params.get("e", params.get("exponent", 1.0)))
    if kind == "expm1":
        return YoungFunction.exp_minus_one()
    if kind == "custom":
        return YoungFunction.custom(rest.strip())
    raise InputError(f"unknown Young function spec {spec!r}")


def _bisect_level(phi, level, tol=1e-12, max_expand=200):
    lo, hi = 0.0, 1.0
    expand = 0
    while True:
        try:
            v = phi(hi)
        except Exception:
            v = math.inf
        if v >= level:
            break
        lo = hi
        hi *= 2.0
        expand += 1
        if expand > max_expand:
            raise NoRootError(f"Young function never reaches {level} (searched up to {hi:g})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi(mid) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def young_eval_and_inverse(phi: YoungFunction, y: float):
    """Return ``(Phi(y), Phi^{-1}(1))``."""
    if y < 0:
        raise DomainError("Young functions are evaluated on y >= 0")
    return float(phi(y)), phi.inverse_at_one()


def check_young(phi: YoungFunction, grid) -> bool:
    """Grid check: ``Phi(0) = 0``, increasing, and convex (slopes nondecreasing)."""
    g = np.asarray(grid, dtype=np.float64)
    vals = np.asarray(phi(g), dtype=np.float64)
    if g[0] != 0.0 or abs(vals[0]) > 1e-12:
        return False
    if np.any(np.diff(vals) < 0):
        return False
    slopes = np.diff(vals) / np.diff(g)
    return bool(np.all(np.diff(slopes) >= -1e-9 * np.maximum(1.0, np.abs(slopes[1:]))))
