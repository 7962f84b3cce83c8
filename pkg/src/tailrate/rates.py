"""Critical-rate classification along a one-parameter weight scale."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClassificationError, InputError, InvariantViolation
from .norms import CONVERGES, INCONCLUSIVE, AsymptoticEstimate, ShellPolicy, asymptotic_constant, sharp_value, _values
from .space import ExhaustedSpace
from .weights import Weight

__all__ = ["RateClassification", "PProfile", "SCALES", "scale_weight", "classify_rate", "p_profile"]

SCALES = {
    "alg": "Algebraic",
    "algebraic": "Algebraic",
    "exp": "Exponential",
    "exponential": "Exponential",
    "logpoly": "LogPolynomial",
    "logpolynomial": "LogPolynomial",
}

DEFAULT_BRACKET = (0.1, 8.0)


def _scale_name(scale):
    try:
        return SCALES[scale.lower()]
    except KeyError:
        raise InputError(f"unknown scale {scale!r}; use alg, exp or logpoly") from None


def scale_weight(scale, value):
    name = _scale_name(scale)
    if name == "Algebraic":
        return Weight.polynomial(value)
    if name == "Exponential":
        return Weight.exponential(value)
    return Weight.log_polynomial(0.0, value)


@dataclass
class RateClassification:
    scale: str
    critical: float
    constant_at_critical: AsymptoticEstimate | None
    bracket: tuple
    iterations: int
    outcome: str = "bracketed"  # or "slower-than-scale" / "faster-than-scale"
    probes: list = field(default_factory=list)  # (parameter, status)
    constant_parameter: float | None = None

    def to_dict(self):
        return {
            "scale": self.scale,
            "critical": self.critical,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "outcome": self.outcome,
            "constant": None if self.constant_at_critical is None else self.constant_at_critical.to_dict(),
            "constant_parameter": self.constant_parameter,
            "probes": [{"parameter": p, "status": s} for p, s in self.probes],
        }


def classify_rate(
    f,
    space: ExhaustedSpace,
    scale: str,
    L=0.0,
    tol: float = 0.01,
    bracket=DEFAULT_BRACKET,
    shell_policy: ShellPolicy | None = None,
) -> RateClassification:
    """Bisect the scale parameter on the asymptotic status.

    A Converges probe raises the lower end, anything else lowers the upper
    end.  The constant is reported at the final midpoint, or at the lower end
    when the midpoint does not converge.
    """
    name = _scale_name(scale)
    lo, hi = (float(b) for b in bracket)
    if not (0 <= lo < hi) or not tol > 0:
        raise InputError("need 0 <= lo < hi and tol > 0")
    fv = _values(f, space)
    probes = []

    def probe(v):
        est = asymptotic_constant(fv, space, scale_weight(name, v), L, shell_policy)
        probes.append((v, est.status))
        return est

    est_lo, est_hi = probe(lo), probe(hi)
    if est_lo.status == INCONCLUSIVE and est_hi.status == INCONCLUSIVE:
        raise ClassificationError(
            f"both bracket probes are Inconclusive on the {name} scale",
            diagnostics={"lo": est_lo.to_dict(), "hi": est_hi.to_dict()},
        )
    if not est_lo.converges:
        return RateClassification(name, lo, est_lo, (lo, hi), 0, "slower-than-scale", probes, lo)
    if est_hi.converges:
        return RateClassification(name, hi, est_hi, (lo, hi), 0, "faster-than-scale", probes, hi)
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid).converges:
            lo = mid
        else:
            hi = mid
        it += 1
    mid = 0.5 * (lo + hi)
    const = probe(mid)
    at = mid
    if not const.converges:
        const = asymptotic_constant(fv, space, scale_weight(name, lo), L, shell_policy)
        at = lo
    return RateClassification(name, mid, const, (lo, hi), it, "bracketed", probes, at)


@dataclass
class PProfile:
    points: list  # (p, sharp value)
    monotone: bool
    log_convex: bool
    convexity_violations: list = field(default_factory=list)  # (p1, p_mid, p2, excess)

    def __iter__(self):
        return iter(self.points)

    def to_dict(self):
        return {
            "profile": [{"p": p, "value": v} for p, v in self.points],
            "monotone": self.monotone,
            "log_convex": self.log_convex,
            "convexity_violations": [
                {"p1": a, "p_mid": b, "p2": c, "excess": e} for a, b, c, e in self.convexity_violations
            ],
        }


def p_profile(f, space: ExhaustedSpace, p_grid, slack: float = 1e-9) -> PProfile:
    """Sharp norms under ``(1+t)^p`` across ``p_grid``.

    Monotonicity in ``p`` is asserted.  Log-convexity of consecutive triples
    is tested and reported; it is not asserted because it fails in general
    (two points already give ``v(p) = k^p / (1 + k^p)``, which is log-concave).
    """
    P = np.asarray(p_grid, dtype=np.float64)
    if P.size == 0 or np.any(np.diff(P) <= 0) or np.any(P < 0):
        raise InputError("p_grid must be increasing and nonnegative")
    fv = _values(f, space)
    pts = []
    for p in P:
        W = np.asarray(Weight.polynomial(p).raw(space.h))
        pts.append((float(p), float(sharp_value(W, fv)[1])))
    vals = np.array([v for _, v in pts])
    if np.any(np.diff(vals) < -slack * (1.0 + vals[:-1])):
        raise InvariantViolation("sharp norm decreased as p increased")
    violations = []
    for k in range(1, len(pts) - 1):
        (p1, v1), (pm, vm), (p2, v2) = pts[k - 1], pts[k], pts[k + 1]
        if not all(math.isfinite(v) and v > 0 for v in (v1, vm, v2)):
            continue
        theta = (p2 - pm) / (p2 - p1)
        excess = math.log(vm) - (theta * math.log(v1) + (1 - theta) * math.log(v2))
        if excess > slack:
            violations.append((p1, pm, p2, excess))
    return PProfile(pts, True, not violations, violations)
