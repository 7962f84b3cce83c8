"""Spaces with finitely many ends: block weights and per-end functionals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError, InsufficientDataError, InvariantViolation, PartitionError
from .norms import (
    CONVERGES,
    DIVERGES,
    INCONCLUSIVE,
    AsymptoticEstimate,
    FunctionSample,
    ShellPolicy,
    _asymptotic,
    _shell_masks,
    _values,
    sharp_value,
)
from .space import ExhaustedSpace
from .weights import Weight, eval_weight, parse_weight

__all__ = [
    "End",
    "EndDecomposition",
    "EndLimit",
    "AnisoReport",
    "AnisoAsymptotic",
    "ProjectionResult",
    "GluingReport",
    "block_weight",
    "aniso_sharp_norm",
    "end_limits",
    "aniso_asymptotic",
    "project_vanishing",
    "gluing_check",
]


@dataclass(frozen=True, eq=False)
class End:
    label: str
    ids: np.ndarray
    h: np.ndarray
    weight: Weight

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64).ravel()
        h = np.asarray(self.h, dtype=np.float64).ravel()
        if ids.size == 0:
            raise PartitionError(f"end {self.label!r} is empty")
        if h.shape != ids.shape:
            raise InputError(f"end {self.label!r}: h must align with ids")
        if not np.all(np.isfinite(h)) or np.any(h < 0):
            raise InputError(f"end {self.label!r}: h values must be finite and >= 0")
        if isinstance(self.weight, str):
            object.__setattr__(self, "weight", parse_weight(self.weight))
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "h", h)


@dataclass(frozen=True, eq=False)
class EndDecomposition:
    core_ids: np.ndarray
    ends: tuple

    def __post_init__(self):
        object.__setattr__(self, "core_ids", np.asarray(self.core_ids, dtype=np.int64).ravel())
        object.__setattr__(self, "ends", tuple(self.ends))
        labels = [e.label for e in self.ends]
        if len(set(labels)) != len(labels):
            raise InputError("end labels must be unique")
        every = np.concatenate([self.core_ids] + [e.ids for e in self.ends])
        if np.unique(every).size != every.size:
            raise PartitionError("core and ends overlap")

    @property
    def labels(self):
        return [e.label for e in self.ends]

    def locate(self, space: ExhaustedSpace):
        """Return (core positions, [end positions]) as indices into ``space``."""
        index = {int(v): k for k, v in enumerate(space.ids)}
        covered = np.zeros(len(space), dtype=bool)

        def pos(ids, what):
            try:
                out = np.array([index[int(i)] for i in ids], dtype=np.int64)
            except KeyError as exc:
                raise PartitionError(f"{what} refers to unknown point id {exc.args[0]}") from None
            covered[out] = True
            return out

        core = pos(self.core_ids, "core")
        ends = [pos(e.ids, f"end {e.label!r}") for e in self.ends]
        if not covered.all():
            missing = int(space.ids[np.argmin(covered)])
            raise PartitionError(f"point {missing} lies in no region")
        return core, ends

    def end_space(self, space: ExhaustedSpace, i: int):
        """The ``i``-th end as its own space (exhaustion ``h_i``) and its positions in ``space``."""
        _, ends = self.locate(space)
        e = self.ends[i]
        sub = ExhaustedSpace(h=e.h, ids=e.ids, mu=space.mu[ends[i]])
        return sub, ends[i]

    @classmethod
    def from_labels(cls, space: ExhaustedSpace, weights, core_label="core"):
        """Build from per-point end labels; each end uses the space's ``h`` on its points."""
        if space.end_label is None:
            raise InputError("space has no end labels")
        labels = np.asarray(space.end_label, dtype=object)
        core = space.ids[(labels == core_label) | (labels == "")]
        ends = []
        for lab in sorted({str(x) for x in labels} - {core_label, ""}):
            mask = labels == lab
            w = weights[lab] if isinstance(weights, dict) else weights
            ends.append(End(lab, space.ids[mask], space.h[mask], w))
        return cls(core, ends)

    def to_dict(self):
        return {
            "core": [int(i) for i in self.core_ids],
            "ends": [
                {"label": e.label, "ids": [int(i) for i in e.ids], "h": [float(v) for v in e.h], "weight": e.weight.spec()}
                for e in self.ends
            ],
        }


def block_weight(dec: EndDecomposition, space: ExhaustedSpace) -> np.ndarray:
    """1 on the core, ``phi_i(h_i)`` on end ``i``."""
    core, ends = dec.locate(space)
    W = np.empty(len(space))
    W[core] = 1.0
    for e, pos in zip(dec.ends, ends):
        W[pos] = eval_weight(e.weight, e.h)
    return W


@dataclass
class EndLimit:
    label: str
    L: float
    residual: AsymptoticEstimate | None
    deep_points: int

    def to_dict(self):
        return {
            "label": self.label,
            "L": self.L,
            "deep_points": self.deep_points,
            "residual": None if self.residual is None else self.residual.to_dict(),
        }


@dataclass
class AnisoReport:
    value: float
    c_star: float
    per_end: list  # (label, end_norm, L_i or None, end_constant or None)
    core_osc: float

    def to_dict(self):
        return {
            "value": self.value,
            "c_star": self.c_star,
            "core_osc": self.core_osc,
            "per_end": [
                {"label": lab, "end_norm": n, "L": L, "constant": c} for lab, n, L, c in self.per_end
            ],
        }


def _deep_mask(h, quantile):
    thr = np.quantile(h, quantile)
    return h > thr if np.count_nonzero(h > thr) else h >= thr


def _end_limit(fv, e: End, pos, quantile, policy):
    deep = h_deep = _deep_mask(e.h, quantile)
    if np.count_nonzero(deep) < 5:
        raise InsufficientDataError(
            f"end {e.label!r}: only {np.count_nonzero(h_deep)} points above the {quantile} quantile of h (need 5)"
        )
    f_end = fv[pos]
    L = float(np.median(f_end[deep]))
    W = np.asarray(eval_weight(e.weight, e.h))
    try:
        residual = _asymptotic(W, f_end - L, e.h, 0.0, policy)
    except InputError:
        residual = None
    return EndLimit(e.label, L, residual, int(np.count_nonzero(deep)))


def end_limits(f, space: ExhaustedSpace, dec: EndDecomposition, quantile: float = 0.9, shell_policy=None):
    """Median of ``f`` over each end's deepest ``1 - quantile`` fraction, plus the residual constant."""
    if not 0 < quantile < 1:
        raise InputError("quantile must lie in (0, 1)")
    fv = _values(f, space)
    _, ends = dec.locate(space)
    policy = shell_policy or ShellPolicy()
    return [_end_limit(fv, e, pos, quantile, policy) for e, pos in zip(dec.ends, ends)]


def aniso_sharp_norm(f, space: ExhaustedSpace, dec: EndDecomposition, quantile: float = 0.9) -> AnisoReport:
    """One-constant minimax under the block weight, with per-end and core pieces."""
    fv = _values(f, space)
    core, ends = dec.locate(space)
    W = block_weight(dec, space)
    c, value = sharp_value(W, fv)
    per_end = []
    policy = ShellPolicy()
    for e, pos in zip(dec.ends, ends):
        norm = sharp_value(W[pos], fv[pos])[1]
        try:
            lim = _end_limit(fv, e, pos, quantile, policy)
            L = lim.L
            const = lim.residual.value if lim.residual is not None else None
        except InputError:
            L = const = None
        per_end.append((e.label, float(norm), L, const))
    core_osc = float((fv[core].max() - fv[core].min()) / 2) if core.size else 0.0
    return AnisoReport(float(value), float(c), per_end, core_osc)


@dataclass
class AnisoAsymptotic:
    status: str  # Converges | Diverging | Inconclusive
    value: float | None
    argmin_c: float
    per_end: list  # (label, AsymptoticEstimate)
    lower_bound: float
    witness: str | None = None

    @property
    def diverging(self):
        return self.status == "Diverging"

    def to_dict(self):
        return {
            "status": self.status,
            "value": "+inf" if self.diverging else self.value,
            "argmin_c": self.argmin_c,
            "lower_bound": self.lower_bound,
            "witness": self.witness,
            "per_end": [{"label": lab, "estimate": est.to_dict()} for lab, est in self.per_end],
        }


def aniso_asymptotic(f, space: ExhaustedSpace, dec: EndDecomposition, shell_policy=None) -> AnisoAsymptotic:
    """Minimise over ``c`` the worst deepest-shell sup of ``phi_i(h_i)|f - c|`` across ends.

    That objective is a max of weighted distances, so the minimiser is the
    minimax centre of the pooled deepest shells.  Per-end shell statuses are
    then read off at that centre.
    """
    policy = shell_policy or ShellPolicy()
    fv = _values(f, space)
    _, ends = dec.locate(space)
    if not dec.ends:
        raise InputError("decomposition has no ends")
    pooled_W, pooled_f, lower = [], [], 0.0
    weights = []
    for e, pos in zip(dec.ends, ends):
        W = np.asarray(eval_weight(e.weight, e.h))
        weights.append(W)
        shells = _shell_masks(e.h, policy)
        if len(shells) < max(policy.min_shells, 3):
            raise InputError(f"end {e.label!r} supports only {len(shells)} shells")
        last = shells[-1][0]
        pooled_W.append(W[last])
        pooled_f.append(fv[pos][last])
        lower = max(lower, sharp_value(W[last], fv[pos][last])[1])
    c, F = sharp_value(np.concatenate(pooled_W), np.concatenate(pooled_f))
    if F < lower - 1e-9 * (1 + lower):
        raise InvariantViolation("anisotropic constant fell below a per-end constant")
    per_end = []
    for e, pos, W in zip(dec.ends, ends, weights):
        per_end.append((e.label, _asymptotic(W, fv[pos], e.h, c, policy)))
    diverging = [lab for lab, est in per_end if est.status == DIVERGES]
    if diverging:
        return AnisoAsymptotic("Diverging", None, float(c), per_end, float(lower), diverging[0])
    if any(est.status == INCONCLUSIVE for _, est in per_end):
        return AnisoAsymptotic(INCONCLUSIVE, None, float(c), per_end, float(lower))
    value = max(est.value for _, est in per_end)
    return AnisoAsymptotic(CONVERGES, float(value), float(c), per_end, float(lower))


@dataclass
class ProjectionResult:
    Pf: FunctionSample
    limits: list  # (label, L_i)
    residual_limits: list  # (label, limit of Pf)
    idempotence_drift: float
    tolerance: float

    def to_dict(self):
        return {
            "limits": [{"label": lab, "L": L} for lab, L in self.limits],
            "residual_limits": [{"label": lab, "L": L} for lab, L in self.residual_limits],
            "idempotence_drift": self.idempotence_drift,
            "tolerance": self.tolerance,
        }


def _project(fv, dec, ends, limits, ramp):
    out = fv.copy()
    for e, pos, L in zip(dec.ends, ends, limits):
        r0, r1 = np.quantile(e.h, ramp[0]), np.quantile(e.h, ramp[1])
        chi = np.clip((e.h - r0) / (r1 - r0), 0.0, 1.0) if r1 > r0 else (e.h >= r1).astype(float)
        out[pos] = out[pos] - L * chi
    return out


def project_vanishing(
    f, space: ExhaustedSpace, dec: EndDecomposition, ramp: Sequence[float] = (0.5, 0.9), quantile: float = 0.9
) -> ProjectionResult:
    """Subtract ``sum_i L_i chi_i`` with ``chi_i`` ramping between two ``h_i`` quantiles."""
    r0q, r1q = (float(r) for r in ramp)
    if not 0 <= r0q < r1q <= quantile:
        raise InputError("ramp quantiles must satisfy 0 <= r0 < r1 <= the limit quantile")
    fv = _values(f, space)
    _, ends = dec.locate(space)
    lims = end_limits(fv, space, dec, quantile)
    L = [lim.L for lim in lims]
    pf = _project(fv, dec, ends, L, ramp)
    again = end_limits(pf, space, dec, quantile)
    ppf = _project(pf, dec, ends, [lim.L for lim in again], ramp)
    drift = float(np.max(np.abs(ppf - pf))) if pf.size else 0.0
    tol = 1e-6 * (1.0 + max((abs(v) for v in L), default=0.0))
    for lim, base in zip(again, L):
        if abs(lim.L) > 1e-6 * (1.0 + abs(base)):
            raise InvariantViolation(f"projected function keeps limit {lim.L!r} on end {lim.label!r}")
    if drift > tol:
        raise InvariantViolation(f"projection is not idempotent: drift {drift!r}")
    label = f.label if isinstance(f, FunctionSample) else ""
    return ProjectionResult(
        FunctionSample(pf, f"P({label})"),
        [(lim.label, lim.L) for lim in lims],
        [(lim.label, lim.L) for lim in again],
        drift,
        tol,
    )


@dataclass
class GluingReport:
    global_value: float
    rhs: float
    ratio: float

    def __iter__(self):
        return iter((self.global_value, self.rhs, self.ratio))

    def to_dict(self):
        return {
            "global": self.global_value,
            "rhs": self.rhs,
            "ratio": "+inf" if math.isinf(self.ratio) else self.ratio,
        }


def gluing_check(f, space: ExhaustedSpace, dec: EndDecomposition) -> GluingReport:
    """``max(core oscillation, per-end sharp norms) <= anisotropic sharp norm``, with the observed ratio."""
    rep = aniso_sharp_norm(f, space, dec)
    rhs = max([rep.core_osc] + [n for _, n, _, _ in rep.per_end])
    glob = rep.value
    if rhs > glob + 1e-9 * (1.0 + glob):
        raise InvariantViolation(f"gluing lower bound fails: {rhs!r} > {glob!r}")
    if rhs == 0.0:
        ratio = 1.0 if glob == 0.0 else math.inf
    else:
        ratio = glob / rhs
    return GluingReport(glob, float(rhs), float(ratio))
