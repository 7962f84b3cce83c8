"""Weighted sup functionals on sampled spaces.

Every functional here is a finite max/min over samples, so the quantities are
exact for the sample; the only iterative pieces are the minimax centre
(bisection plus pair refinement, see :mod:`tailrate.kernels`) and the
Luxemburg scaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import (
    DegenerateError,
    InputError,
    InvariantViolation,
    PreconditionError,
)
from .space import ExhaustedSpace, fit_coarse_affine
from .weights import Weight, YoungFunction, eval_weight

__all__ = [
    "DIVERGE_CAP",
    "FunctionSample",
    "NormReport",
    "TailLadder",
    "AsymptoticEstimate",
    "ShellPolicy",
    "Certificate",
    "SchurReport",
    "Kernel",
    "LqEmbedding",
    "PatchReport",
    "TruncationResult",
    "PullbackReport",
    "fixed_norm",
    "sharp_norm",
    "sharp_value",
    "tail_ladder",
    "asymptotic_constant",
    "patch_check",
    "certificate",
    "luxemburg_norm",
    "weighted_lq_norm",
    "schur_test",
    "moreau_envelope",
    "truncate_to_core",
    "pullback_check",
]

DIVERGE_CAP = 1e15
CONTACT_RTOL = 1e-9

CONVERGES = "Converges"
DIVERGES = "Diverges"
INCONCLUSIVE = "Inconclusive"


def _is_diverging(v, cap=DIVERGE_CAP):
    return not math.isfinite(v) or v > cap


@dataclass(frozen=True, eq=False)
class FunctionSample:
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise InputError(f"function sample {self.label!r} has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    def map(self, fn, label=None):
        return FunctionSample(fn(self.values), self.label if label is None else label)


def _values(f, space=None):
    v = f.values if isinstance(f, FunctionSample) else np.asarray(f, dtype=np.float64).ravel()
    if space is not None and v.size != len(space):
        raise InputError(f"function has {v.size} samples but the space has {len(space)}")
    return v


def _W(space, w):
    return np.asarray(eval_weight(w, space.h), dtype=np.float64)


@dataclass
class NormReport:
    value: float
    c_star: float
    contact_points: list
    weight_used: str
    centering: str  # "fixed" | "sharp"
    L: float | None = None
    cap: float = DIVERGE_CAP

    @property
    def diverging(self):
        return _is_diverging(self.value, self.cap)

    def signs(self):
        return {s for _, s, _ in self.contact_points}

    def to_dict(self, max_contacts=32):
        return {
            "value": "+inf" if self.diverging else self.value,
            "c_star": self.c_star,
            "centering": self.centering,
            "L": self.L,
            "weight": self.weight_used,
            "n_contacts": len(self.contact_points),
            "contacts": [
                {"id": int(i), "sign": int(s), "werr": e} for i, s, e in self.contact_points[:max_contacts]
            ],
        }


def _contacts(ids, W, f, c, value):
    err = W * np.abs(f - c)
    tol = CONTACT_RTOL * (1.0 + value) if math.isfinite(value) else 0.0
    idx = np.nonzero(err >= value - tol)[0]
    return [(int(ids[k]), int(np.sign(f[k] - c)), float(err[k])) for k in idx]


def sharp_value(W, f):
    """``(c*, min_c max W|f - c|)`` for raw weight and value arrays."""
    W = np.asarray(W, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if f.size == 0:
        return 0.0, 0.0
    c, v, _ = kernels.minimax_center(W, f)
    return c, v


def fixed_norm(f, space: ExhaustedSpace, w: Weight, L: float) -> NormReport:
    """``max phi(h) |f - L|`` with its argmax set."""
    fv = _values(f, space)
    W = _W(space, w)
    with np.errstate(over="ignore"):
        err = W * np.abs(fv - L)
    value = float(err.max())
    return NormReport(value, float(L), _contacts(space.ids, W, fv, L, value), w.spec(), "fixed", float(L))


def _sharp_report(ids, W, fv, desc):
    if fv.size == 0:
        raise InputError("sharp norm of an empty sample")
    c, v = sharp_value(W, fv)
    return NormReport(v, c, _contacts(ids, W, fv, c, v), desc, "sharp")


def sharp_norm(f, space: ExhaustedSpace, w: Weight) -> NormReport:
    """``min_c max phi(h) |f - c|``; contacts carry both signs whenever the value is positive."""
    fv = _values(f, space)
    return _sharp_report(space.ids, _W(space, w), fv, w.spec())


@dataclass
class TailLadder:
    ladder: list  # (R, T_R, loc_R)
    monotone_tail: bool
    limit_estimate: float
    cap: float = DIVERGE_CAP

    @property
    def diverging(self):
        return _is_diverging(self.limit_estimate, self.cap)

    def to_dict(self):
        return {
            "ladder": [{"R": R, "T": T, "loc": loc} for R, T, loc in self.ladder],
            "monotone_tail": self.monotone_tail,
            "limit_estimate": "+inf" if self.diverging else self.limit_estimate,
        }


def tail_ladder(f, space: ExhaustedSpace, w: Weight, ladder: Sequence[float]) -> TailLadder:
    """Tail values ``T_R`` (sharp on ``{h > R}``) and local values on ``{h <= R}``.

    ``monotone_tail`` reports whether the weighted error about the deepest
    tail centre is nonincreasing in ``h`` across the deepest tail.  It is a
    diagnostic only.
    """
    R = np.asarray(ladder, dtype=np.float64)
    if R.size == 0 or np.any(np.diff(R) <= 0):
        raise InputError("ladder must be strictly increasing")
    if R[0] != 0.0:
        raise InputError("ladder must start at R = 0")
    fv = _values(f, space)
    W = _W(space, w)
    h = space.h
    rows = []
    last_tail = None
    for r in R:
        tail = h > r
        T = sharp_value(W[tail], fv[tail])[1] if tail.any() else 0.0
        loc = sharp_value(W[~tail], fv[~tail])[1] if (~tail).any() else 0.0
        rows.append((float(r), float(T), float(loc)))
        if np.count_nonzero(tail) >= 2:
            last_tail = tail
    Ts = np.array([t for _, t, _ in rows])
    locs = np.array([l for _, _, l in rows])
    if np.any(np.diff(Ts) > 1e-12 * (1.0 + Ts[:-1])):
        raise InvariantViolation("tail functional increased along the ladder")
    if np.any(np.diff(locs) < -1e-12 * (1.0 + locs[1:])):
        raise InvariantViolation("local functional decreased along the ladder")
    monotone = True
    if last_tail is not None:
        c, _ = sharp_value(W[last_tail], fv[last_tail])
        order = np.argsort(h[last_tail], kind="stable")
        prof = (W[last_tail] * np.abs(fv[last_tail] - c))[order]
        monotone = bool(np.all(np.diff(prof) <= 1e-12 * (1.0 + prof[:-1])))
    nonempty = [t for (r, t, _) in rows if np.any(h > r)]
    limit = nonempty[-1] if nonempty else 0.0
    return TailLadder(rows, monotone, float(limit))


@dataclass(frozen=True)
class ShellPolicy:
    """Geometric shells ``R_k = r0 * rho**k`` up to ``max h``; ``r0`` defaults to ``max(1, min h)``."""

    r0: float | None = None
    rho: float = 2.0
    min_shells: int = 4
    cap: float = DIVERGE_CAP

    def boundaries(self, h):
        lo, hi = float(h.min()), float(h.max())
        r0 = self.r0 if self.r0 is not None else max(1.0, lo)
        if r0 <= 0 or self.rho <= 1:
            raise InputError("shell policy needs r0 > 0 and rho > 1")
        edges = [r0]
        while edges[-1] < hi:
            edges.append(edges[-1] * self.rho)
        edges[-1] = max(hi, edges[0]) if len(edges) > 1 else edges[-1]
        return edges


@dataclass
class AsymptoticEstimate:
    status: str
    value: float | None
    shells_used: int
    relative_drift: float
    shells: list = field(default_factory=list)  # (R_outer, sup)
    center: float | None = None

    @property
    def converges(self):
        return self.status == CONVERGES

    def to_dict(self):
        return {
            "status": self.status,
            "value": self.value,
            "shells_used": self.shells_used,
            "relative_drift": self.relative_drift,
            "center": self.center,
            "shells": [{"R": r, "sup": s} for r, s in self.shells],
        }


def _shell_masks(h, policy):
    edges = policy.boundaries(h)
    masks = [(h <= edges[0], float(edges[0]))]
    for a, b in zip(edges, edges[1:]):
        masks.append(((h > a) & (h <= b), float(b)))
    return [(m, b) for m, b in masks if m.any()]


def _classify_shells(sups, outers, cap):
    s = np.asarray(sups, dtype=np.float64)
    s1, s2, s3 = s[-3:]
    top = float(np.max(s[-3:]))
    drift = 0.0 if top == 0 else float((top - np.min(s[-3:])) / top)
    if not np.all(np.isfinite(s[-3:])) or s3 > cap:
        return DIVERGES, None, drift
    if top == 0.0:
        return CONVERGES, 0.0, 0.0
    eps = 1e-9 * top
    d1, d2 = s2 - s1, s3 - s2
    if d1 <= eps and d2 <= eps:
        return CONVERGES, float(s3), drift
    if d1 > eps and d2 > eps:
        if s2 >= 2 * s1 and s3 >= 2 * s2:
            return DIVERGES, None, drift
        # compare growth per unit of log-radius so a short final shell is not mistaken for contraction
        o = np.asarray(outers[-3:], dtype=np.float64)
        l1 = math.log((1 + o[1]) / (1 + o[0]))
        l2 = math.log((1 + o[2]) / (1 + o[1]))
        if l1 > 0 and l2 > 0 and d2 / l2 <= 0.75 * (d1 / l1):
            return CONVERGES, float(s3), drift
        return DIVERGES, None, drift
    if drift <= 0.05:
        return CONVERGES, float(s3), drift
    return INCONCLUSIVE, None, drift


def _asymptotic(W, fv, h, centering, policy):
    shells = _shell_masks(h, policy)
    if len(shells) < max(policy.min_shells, 3):
        raise InputError(
            f"only {len(shells)} nonempty shells; at least {max(policy.min_shells, 3)} are needed"
        )
    if centering == "sharp":
        # the centre minimising the deepest shell's sup
        deep = shells[-1][0]
        c, _ = sharp_value(W[deep], fv[deep])
    else:
        c = float(centering)
    with np.errstate(over="ignore"):
        err = W * np.abs(fv - c)
    sups = [float(err[m].max()) for m, _ in shells]
    outers = [float(h[m].max()) for m, _ in shells]
    status, value, drift = _classify_shells(sups, outers, policy.cap)
    return AsymptoticEstimate(status, value, len(shells), drift, list(zip(outers, sups)), float(c))


def asymptotic_constant(f, space: ExhaustedSpace, w: Weight, centering="sharp", shell_policy: ShellPolicy | None = None):
    """Estimate ``limsup phi(h)|f - c|`` from geometric shells.

    ``centering`` is ``"sharp"`` or a real limit ``L``.  The last three shell
    sups decide the status: nonincreasing means Converges; increasing with
    contracting increments (per unit of log-radius) means Converges, otherwise
    Diverges; mixed sequences Converge only when their relative drift is at
    most 5%.
    """
    policy = shell_policy or ShellPolicy()
    fv = _values(f, space)
    return _asymptotic(_W(space, w), fv, space.h, centering, policy)


@dataclass
class PatchReport:
    sharp: float
    patched: float
    gap: float
    sup_patched: float
    argmin_R: float

    def to_dict(self):
        return {
            "sharp": self.sharp,
            "patched": self.patched,
            "gap": self.gap,
            "sup_patched": self.sup_patched,
            "argmin_R": self.argmin_R,
        }

    def __iter__(self):
        return iter((self.sharp, self.patched, self.gap))


def patch_check(f, space: ExhaustedSpace, w: Weight, ladder) -> PatchReport:
    """Compare the sharp norm with ``min_R max{loc_R, T_R}`` over the ladder.

    Each ``max{loc_R, T_R}`` is at most the sharp norm (restrictions of the
    optimally centred error), so ``patched <= sharp`` is asserted.  The sup
    over the ladder equals the sharp norm once the ladder reaches ``max h``.
    """
    lad = tail_ladder(f, space, w, ladder)
    sharp = sharp_norm(f, space, w).value
    combined = [max(T, loc) for _, T, loc in lad.ladder]
    k = int(np.argmin(combined))
    patched = float(combined[k])
    tol = 1e-9 * (1.0 + sharp)
    if patched > sharp + tol or max(combined) > sharp + tol:
        raise InvariantViolation("a local/tail split exceeded the sharp norm")
    if lad.ladder[-1][0] >= space.max_h and abs(max(combined) - sharp) > tol:
        raise InvariantViolation("full-ladder patch does not reproduce the sharp norm")
    return PatchReport(sharp, patched, patched - sharp, float(max(combined)), lad.ladder[k][0])


@dataclass
class Certificate:
    atoms: list  # (id, signed mass)
    weighted_total_variation: float
    pairing_value: float
    sharp_value: float

    def to_dict(self):
        return {
            "atoms": [{"id": int(i), "mass": m} for i, m in self.atoms],
            "weighted_total_variation": self.weighted_total_variation,
            "pairing_value": self.pairing_value,
            "sharp_value": self.sharp_value,
        }


def certificate(f, space: ExhaustedSpace, w: Weight) -> Certificate:
    """Two-atom zero-mass measure of unit ``W^{-1}``-variation pairing to the sharp norm."""
    fv = _values(f, space)
    W = _W(space, w)
    rep = _sharp_report(space.ids, W, fv, w.spec())
    if rep.value == 0.0:
        return Certificate([], 0.0, 0.0, 0.0)
    pos = [(e, i) for i, s, e in rep.contact_points if s > 0]
    neg = [(e, i) for i, s, e in rep.contact_points if s < 0]
    if not pos or not neg:
        raise InvariantViolation("sharp minimiser has one-sided contact")
    index = {int(v): k for k, v in enumerate(space.ids)}
    a_pos = index[max(pos)[1]]
    a_neg = index[max(neg)[1]]
    t = 1.0 / (1.0 / W[a_pos] + 1.0 / W[a_neg])
    atoms = [(int(space.ids[a_pos]), float(t)), (int(space.ids[a_neg]), float(-t))]
    pairing = t * ((fv[a_pos] - rep.c_star) - (fv[a_neg] - rep.c_star))
    tv = t / W[a_pos] + t / W[a_neg]
    return Certificate(atoms, float(tv), float(pairing), rep.value)


def luxemburg_norm(f, space: ExhaustedSpace, phi: YoungFunction, w: Weight) -> float:
    """Smallest ``lam`` with ``inf_c sup Phi(W|f - c| / lam) <= 1``.

    Since ``Phi`` is increasing the inner inf-sup is ``Phi(sharp / lam)``; the
    scaling is bisected and cross-checked against ``sharp / Phi^{-1}(1)``.
    """
    S = sharp_norm(f, space, w).value
    inv = phi.inverse_at_one()
    if S == 0.0:
        return 0.0

    def feasible(lam):
        try:
            return float(phi(S / lam)) <= 1.0
        except Exception:
            return False

    hi = S
    while not feasible(hi):
        hi *= 2.0
    lo = hi / 2.0
    while feasible(lo):
        hi, lo = lo, lo / 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    closed = S / inv
    if abs(hi - closed) > 1e-7 * max(1.0, closed):
        raise InvariantViolation(f"Luxemburg bisection {hi!r} disagrees with closed form {closed!r}")
    return float(hi)


@dataclass
class LqEmbedding:
    p: float
    q: float
    gamma: float
    condition_holds: bool
    unweighted_norm: float
    fixed_norm: float
    constant: float
    bound_ok: bool
    partial_sums: list
    stabilizing: bool

    @property
    def ratio(self):
        denom = self.constant * self.fixed_norm
        return self.unweighted_norm / denom if denom > 0 else 0.0

    def to_dict(self):
        return {
            "p": self.p,
            "q": self.q,
            "gamma": self.gamma,
            "condition_holds": self.condition_holds,
            "unweighted_norm": self.unweighted_norm,
            "fixed_norm": self.fixed_norm,
            "constant": self.constant,
            "ratio": self.ratio,
            "bound_ok": self.bound_ok,
            "partial_sums": [{"extent": e, "sum": s} for e, s in self.partial_sums],
            "stabilizing": self.stabilizing,
        }


def _layer_sums(h, mu, pq, extents):
    layer = np.floor(np.maximum(h - 1e-12, 0.0)).astype(np.int64)  # A_R = {R < h <= R+1}, h = 0 in A_0
    terms = mu * np.power(1.0 + layer, -pq)
    return [float(terms[h <= e].sum()) for e in extents]


def weighted_lq_norm(f, space: ExhaustedSpace, w: Weight, L: float, q: float, growth=None):
    """``(sum (phi(h)|f - L|)^q mu)^(1/q)`` plus an optional embedding report.

    With a :class:`~tailrate.space.VolumeGrowthFit` and a polynomial weight the
    report bounds the unweighted ``L^q`` norm of ``f - L`` by the layered
    constant ``(sum_R mu(A_R) (1+R)^(-pq))^(1/q)`` times the fixed sup norm,
    and tracks the layered partial sums over doubling extents.
    """
    if not q >= 1:
        raise InputError("q must be >= 1")
    fv = _values(f, space)
    W = _W(space, w)
    mu = space.mu
    dev = np.abs(fv - L)
    norm = float(np.sum(np.power(W * dev, q) * mu) ** (1.0 / q))
    if growth is None:
        return norm, None
    if w.kind != "poly":
        raise InputError("the L^q embedding check needs a polynomial weight")
    p = w.p
    pq = p * q
    M = fixed_norm(fv, space, w, L).value
    plain = float(np.sum(np.power(dev, q) * mu) ** (1.0 / q))
    hmax = space.max_h
    extents = [hmax / 8, hmax / 4, hmax / 2, hmax]
    sums = _layer_sums(space.h, mu, pq, extents)
    C = sums[-1] ** (1.0 / q)
    ok = plain <= C * M * (1 + 1e-12) + 1e-12
    if not ok:
        raise InvariantViolation("unweighted L^q norm exceeds the layered bound")
    last_inc = sums[-1] - sums[-2]
    stabilizing = bool(sums[-1] > 0 and last_inc <= 0.05 * sums[-1])
    return norm, LqEmbedding(
        p=p,
        q=q,
        gamma=growth.gamma,
        condition_holds=bool(pq > growth.gamma),
        unweighted_norm=plain,
        fixed_norm=M,
        constant=C,
        bound_ok=ok,
        partial_sums=list(zip(extents, sums)),
        stabilizing=stabilizing,
    )


@dataclass(frozen=True, eq=False)
class Kernel:
    """Dense kernel; entry ``[x, y]`` is ``K(x, y)`` and ``(Tf)(x) = sum_y K(x,y) f(y) mu(y)``."""

    matrix: np.ndarray

    def __post_init__(self):
        K = np.array(self.matrix, dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise InputError("kernel must be a square matrix")
        if not np.all(np.isfinite(K)):
            raise InputError("kernel entries must be finite")
        if np.any(K < 0):
            i, j = np.argwhere(K < 0)[0]
            raise InputError(f"negative kernel entry at ({i}, {j})")
        K.setflags(write=False)
        object.__setattr__(self, "matrix", K)

    def apply(self, f, mu):
        return self.matrix @ (np.asarray(f) * mu)


@dataclass
class SchurReport:
    C1: float
    C2: float
    bounded: bool
    empirical_ratio: float
    row_normalized: bool

    def to_dict(self):
        return {
            "C1": self.C1,
            "C2": self.C2,
            "bounded": self.bounded,
            "empirical_ratio": self.empirical_ratio,
            "row_normalized": self.row_normalized,
        }


def schur_test(K: Kernel, space: ExhaustedSpace, w: Weight, probes) -> SchurReport:
    """Weighted Schur constants and the observed ``sharp(Tf) / sharp(f)``.

    ``empirical_ratio <= C1`` is asserted when every row integrates to one,
    which is what makes ``T`` fix constants.
    """
    n = len(space)
    if K.matrix.shape != (n, n):
        raise InputError("kernel is not aligned with the space")
    W = _W(space, w)
    mu = space.mu
    M = K.matrix
    C1 = float(np.max((M * (W[:, None] / W[None, :])) @ mu))
    C2 = float(np.max(mu @ M))
    row_mass = M @ mu
    normalized = bool(np.allclose(row_mass, 1.0, rtol=0, atol=1e-12))
    ratio = 0.0
    for probe in probes:
        fv = _values(probe, space)
        base = sharp_value(W, fv)[1]
        if base == 0.0:
            continue
        ratio = max(ratio, sharp_value(W, K.apply(fv, mu))[1] / base)
    if normalized and ratio > C1 + 1e-9:
        raise InvariantViolation(f"Schur ratio {ratio!r} exceeds C1 = {C1!r}")
    return SchurReport(C1, C2, bool(math.isfinite(C1) and math.isfinite(C2)), float(ratio), normalized)


def moreau_envelope(f, space: ExhaustedSpace, lam: float, dist=None) -> FunctionSample:
    """``min_y f(y) + d(x,y)^2 / (2 lam)`` by exhaustive scan."""
    if not lam > 0:
        raise InputError("lambda must be positive")
    fv = _values(f, space)
    if dist is not None:
        D = np.asarray(dist, dtype=np.float64)
        if D.shape != (fv.size, fv.size):
            raise InputError("distance matrix is not aligned with the space")
        out = kernels.moreau_dist(D, fv, float(lam))
    elif space.coords is not None:
        out = kernels.moreau_coords(space.coords, fv, float(lam))
    else:
        raise InputError("moreau envelope needs coordinates or a distance matrix")
    label = f.label if isinstance(f, FunctionSample) else ""
    return FunctionSample(np.minimum(out, fv), f"moreau({label},{lam:g})")


class TruncationResult(NamedTuple):
    g: FunctionSample
    c: float
    error_bound: float
    residual: float


def truncate_to_core(f, space: ExhaustedSpace, w: Weight, R0: float, R1: float) -> TruncationResult:
    """Blend ``f`` into its tail centre with a linear ramp in ``h`` between ``R0`` and ``R1``."""
    if not R1 > R0:
        raise InputError("need R1 > R0")
    fv = _values(f, space)
    h = space.h
    tail = h > R0
    if not tail.any():
        raise InputError(f"no samples with h > {R0}")
    W = _W(space, w)
    c, bound = sharp_value(W[tail], fv[tail])
    eta = np.clip((R1 - h) / (R1 - R0), 0.0, 1.0)
    g = eta * fv + (1.0 - eta) * c
    residual = sharp_value(W, fv - g)[1]
    if residual > bound + 1e-9:
        raise InvariantViolation("truncation error exceeds the tail functional")
    label = f.label if isinstance(f, FunctionSample) else ""
    return TruncationResult(FunctionSample(g, f"trunc({label})"), float(c), float(bound), float(residual))


@dataclass
class PullbackReport:
    lhs: float
    rhs_bound: float
    A0: float
    B0: float
    C: float

    def to_dict(self):
        return {"lhs": self.lhs, "rhs_bound": self.rhs_bound, "A0": self.A0, "B0": self.B0, "C": self.C}

    def __iter__(self):
        return iter((self.lhs, self.rhs_bound))


def pullback_check(f_on_B, space_B: ExhaustedSpace, space_A: ExhaustedSpace, map_indices, w: Weight, A0=None, B0=None):
    """Bound the sharp norm of ``f o phi`` on ``A`` by ``(1 + A0 + |B0|)^p`` times that of ``f`` on ``B``.

    ``A0 >= 1`` and ``B0`` must satisfy ``h_A <= A0 h_B(phi) + B0`` at every
    sample; unless given they are fitted from the sample cloud.
    """
    if w.kind != "poly":
        raise InputError("pullback bound is stated for polynomial weights")
    idx = np.asarray(map_indices, dtype=np.int64)
    if idx.shape != (len(space_A),):
        raise InputError("map_indices must give one index into B per point of A")
    if np.any(idx < 0) or np.any(idx >= len(space_B)):
        raise InputError("map_indices out of range")
    fB = _values(f_on_B, space_B)
    hA = space_A.h
    hBphi = space_B.h[idx]
    if A0 is None:
        try:
            A0 = max(1.0, fit_coarse_affine(hBphi, hA).A)
        except DegenerateError:
            A0 = 1.0
    if A0 < 1:
        raise PreconditionError("star condition needs A0 >= 1", witness={"A0": A0})
    if B0 is None:
        B0 = float(np.max(hA - A0 * hBphi))
    slack = hA - (A0 * hBphi + B0)
    bad = np.nonzero(slack > 1e-9 * (1.0 + np.abs(hA)))[0]
    if bad.size:
        k = int(bad[0])
        raise PreconditionError(
            f"star condition fails at point {int(space_A.ids[k])}: h_A = {hA[k]!r} > {A0!r} * {hBphi[k]!r} + {B0!r}",
            witness={"id": int(space_A.ids[k]), "h_A": float(hA[k]), "h_B_phi": float(hBphi[k])},
        )
    C = (1.0 + A0 + abs(B0)) ** w.p
    lhs = sharp_value(_W(space_A, w), fB[idx])[1]
    rhs = C * sharp_value(_W(space_B, w), fB)[1]
    if lhs > rhs + 1e-9:
        raise InvariantViolation("pullback bound violated")
    return PullbackReport(float(lhs), float(rhs), float(A0), float(B0), float(C))
