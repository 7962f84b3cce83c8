"""Finite samples of exhausted spaces and the geometry fitted on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DegenerateError, InputError, InsufficientDataError

__all__ = [
    "ExhaustedSpace",
    "Graph",
    "AffineEnvelope",
    "VolumeGrowthFit",
    "EndsResult",
    "build_exhaustion_from_membership",
    "fit_coarse_affine",
    "detect_graph_ends",
    "fit_volume_growth",
]


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ExhaustedSpace:
    """Sampled space: per-point exhaustion value ``h`` plus optional metadata.

    Sublevel sets ``{h <= R}`` play the role of the exhaustion's small sets.
    """

    h: np.ndarray
    ids: np.ndarray | None = None
    coords: np.ndarray | None = None
    mu: np.ndarray | None = None
    membership: np.ndarray | None = None
    end_label: tuple | None = None

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64).ravel()
        n = h.size
        if n == 0:
            raise InputError("a space needs at least one point")
        if not np.all(np.isfinite(h)) or np.any(h < 0):
            raise InputError("exhaustion values must be finite and >= 0")
        ids = np.arange(n, dtype=np.int64) if self.ids is None else np.asarray(self.ids, dtype=np.int64)
        if ids.shape != (n,):
            raise InputError("ids must align with h")
        if np.unique(ids).size != n:
            raise InputError("point ids must be unique")
        mu = np.ones(n) if self.mu is None else np.asarray(self.mu, dtype=np.float64)
        if mu.shape != (n,) or np.any(mu < 0) or not np.all(np.isfinite(mu)):
            raise InputError("mu must be finite, nonnegative and aligned with h")
        coords = None
        if self.coords is not None:
            coords = np.asarray(self.coords, dtype=np.float64)
            if coords.ndim == 1:
                coords = coords[:, None]
            if coords.shape[0] != n:
                raise InputError("coords must have one row per point")
        membership = None
        if self.membership is not None:
            membership = np.asarray(self.membership)
            if membership.shape != (n,) or np.any(membership < 0):
                raise InputError("membership must be nonnegative and aligned with h")
            membership = membership.astype(np.int64)
            levels = np.unique(membership)
            per_level_min = np.array([h[membership == lv].min() for lv in levels])
            if np.any(np.diff(per_level_min) < 0):
                raise InputError("h must be nondecreasing across membership levels")
        labels = None
        if self.end_label is not None:
            labels = tuple(self.end_label)
            if len(labels) != n:
                raise InputError("end labels must align with h")
        object.__setattr__(self, "h", _frozen(h))
        object.__setattr__(self, "ids", _frozen(ids))
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "coords", None if coords is None else _frozen(coords))
        object.__setattr__(self, "membership", None if membership is None else _frozen(membership))
        object.__setattr__(self, "end_label", labels)

    def __len__(self):
        return self.h.size

    @property
    def max_h(self):
        return float(self.h.max())

    def sublevel(self, R):
        return self.h <= R

    def subset(self, mask):
        mask = np.asarray(mask)
        return ExhaustedSpace(
            h=self.h[mask],
            ids=self.ids[mask],
            coords=None if self.coords is None else self.coords[mask],
            mu=self.mu[mask],
            membership=None if self.membership is None else self.membership[mask],
            end_label=None
            if self.end_label is None
            else tuple(np.asarray(self.end_label, dtype=object)[mask].tolist()),
        )

    def with_h(self, h):
        return ExhaustedSpace(h=h, ids=self.ids, coords=self.coords, mu=self.mu, end_label=self.end_label)


def build_exhaustion_from_membership(memberships: Sequence[int], annulus_fraction=None) -> np.ndarray:
    """Discrete Urysohn sum ``h(x) = sum_n n * phi_n(x)``.

    ``phi_n(x)`` is 1 when ``m(x) >= n + 2``, the annulus fraction (default 1)
    when ``m(x) = n + 1`` and 0 when ``m(x) <= n``.  With the default fraction
    ``h = m(m-1)/2``.
    """
    m = np.asarray(memberships)
    if m.size and (np.any(m < 0) or not np.all(np.equal(np.mod(m, 1), 0))):
        raise InputError("memberships must be nonnegative integers")
    m = m.astype(np.float64)
    frac = np.ones_like(m) if annulus_fraction is None else np.asarray(annulus_fraction, dtype=np.float64)
    if frac.shape != m.shape:
        raise InputError("annulus_fraction must align with memberships")
    if np.any(frac < 0) or np.any(frac > 1):
        raise InputError("annulus_fraction must lie in [0, 1]")
    full = np.maximum(m - 2.0, 0.0) * np.maximum(m - 1.0, 0.0) / 2.0  # sum_{n <= m-2} n
    annulus = np.where(m >= 1, (m - 1.0) * frac, 0.0)
    return full + annulus


@dataclass(frozen=True)
class AffineEnvelope:
    a: float
    b: float
    A: float
    B: float
    tight: bool

    def lower(self, h):
        return self.a * np.asarray(h) - self.b

    def upper(self, h):
        return self.A * np.asarray(h) + self.B

    def norm_equivalence_constant(self, p):
        """``M`` with ``1/M <= ||.||_h' / ||.||_h <= M`` for the weight ``(1+t)^p``."""
        inv_b = abs(self.b) / self.a if self.a > 0 else np.inf
        return (1.0 + max(self.A, 1.0 / self.a) + max(abs(self.B), abs(self.b), inv_b)) ** p

    def to_dict(self):
        return {"a": self.a, "b": self.b, "A": self.A, "B": self.B, "tight": self.tight}


def _hull(points):
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts, pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower, upper


def fit_coarse_affine(h, h_prime) -> AffineEnvelope:
    """Fit ``a h - b <= h' <= A h + B`` on the sample cloud.

    The slope is the hull-edge slope of the thinnest vertical strip containing
    the cloud ``(h, h')``; the offsets are the tightest ones valid at every
    sample, so each bound is attained.
    """
    u = np.asarray(h, dtype=np.float64).ravel()
    v = np.asarray(h_prime, dtype=np.float64).ravel()
    if u.shape != v.shape or u.size == 0:
        raise InputError("h and h' must be aligned and nonempty")
    if np.unique(u).size < 2:
        raise DegenerateError("need at least 2 distinct h values to fit an affine envelope")
    lower, upper = _hull(np.column_stack([u, v]))
    slopes = set()
    for chain in (lower, upper):
        for (x0, y0), (x1, y1) in zip(chain, chain[1:]):
            if x1 != x0:
                slopes.add((y1 - y0) / (x1 - x0))
    slopes = sorted(s for s in slopes if s > 0)
    if not slopes:
        raise DegenerateError("no positive-slope envelope: h' does not grow with h")
    best = None
    for s in slopes:
        B = float(np.max(v - s * u))
        b = float(np.max(s * u - v))
        width = B + b
        if best is None or width < best[0] - 1e-15 * max(1.0, abs(best[0])):
            best = (width, s, B, b)
    _, s, B, b = best
    up_gap = np.min(s * u + B - v)
    lo_gap = np.min(v - (s * u - b))
    tight = bool(abs(up_gap) <= 1e-9 * max(1.0, abs(B)) and abs(lo_gap) <= 1e-9 * max(1.0, abs(b)))
    return AffineEnvelope(a=float(s), b=b, A=float(s), B=B, tight=tight)


@dataclass(frozen=True)
class VolumeGrowthFit:
    gamma: float
    c_fit: float
    residual: float
    R_range: tuple
    ladder: tuple = ()
    volumes: tuple = ()

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "c_fit": self.c_fit,
            "residual": self.residual,
            "R_range": list(self.R_range),
        }


def fit_volume_growth(space: ExhaustedSpace, ladder) -> VolumeGrowthFit:
    """Fit ``V(R) = mu({h <= R}) <= c (1+R)^gamma``.

    ``gamma`` is the least-squares slope of ``log V`` against ``log(1+R)`` over
    the upper half of the ladder; ``c`` is the smallest constant making the
    bound hold at every ladder point.
    """
    R = np.asarray(ladder, dtype=np.float64)
    if R.size < 4 or np.any(np.diff(R) <= 0):
        raise InputError("volume ladder must be increasing with at least 4 points")
    if not np.any(space.mu > 0):
        raise DegenerateError("all measure weights are zero")
    order = np.argsort(space.h, kind="stable")
    cum = np.cumsum(space.mu[order])
    idx = np.searchsorted(space.h[order], R, side="right")
    V = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    pos = V > 0
    if np.unique(V[pos]).size < 4:
        raise DegenerateError("fewer than 4 distinct nonzero volumes along the ladder")
    Rp, Vp = R[pos], V[pos]
    half = Rp.size // 2
    x = np.log1p(Rp[half:])
    y = np.log(Vp[half:])
    if np.ptp(x) == 0:
        raise DegenerateError("upper ladder half is a single radius")
    slope, icpt = np.polyfit(x, y, 1)
    gamma = max(float(slope), 0.0)
    resid = y - (slope * x + icpt)
    c_fit = float(np.max(Vp / np.power(1.0 + Rp, gamma)))
    return VolumeGrowthFit(
        gamma=gamma,
        c_fit=c_fit,
        residual=float(np.sqrt(np.mean(resid**2))),
        R_range=(float(R[0]), float(R[-1])),
        ladder=tuple(R.tolist()),
        volumes=tuple(V.tolist()),
    )


@dataclass
class Graph:
    """Undirected graph with a membership level per vertex."""

    vertices: list
    adjacency: dict
    membership: dict

    def __post_init__(self):
        for v in self.vertices:
            if v not in self.membership:
                raise InputError(f"vertex {v} has no membership level")
            for u in self.adjacency.get(v, ()):
                if v not in self.adjacency.get(u, ()):
                    raise InputError(f"adjacency is not symmetric at edge ({v}, {u})")
        levels = sorted(set(self.membership[v] for v in self.vertices))
        if levels and levels != list(range(levels[-1] + 1)):
            raise InputError("membership levels must be contiguous from 0")

    @classmethod
    def from_edges(cls, edges, membership):
        adjacency: dict = {v: [] for v in membership}
        for a, b in edges:
            if a == b:
                continue
            for x in (a, b):
                if x not in adjacency:
                    raise InputError(f"edge endpoint {x} has no membership level")
            if b not in adjacency[a]:
                adjacency[a].append(b)
                adjacency[b].append(a)
        return cls(sorted(membership), adjacency, dict(membership))

    def edge_arrays(self):
        index = {v: k for k, v in enumerate(self.vertices)}
        eu, ev = [], []
        for v in self.vertices:
            for u in self.adjacency.get(v, ()):
                if index[v] < index[u]:
                    eu.append(index[v])
                    ev.append(index[u])
        return np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64)

    @property
    def max_level(self):
        return max(self.membership.values())


@dataclass
class EndsResult:
    assignment: dict
    n_ends: int
    stability_depth: int
    stable: bool
    cutoff: int
    component_counts: list = field(default_factory=list)
    transient: list = field(default_factory=list)

    def to_dict(self):
        return {
            "n_ends": self.n_ends,
            "stability_depth": self.stability_depth,
            "stable": self.stable,
            "cutoff": self.cutoff,
            "component_counts": list(self.component_counts),
            "assignment": {str(k): v for k, v in sorted(self.assignment.items())},
            "transient": list(self.transient),
        }


def detect_graph_ends(g: Graph, stability_window: int = 3) -> EndsResult:
    """Count ends as component chains of ``{m > n}`` persisting to the top level.

    Components at the reference level ``N - window`` that still have a
    descendant at level ``N - 1`` are the ends; vertices in components that die
    out before the top are listed as transient.
    """
    if stability_window < 1:
        raise InputError("stability window must be positive")
    N = g.max_level
    cutoff = N - stability_window
    if cutoff < 0:
        raise InsufficientDataError(
            f"insufficient depth: max level {N} is below the stability window {stability_window}"
        )
    verts = g.vertices
    m = np.array([g.membership[v] for v in verts], dtype=np.int64)
    if not np.any(m > cutoff):
        raise InsufficientDataError("insufficient depth: no vertex beyond the cutoff level")
    eu, ev = g.edge_arrays()
    n = len(verts)
    labels = {lv: kernels.components(n, eu, ev, (m > lv).astype(np.uint8)) for lv in range(N)}
    counts = [int(labels[lv].max()) + 1 if np.any(labels[lv] >= 0) else 0 for lv in range(N)]

    def parent_map(lv):
        # component at lv+1 -> containing component at lv
        child, par = labels[lv + 1], labels[lv]
        sel = child >= 0
        return dict(zip(child[sel].tolist(), par[sel].tolist()))

    depth = 1
    for lv in range(N - 2, -1, -1):
        pm = parent_map(lv)
        if counts[lv] == counts[lv + 1] and len(set(pm.values())) == len(pm) == counts[lv]:
            depth += 1
        else:
            break

    # which reference-level components reach the top level
    alive = set(labels[N - 1][labels[N - 1] >= 0].tolist())
    for lv in range(N - 2, cutoff - 1, -1):
        pm = parent_map(lv)
        alive = {pm[c] for c in alive}
    ends = sorted(alive)
    end_index = {c: k for k, c in enumerate(ends)}
    assignment, transient = {}, []
    ref = labels[cutoff]
    for k, v in enumerate(verts):
        if m[k] > cutoff:
            comp = int(ref[k])
            if comp in end_index:
                assignment[v] = end_index[comp]
            else:
                transient.append(v)
    return EndsResult(
        assignment=assignment,
        n_ends=len(ends),
        stability_depth=depth,
        stable=depth >= stability_window,
        cutoff=cutoff,
        component_counts=counts,
        transient=transient,
    )
