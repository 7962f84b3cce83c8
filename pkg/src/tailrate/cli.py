"""Command-line entry point.

Every subcommand builds a list of operations and runs them through the same
registry used by scenario files, so a CLI invocation can always be written
down as a scenario.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as tio
from . import multiend, norms, rates, space as tspace, weights
from .errors import ClassificationError, InputError, InvariantViolation, TailrateError

SCALE_RANGE = {"Algebraic": 1e3, "Exponential": 20.0, "LogPolynomial": 1e6}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


class Context:
    def __init__(self, space=None, f=None, weight=None, dec=None, graph=None, base_dir=None):
        self.space = space
        self.f = f
        self.weight = weight
        self.dec = dec
        self.graph = graph
        self.base_dir = base_dir or Path.cwd()
        self.warnings = []

    def need_f(self):
        if self.space is None or self.f is None:
            raise InputError("this operation needs sampled function values (--f with --grid, or --csv)")
        return self.f

    def need_weight(self, op):
        spec = op.get("weight")
        if spec:
            return weights.parse_weight(spec)
        if self.weight is None:
            raise InputError("this operation needs a weight (--weight)")
        return self.weight

    def need_dec(self):
        if self.dec is None:
            raise InputError("this operation needs a decomposition (--dec)")
        return self.dec


def _centering(value):
    if value is None:
        return 0.0
    if isinstance(value, str):
        if value.strip().lower() == "sharp":
            return "sharp"
        try:
            return float(value)
        except ValueError:
            raise InputError(f"--L must be a number or 'sharp', got {value!r}") from None
    return float(value)


def _default_ladder(space):
    top = space.max_h
    ladder = [0.0]
    r = 1.0
    while r < top:
        ladder.append(r)
        r *= 2.0
    if top > 0:
        ladder.append(top)
    return ladder


def _ladder(op, ctx):
    lad = op.get("ladder")
    if lad is None:
        return _default_ladder(ctx.space)
    return [float(v) for v in lad]


def _norm_payload(rep):
    d = rep.to_dict()
    return {
        "value": d["value"],
        "c_star": d["c_star"],
        "contacts": d["contacts"],
        "diagnostics": {"centering": d["centering"], "L": d["L"], "n_contacts": d["n_contacts"]},
    }


# operation registry

def op_fixed_norm(op, ctx):
    w = ctx.need_weight(op)
    L = _centering(op.get("L", 0.0))
    if L == "sharp":
        raise InputError("fixed_norm needs a numeric L")
    return tio.make_run("fixed_norm", _norm_payload(norms.fixed_norm(ctx.need_f(), ctx.space, w, L)), w)


def op_sharp_norm(op, ctx):
    w = ctx.need_weight(op)
    return tio.make_run("sharp_norm", _norm_payload(norms.sharp_norm(ctx.need_f(), ctx.space, w)), w)


def op_certificate(op, ctx):
    w = ctx.need_weight(op)
    cert = norms.certificate(ctx.need_f(), ctx.space, w)
    return tio.make_run("certificate", {"value": cert.sharp_value, "diagnostics": cert.to_dict()}, w)


def op_tail_ladder(op, ctx):
    w = ctx.need_weight(op)
    lad = norms.tail_ladder(ctx.need_f(), ctx.space, w, _ladder(op, ctx))
    d = lad.to_dict()
    return tio.make_run(
        "tail_ladder", {"ladder": d["ladder"], "value": d["limit_estimate"], "monotone_tail": d["monotone_tail"]}, w
    )


def op_asymptotic_constant(op, ctx):
    w = ctx.need_weight(op)
    est = norms.asymptotic_constant(ctx.need_f(), ctx.space, w, _centering(op.get("L", 0.0)))
    d = est.to_dict()
    return tio.make_run("asymptotic_constant", {"status": d.pop("status"), "value": d.pop("value"), "diagnostics": d}, w)


def op_patch_check(op, ctx):
    w = ctx.need_weight(op)
    lad = _ladder(op, ctx)
    if lad[-1] < ctx.space.max_h:
        lad.append(ctx.space.max_h)
    rep = norms.patch_check(ctx.need_f(), ctx.space, w, lad)
    return tio.make_run("patch_check", {"value": rep.sharp, "diagnostics": rep.to_dict()}, w)


def op_classify_rate(op, ctx):
    scale = op.get("scale")
    if not scale:
        raise InputError("classify_rate needs a scale (--scale alg|exp|logpoly)")
    name = rates._scale_name(scale)
    if ctx.space.max_h < SCALE_RANGE[name]:
        ctx.warnings.append(
            f"max h = {ctx.space.max_h:g} is short for the {name} scale (suggest >= {SCALE_RANGE[name]:g})"
        )
    res = rates.classify_rate(
        ctx.need_f(),
        ctx.space,
        scale,
        L=_centering(op.get("L", 0.0)),
        tol=float(op.get("tol", 0.01)),
        bracket=tuple(op.get("bracket", rates.DEFAULT_BRACKET)),
    )
    d = res.to_dict()
    payload = {
        "scale": d.pop("scale"),
        "critical": d.pop("critical"),
        "bracket": d.pop("bracket"),
        "constant": d.pop("constant"),
        "status": d.pop("outcome"),
        "diagnostics": d,
    }
    return tio.make_run("classify_rate", payload)


def op_p_profile(op, ctx):
    grid = op.get("p_grid") or [0.5 * k for k in range(9)]
    prof = rates.p_profile(ctx.need_f(), ctx.space, grid)
    d = prof.to_dict()
    return tio.make_run("p_profile", {"profile": d.pop("profile"), "diagnostics": d})


def op_luxemburg_norm(op, ctx):
    w = ctx.need_weight(op)
    phi = weights.parse_young(op.get("young", "power:e=1"))
    v = norms.luxemburg_norm(ctx.need_f(), ctx.space, phi, w)
    return tio.make_run("luxemburg_norm", {"value": v, "young": phi.spec()}, w)


def op_weighted_lq_norm(op, ctx):
    w = ctx.need_weight(op)
    growth = None
    if op.get("embedding", True):
        growth = tspace.fit_volume_growth(ctx.space, _volume_ladder(op, ctx))
    value, emb = norms.weighted_lq_norm(
        ctx.need_f(), ctx.space, w, float(op.get("L", 0.0)), float(op.get("q", 2.0)), growth
    )
    payload = {"value": value, "q": float(op.get("q", 2.0))}
    if emb is not None:
        payload["embedding"] = emb.to_dict()
    return tio.make_run("weighted_lq_norm", payload, w)


def _volume_ladder(op, ctx):
    lad = op.get("ladder")
    if lad is not None:
        return [float(v) for v in lad]
    top = ctx.space.max_h
    return list(np.linspace(top / 16, top, 16))


def op_fit_volume_growth(op, ctx):
    fit = tspace.fit_volume_growth(ctx.space, _volume_ladder(op, ctx))
    return tio.make_run("fit_volume_growth", {"value": fit.gamma, "diagnostics": fit.to_dict()})


def op_check_admissibility(op, ctx):
    w = ctx.need_weight(op)
    grid = _tgrid(op)
    rep = weights.check_admissibility(w, grid, op.get("cap"))
    return tio.make_run(
        "check_admissibility", {"status": "ok" if rep.ok else "violations", "value": rep.submult_constant_K, "diagnostics": rep.to_dict()}, w
    )


def op_check_young(op, ctx):
    phi = weights.parse_young(op.get("young", "power:e=1"))
    ok = weights.check_young(phi, _tgrid(op))
    return tio.make_run("check_young", {"status": "ok" if ok else "violations", "young": phi.spec(), "inverse_at_one": phi.inverse_at_one()})


def _tgrid(op):
    spec = op.get("tgrid", "0:50:101")
    a, b, n = _parse_grid(spec)[:3]
    return np.linspace(a, b, n)


def op_fit_coarse_affine(op, ctx):
    expr = op.get("h2")
    if not expr:
        raise InputError("coarse check needs a second exhaustion (--h2)")
    names = ("x", "y")[: ctx.space.coords.shape[1]] if ctx.space.coords is not None else ()
    if not names:
        raise InputError("coarse check needs a grid domain")
    from . import exprlang

    bind = {n: ctx.space.coords[:, k] for k, n in enumerate(names)}
    h2 = np.broadcast_to(exprlang.evaluate(exprlang.parse(expr, names), bind), ctx.space.h.shape)
    env = tspace.fit_coarse_affine(ctx.space.h, h2)
    payload = {"diagnostics": env.to_dict()}
    p = op.get("p")
    if p is not None:
        payload["diagnostics"]["M"] = env.norm_equivalence_constant(float(p))
    return tio.make_run("fit_coarse_affine", payload)


def op_schur_test(op, ctx):
    w = ctx.need_weight(op)
    n = len(ctx.space)
    order = np.argsort(ctx.space.h, kind="stable")
    K = np.zeros((n, n))
    mu = ctx.space.mu
    for r, i in enumerate(order):
        nb = order[max(r - 1, 0) : r + 2]
        K[i, nb] = 1.0 / (len(nb) * mu[nb])
    rng = np.random.default_rng(int(op.get("seed", 0)))
    probes = [rng.uniform(-1, 1, n) for _ in range(int(op.get("probes", 20)))]
    rep = norms.schur_test(norms.Kernel(K), ctx.space, w, probes)
    return tio.make_run("schur_test", {"value": rep.empirical_ratio, "diagnostics": rep.to_dict()}, w)


def op_pullback_check(op, ctx):
    w = ctx.need_weight(op)
    from . import exprlang

    if "map" not in op or "grid_b" not in op:
        raise InputError("pullback check needs --map and --grid-b")
    a, b, n, spacing = _parse_grid(op["grid_b"])
    xb = tio.grid_points({"from": a, "to": b, "count": n, "spacing": spacing})
    hb = np.asarray(exprlang.evaluate(exprlang.parse(op.get("h_b", "x")), {"x": xb}))
    space_b = tspace.ExhaustedSpace(np.broadcast_to(hb, xb.shape).copy(), coords=xb)
    if ctx.space.coords is None:
        raise InputError("pullback check needs a grid domain for A")
    xa = ctx.space.coords[:, 0]
    img = np.asarray(exprlang.evaluate(exprlang.parse(op["map"]), {"x": xa}))
    idx = np.searchsorted(xb, img)
    idx = np.clip(idx, 0, xb.size - 1)
    left = np.clip(idx - 1, 0, xb.size - 1)
    idx = np.where(np.abs(xb[left] - img) <= np.abs(xb[idx] - img), left, idx)
    f_expr = op.get("f_b")
    if not f_expr:
        raise InputError("pullback check needs f on B (--f)")
    fb = np.broadcast_to(exprlang.evaluate(exprlang.parse(f_expr), {"x": xb}), xb.shape)
    rep = norms.pullback_check(fb, space_b, ctx.space, idx, w, op.get("A0"), op.get("B0"))
    return tio.make_run("pullback_check", {"value": rep.lhs, "diagnostics": rep.to_dict()}, w)


def op_detect_graph_ends(op, ctx):
    if ctx.graph is None:
        raise InputError("ends detection needs a graph (--graph)")
    res = tspace.detect_graph_ends(ctx.graph, int(op.get("window", 3)))
    d = res.to_dict()
    return tio.make_run("detect_graph_ends", {"value": d["n_ends"], "status": "stable" if res.stable else "unstable", "diagnostics": d})


def op_block_weight(op, ctx):
    W = multiend.block_weight(ctx.need_dec(), ctx.space)
    return tio.make_run("block_weight", {"diagnostics": {"min": float(W.min()), "max": float(W.max()), "n": int(W.size)}})


def op_aniso_sharp_norm(op, ctx):
    rep = multiend.aniso_sharp_norm(ctx.need_f(), ctx.space, ctx.need_dec())
    d = rep.to_dict()
    return tio.make_run("aniso_sharp_norm", {"value": d.pop("value"), "c_star": d.pop("c_star"), "diagnostics": d})


def op_end_limits(op, ctx):
    lims = multiend.end_limits(ctx.need_f(), ctx.space, ctx.need_dec(), float(op.get("quantile", 0.9)))
    return tio.make_run("end_limits", {"diagnostics": {"ends": [lim.to_dict() for lim in lims]}})


def op_aniso_asymptotic(op, ctx):
    res = multiend.aniso_asymptotic(ctx.need_f(), ctx.space, ctx.need_dec())
    d = res.to_dict()
    return tio.make_run("aniso_asymptotic", {"status": d.pop("status"), "value": d.pop("value"), "c_star": d.pop("argmin_c"), "diagnostics": d})


def op_project_vanishing(op, ctx):
    res = multiend.project_vanishing(
        ctx.need_f(), ctx.space, ctx.need_dec(), tuple(op.get("ramp", (0.5, 0.9))), float(op.get("quantile", 0.9))
    )
    return tio.make_run("project_vanishing", {"diagnostics": res.to_dict()})


def op_gluing_check(op, ctx):
    rep = multiend.gluing_check(ctx.need_f(), ctx.space, ctx.need_dec())
    d = rep.to_dict()
    return tio.make_run("gluing_check", {"value": d["global"], "diagnostics": d})


def op_moreau_envelope(op, ctx):
    lam = float(op.get("lambda", 0.1))
    f = ctx.need_f()
    m = norms.moreau_envelope(f, ctx.space, lam)
    gap = float(np.max(f.values - m.values))
    return tio.make_run("moreau_envelope", {"value": gap, "lambda": lam})


def op_truncate_to_core(op, ctx):
    w = ctx.need_weight(op)
    res = norms.truncate_to_core(ctx.need_f(), ctx.space, w, float(op["R0"]), float(op["R1"]))
    return tio.make_run(
        "truncate_to_core", {"value": res.residual, "c_star": res.c, "error_bound": res.error_bound}, w
    )


OPERATIONS = {
    "fixed_norm": op_fixed_norm,
    "sharp_norm": op_sharp_norm,
    "certificate": op_certificate,
    "tail_ladder": op_tail_ladder,
    "asymptotic_constant": op_asymptotic_constant,
    "patch_check": op_patch_check,
    "classify_rate": op_classify_rate,
    "p_profile": op_p_profile,
    "luxemburg_norm": op_luxemburg_norm,
    "weighted_lq_norm": op_weighted_lq_norm,
    "fit_volume_growth": op_fit_volume_growth,
    "check_admissibility": op_check_admissibility,
    "check_young": op_check_young,
    "fit_coarse_affine": op_fit_coarse_affine,
    "schur_test": op_schur_test,
    "pullback_check": op_pullback_check,
    "detect_graph_ends": op_detect_graph_ends,
    "block_weight": op_block_weight,
    "aniso_sharp_norm": op_aniso_sharp_norm,
    "end_limits": op_end_limits,
    "aniso_asymptotic": op_aniso_asymptotic,
    "project_vanishing": op_project_vanishing,
    "gluing_check": op_gluing_check,
    "moreau_envelope": op_moreau_envelope,
    "truncate_to_core": op_truncate_to_core,
}


def execute(operations, ctx):
    runs = []
    for op in operations:
        name = op.get("op")
        if name not in OPERATIONS:
            raise InputError(f"unknown operation {name!r}")
        runs.append(OPERATIONS[name](op, ctx))
    return runs


# argument handling

def _parse_grid(text):
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("log", "linear")):
        raise InputError(f"--grid expects from:to:count[:log], got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InputError(f"--grid expects numbers in from:to:count, got {text!r}") from None
    return a, b, n, parts[3] if len(parts) == 4 else "linear"


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _source_flags(p, graph=False, grid_required=False):
    g = p.add_mutually_exclusive_group(required=grid_required)
    g.add_argument("--grid", help="from:to:count[:log]")
    g.add_argument("--csv", help="sample CSV (id,h,f[,x1..][,mu][,m][,end])")
    if graph:
        g.add_argument("--graph", help="graph file (edges, then '# levels')")
    p.add_argument("--f", dest="f_expr", help="f as an expression in x")
    p.add_argument("--h", dest="h_expr", help="exhaustion h as an expression in x")
    p.add_argument("--weight", help="weight spec, e.g. poly:p=2, exp:a=1, logpoly:p=0,q=1")
    p.add_argument("--mu", choices=["one", "spacing"], default="one", help="measure weights on grid domains")
    p.add_argument("--out", help="report path (default: stdout)")


def build_parser():
    parser = _Parser(prog="tailrate", description="Weighted sup norms and decay-rate classification on sampled spaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("norm", help="fixed and sharp norms")
    _source_flags(p)
    p.add_argument("--L", help="limit value for the fixed norm, or 'sharp'")
    p.add_argument("--certify", action="store_true", help="emit a dual certificate")
    p.add_argument("--tails", action="store_true", help="also estimate the asymptotic constant")
    p.add_argument("--ladder", help="R values for a tail ladder (R1,R2,...)")

    p = sub.add_parser("rate", help="classify the decay rate on a scale")
    _source_flags(p)
    p.add_argument("--scale", required=True, choices=["alg", "exp", "logpoly"])
    p.add_argument("--L", default="0", help="limit value, or 'sharp'")
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--p-grid", help="p values for the sharp-norm profile")

    p = sub.add_parser("tails", help="tail ladder, asymptotic constant and patch check")
    _source_flags(p)
    p.add_argument("--L", default="0", help="limit value, or 'sharp'")
    p.add_argument("--ladder", help="R values (must start at 0)")

    p = sub.add_parser("ends", help="count graph ends")
    p.add_argument("--graph", required=True)
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--out")

    p = sub.add_parser("aniso", help="anisotropic norms on a multi-end decomposition")
    _source_flags(p)
    p.add_argument("--dec", required=True, help="decomposition JSON")

    p = sub.add_parser("check", help="structural subchecks")
    p.add_argument("kind", choices=["admissibility", "young", "coarse", "schur", "pullback", "volume"])
    _source_flags(p)
    p.add_argument("--young", help="Young function spec, e.g. power:e=2 or expm1")
    p.add_argument("--tgrid", default="0:50:101", help="t-grid for weight checks")
    p.add_argument("--cap", type=float)
    p.add_argument("--h2", help="second exhaustion for the coarse check")
    p.add_argument("--p", type=float, help="weight exponent for the coarse norm-equivalence constant")
    p.add_argument("--ladder", help="volume ladder")
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--map", help="map phi: A -> B as an expression in x")
    p.add_argument("--grid-b", help="grid of B (from:to:count[:log])")
    p.add_argument("--h-b", default="x", help="exhaustion of B")

    p = sub.add_parser("run", help="execute a scenario file")
    p.add_argument("scenario")
    p.add_argument("--out")
    return parser


def _context_from_flags(args):
    grid = getattr(args, "grid", None)
    csv_path = getattr(args, "csv", None)
    graph_path = getattr(args, "graph", None)
    ctx = Context()
    if getattr(args, "weight", None):
        ctx.weight = weights.parse_weight(args.weight)
    if graph_path:
        ctx.graph = tio.load_graph(graph_path)
        return ctx
    if csv_path:
        if args.f_expr or args.h_expr:
            raise InputError("--f/--h cannot be combined with --csv")
        ctx.space, ctx.f = tio.load_csv(csv_path)
        return ctx
    if grid:
        if not args.h_expr:
            raise InputError("--grid needs --h")
        a, b, n, spacing = _parse_grid(grid)
        dom = {"grid": {"from": a, "to": b, "count": n, "spacing": spacing}}
        if args.mu == "spacing":
            dom["mu"] = "spacing"
        sc = tio.Scenario(domain=dom, f_expr=args.f_expr, h_expr=args.h_expr)
        ctx.space, ctx.f = tio.load_samples(sc)
    return ctx


def _ops_for(args):
    cmd = args.command
    if cmd == "norm":
        ops = []
        if args.L is not None and args.L.strip().lower() != "sharp":
            ops.append({"op": "fixed_norm", "L": float(_centering(args.L))})
        ops.append({"op": "sharp_norm"})
        if args.certify:
            ops.append({"op": "certificate"})
        if args.tails:
            ops.append({"op": "asymptotic_constant", "L": args.L if args.L is not None else "sharp"})
        if args.ladder:
            ops.append({"op": "tail_ladder", "ladder": _floats(args.ladder)})
        return ops
    if cmd == "rate":
        ops = [{"op": "classify_rate", "scale": args.scale, "L": args.L, "tol": args.tol}]
        prof = {"op": "p_profile"}
        if args.p_grid:
            prof["p_grid"] = _floats(args.p_grid)
        ops.append(prof)
        return ops
    if cmd == "tails":
        lad = {"ladder": _floats(args.ladder)} if args.ladder else {}
        return [
            {"op": "tail_ladder", **lad},
            {"op": "asymptotic_constant", "L": args.L},
            {"op": "patch_check", **lad},
        ]
    if cmd == "ends":
        return [{"op": "detect_graph_ends", "window": args.window}]
    if cmd == "aniso":
        return [{"op": name} for name in ("block_weight", "aniso_sharp_norm", "end_limits", "aniso_asymptotic", "project_vanishing", "gluing_check")]
    if cmd == "check":
        kind = args.kind
        if kind == "admissibility":
            return [{"op": "check_admissibility", "tgrid": args.tgrid, "cap": args.cap}]
        if kind == "young":
            return [{"op": "check_young", "young": args.young or "power:e=1", "tgrid": args.tgrid}]
        if kind == "coarse":
            return [{"op": "fit_coarse_affine", "h2": args.h2, "p": args.p}]
        if kind == "schur":
            return [{"op": "schur_test", "probes": args.probes, "seed": args.seed}]
        if kind == "volume":
            op = {"op": "fit_volume_growth"}
            if args.ladder:
                op["ladder"] = _floats(args.ladder)
            return [op]
        if kind == "pullback":
            return [{"op": "pullback_check", "map": args.map, "grid_b": args.grid_b, "h_b": args.h_b, "f_b": args.f_expr}]
    raise InputError(f"unknown command {cmd!r}")  # pragma: no cover


def _run(argv):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        sc = tio.load_scenario(args.scenario)
        ctx = Context(base_dir=sc.base_dir)
        if sc.weight:
            ctx.weight = weights.parse_weight(sc.weight)
        if "graph" in sc.domain:
            ctx.graph = tio.load_graph(sc.resolve(sc.domain["graph"]))
        else:
            ctx.space, ctx.f = tio.load_samples(sc)
            if sc.decomposition is not None:
                src = sc.decomposition
                ctx.dec = tio.load_decomposition(sc.resolve(src) if isinstance(src, str) else src, ctx.space)
        ops = sc.operations
        out = args.out or (str(sc.resolve(sc.output)) if sc.output else None)
    else:
        ctx = _context_from_flags(args)
        if args.command == "aniso":
            if ctx.space is None:
                raise InputError("aniso needs --grid or --csv")
            ctx.dec = tio.load_decomposition(args.dec, ctx.space)
        elif args.command not in ("ends",) and ctx.space is None and not (args.command == "check" and args.kind in ("admissibility", "young")):
            raise InputError("a sample source is required (--grid or --csv)")
        ops = _ops_for(args)
        out = args.out
    runs = execute(ops, ctx)
    text = tio.write_report(runs, out)
    for msg in ctx.warnings:
        print(f"tailrate: warning: {msg}", file=sys.stderr)
    if out is None:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    try:
        return _run(sys.argv[1:] if argv is None else argv)
    except InvariantViolation as exc:
        print(f"tailrate: invariant-violation: {_one_line(exc)}", file=sys.stderr)
        return 2
    except (InputError, ClassificationError) as exc:
        print(f"tailrate: input-error: {_one_line(exc)}", file=sys.stderr)
        return 1
    except TailrateError as exc:  # pragma: no cover
        print(f"tailrate: error: {_one_line(exc)}", file=sys.stderr)
        return 1


def _one_line(exc):
    return " ".join(str(exc).split())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
