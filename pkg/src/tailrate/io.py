"""Sample, graph and scenario loaders; JSON v1 reports and plot-ready CSVs."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import exprlang
from .errors import InputError
from .multiend import End, EndDecomposition
from .norms import FunctionSample
from .space import ExhaustedSpace, Graph
from .weights import parse_weight

__all__ = [
    "REPORT_VERSION",
    "RUN_FIELDS",
    "Scenario",
    "load_csv",
    "dump_csv",
    "load_graph",
    "load_decomposition",
    "load_scenario",
    "load_samples",
    "make_run",
    "dumps",
    "write_report",
]

REPORT_VERSION = "1"
RUN_FIELDS = (
    "op",
    "weight",
    "value",
    "c_star",
    "contacts",
    "ladder",
    "profile",
    "status",
    "scale",
    "critical",
    "bracket",
    "constant",
    "csv",
    "diagnostics",
)


# sample CSV

def _num(text, row, col):
    try:
        return float(text)
    except ValueError:
        raise InputError(f"non-numeric cell {text!r} at row {row}, column {col!r}") from None


def load_csv(path) -> tuple[ExhaustedSpace, FunctionSample]:
    """Read ``id,h,f[,x1..xd][,mu][,m][,end]``; row order is preserved."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        for col in ("id", "h", "f"):
            if col not in header:
                raise InputError(f"{path}: missing required column {col!r}")
        known = {"id", "h", "f", "mu", "m", "end"}
        coord_cols = sorted(
            (c for c in header if c.startswith("x") and c[1:].isdigit()), key=lambda c: int(c[1:])
        )
        extra = [c for c in header if c not in known and c not in coord_cols]
        if extra:
            raise InputError(f"{path}: unknown column(s) {extra}")
        pos = {c: k for k, c in enumerate(header)}
        ids, h, f, mu, m, end, xs = [], [], [], [], [], [], []
        for r, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
            cell = lambda c: row[pos[c]].strip()  # noqa: E731
            idv = _num(cell("id"), r, "id")
            if not idv.is_integer():
                raise InputError(f"{path}: id must be an integer at row {r}")
            ids.append(int(idv))
            h.append(_num(cell("h"), r, "h"))
            f.append(_num(cell("f"), r, "f"))
            if "mu" in pos:
                mu.append(_num(cell("mu"), r, "mu"))
            if "m" in pos:
                mv = _num(cell("m"), r, "m")
                if not mv.is_integer():
                    raise InputError(f"{path}: membership must be an integer at row {r}")
                m.append(int(mv))
            if "end" in pos:
                end.append(cell("end"))
            if coord_cols:
                xs.append([_num(cell(c), r, c) for c in coord_cols])
    if not ids:
        raise InputError(f"{path}: no data rows")
    space = ExhaustedSpace(
        h=np.array(h),
        ids=np.array(ids),
        coords=np.array(xs) if coord_cols else None,
        mu=np.array(mu) if mu else None,
        membership=np.array(m) if m else None,
        end_label=tuple(end) if end else None,
    )
    return space, FunctionSample(np.array(f), path.stem)


def _g17(v):
    return format(float(v), ".17g")


def dump_csv(space: ExhaustedSpace, f: FunctionSample, path) -> None:
    header = ["id", "h", "f"]
    d = 0 if space.coords is None else space.coords.shape[1]
    header += [f"x{k + 1}" for k in range(d)]
    header.append("mu")
    if space.membership is not None:
        header.append("m")
    if space.end_label is not None:
        header.append("end")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(space)):
            row = [str(int(space.ids[k])), _g17(space.h[k]), _g17(f.values[k])]
            if d:
                row += [_g17(v) for v in space.coords[k]]
            row.append(_g17(space.mu[k]))
            if space.membership is not None:
                row.append(str(int(space.membership[k])))
            if space.end_label is not None:
                row.append(space.end_label[k])
            w.writerow(row)


# graph files

def load_graph(path) -> Graph:
    """Edge lines ``u v``, then a ``# levels`` section of ``id m`` lines."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    edges, levels = [], {}
    section = "edges"
    for n, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.lstrip("#").strip().lower() == "levels":
                section = "levels"
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"{path}: line {n} should have two integers")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputError(f"{path}: non-integer token on line {n}") from None
        if section == "edges":
            edges.append((a, b))
        else:
            if b < 0:
                raise InputError(f"{path}: negative level on line {n}")
            levels[a] = b
    if not levels:
        raise InputError(f"{path}: missing '# levels' section")
    return Graph.from_edges(edges, levels)


# decompositions

def _interval_mask(x, interval):
    lo, hi = (_bound(v) for v in interval)
    return (x > lo) & (x < hi)


def _bound(v):
    if v is None:
        return math.inf
    if isinstance(v, str):
        try:
            return float(v.replace("∞", "inf"))
        except ValueError:
            raise InputError(f"bad interval bound {v!r}") from None
    return float(v)


def load_decomposition(source, space: ExhaustedSpace | None = None, base_dir=None) -> EndDecomposition:
    """Explicit ``{"core": [...], "ends": [{"label", "ids", "h", "weight"}]}`` or
    the expression form ``{"ends": [{"label", "interval": [lo, hi], "h_expr", "weight"}]}``.

    In the expression form each end is the open interval ``lo < x < hi`` and
    the core is every remaining point; it needs a space with coordinates.
    """
    if isinstance(source, (str, os.PathLike)):
        p = Path(source)
        if base_dir is not None and not p.is_absolute():
            p = Path(base_dir) / p
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read decomposition {p}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"decomposition {p} is not valid JSON: {exc.msg}") from None
    else:
        data = source
    if not isinstance(data, dict) or "ends" not in data:
        raise InputError("decomposition needs an 'ends' list")
    ends = []
    if any("interval" in e for e in data["ends"]):
        if space is None or space.coords is None:
            raise InputError("interval decompositions need a space with coordinates")
        x = space.coords[:, 0]
        taken = np.zeros(len(space), dtype=bool)
        names = ("x", "y")[: space.coords.shape[1]] if space.coords.shape[1] <= 2 else ("x",)
        for e in data["ends"]:
            mask = _interval_mask(x, e["interval"])
            if (mask & taken).any():
                raise InputError(f"end {e.get('label')!r} overlaps another end")
            taken |= mask
            expr = exprlang.parse(e["h_expr"], names)
            bind = {n: space.coords[mask, k] for k, n in enumerate(names)}
            h = np.asarray(exprlang.evaluate(expr, bind), dtype=np.float64)
            ends.append(End(str(e["label"]), space.ids[mask], np.maximum(h, 0.0), parse_weight(e["weight"])))
        return EndDecomposition(space.ids[~taken], ends)
    for e in data["ends"]:
        for key in ("label", "ids", "h", "weight"):
            if key not in e:
                raise InputError(f"decomposition end is missing {key!r}")
        ends.append(End(str(e["label"]), e["ids"], e["h"], parse_weight(e["weight"])))
    return EndDecomposition(data.get("core", []), ends)


# scenarios

@dataclass
class Scenario:
    domain: dict
    f_expr: str | None = None
    h_expr: str | None = None
    weight: str | None = None
    decomposition: object = None
    operations: list = field(default_factory=list)
    output: str | None = None
    base_dir: Path = field(default_factory=Path.cwd)

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p


def _scenario_from_dict(data, base_dir):
    if not isinstance(data, dict) or "domain" not in data:
        raise InputError("scenario needs a 'domain'")
    dom = data["domain"]
    sources = [k for k in ("grid", "grids", "csv", "graph") if k in dom]
    if len(sources) != 1:
        raise InputError("scenario domain needs exactly one of grid, grids, csv or graph")
    if "csv" in dom and (data.get("f_expr") or data.get("h_expr")):
        raise InputError("f and h come from the CSV; drop f_expr/h_expr")
    if sources[0] in ("grid", "grids") and not data.get("h_expr"):
        raise InputError("grid scenarios need h_expr")
    sc = Scenario(
        domain=dom,
        f_expr=data.get("f_expr"),
        h_expr=data.get("h_expr"),
        weight=data.get("weight"),
        decomposition=data.get("decomposition"),
        operations=list(data.get("operations", [])),
        output=data.get("output"),
        base_dir=Path(base_dir),
    )
    for key in ("csv", "graph"):
        if key in dom and not sc.resolve(dom[key]).exists():
            raise InputError(f"scenario {key} file {dom[key]!r} does not exist")
    if isinstance(sc.decomposition, str) and not sc.resolve(sc.decomposition).exists():
        raise InputError(f"decomposition file {sc.decomposition!r} does not exist")
    return sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read scenario {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"scenario {path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    return _scenario_from_dict(data, path.parent)


def grid_points(spec) -> np.ndarray:
    """``{from, to, count, spacing: linear|log, negate?}``."""
    try:
        a, b, n = float(spec["from"]), float(spec["to"]), int(spec["count"])
    except (KeyError, TypeError, ValueError):
        raise InputError("grid needs numeric 'from', 'to' and integer 'count'") from None
    if n < 1:
        raise InputError("grid count must be positive")
    spacing = spec.get("spacing", "linear")
    if spacing == "linear":
        x = np.linspace(a, b, n)
    elif spacing == "log":
        if a <= 0 or b <= 0:
            raise InputError("log spacing needs from > 0 and to > 0")
        x = np.geomspace(a, b, n)
    else:
        raise InputError(f"unknown grid spacing {spacing!r}")
    return -x if spec.get("negate") else x


def load_samples(source) -> tuple[ExhaustedSpace, FunctionSample | None]:
    """Build the space and ``f`` from a scenario (object or path) or a CSV path."""
    if isinstance(source, (str, os.PathLike)):
        p = Path(source)
        if p.suffix.lower() == ".csv":
            return load_csv(p)
        source = load_scenario(p)
    sc = source
    dom = sc.domain
    if "csv" in dom:
        return load_csv(sc.resolve(dom["csv"]))
    if "graph" in dom:
        raise InputError("graph scenarios carry no function samples")
    if "grid" in dom:
        x = grid_points(dom["grid"])
    else:
        x = np.concatenate([grid_points(g) for g in dom["grids"]])
    if "y" in dom:
        y = grid_points(dom["y"])
        X, Y = np.meshgrid(x, y, indexing="ij")
        coords = np.column_stack([X.ravel(), Y.ravel()])
        names = ("x", "y")
    else:
        coords = x[:, None]
        names = ("x",)
    bind = {n: coords[:, k] for k, n in enumerate(names)}
    h = np.asarray(exprlang.evaluate(exprlang.parse(sc.h_expr, names), bind), dtype=np.float64)
    h = np.broadcast_to(h, (coords.shape[0],)).copy()
    if np.any(h < 0):
        raise InputError("h_expr produced negative values")
    mu = None
    if dom.get("mu") == "spacing":
        mu = np.gradient(coords[:, 0]) if coords.shape[1] == 1 else None
    space = ExhaustedSpace(h=h, coords=coords, mu=None if mu is None else np.abs(mu))
    f = None
    if sc.f_expr:
        fv = exprlang.evaluate(exprlang.parse(sc.f_expr, names), bind)
        f = FunctionSample(np.broadcast_to(fv, (coords.shape[0],)).copy(), "f")
    return space, f


# reports

def make_run(op: str, payload: dict, weight=None) -> dict:
    """Place known fields at top level and everything else under ``diagnostics``."""
    run = {"op": op}
    if weight is not None:
        run["weight"] = str(weight)
    diag = dict(payload.pop("diagnostics", {}) or {})
    for k, v in payload.items():
        if k in RUN_FIELDS:
            run[k] = v
        else:
            diag[k] = v
    if diag:
        run["diagnostics"] = diag
    return run


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return '"nan"'
        if math.isinf(obj):
            return '"+inf"' if obj > 0 else '"-inf"'
        text = format(obj, ".17g")
        if not any(ch in text for ch in ".en"):
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            pad + json.dumps(k, ensure_ascii=False) + ": " + _encode(obj[k], indent, level + 1) for k in sorted(obj)
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, non-finite floats as strings."""
    return _encode(_plain(obj), indent, 0) + "\n"


def _sibling_csvs(runs, path):
    stem = path.with_suffix("")
    for k, run in enumerate(runs):
        for key in ("ladder", "profile"):
            rows = run.get(key)
            if not rows:
                continue
            out = Path(f"{stem}.{k}.{run['op']}.csv")
            cols = list(rows[0].keys())
            with open(out, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for row in rows:
                    w.writerow([_cell(row[c]) for c in cols])
            run["csv"] = out.name


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "+inf" if math.isinf(v) and v > 0 else format(float(v), ".17g")
    return str(v)


def write_report(reports, path) -> str:
    """Write ``{"version": "1", "runs": [...]}`` plus a sibling CSV per ladder/profile."""
    runs = [_plain(r) for r in reports]
    path = Path(path) if path is not None else None
    if path is not None:
        if not path.parent.exists():
            raise InputError(f"cannot write report: directory {path.parent} does not exist")
        _sibling_csvs(runs, path)
    text = dumps({"version": REPORT_VERSION, "runs": runs})
    if path is not None:
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write report {path}: {exc.strerror}") from None
    return text
