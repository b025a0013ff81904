"""File formats: space JSON, per-point CSV tables and report files.

Every writer goes through :func:`atomic_write`, so readers never see a
partially written file.
"""
import csv
import io
import json
import os
import tempfile

import numpy as np

from .exceptions import InvalidArgumentError
from .hamiltonian import PowerForm, Tabulated
from .report import CheckReport
from .space import (
    MetricSpace,
    build_graph,
    build_grid_1d,
    build_grid_2d,
    build_heisenberg_grid,
)

_GENERATORS = {
    "grid1d": lambda p: build_grid_1d(p["a"], p["b"], p["n"]),
    "grid2d": lambda p: build_grid_2d(p["a"], p["b"], p["n"]),
    "heisenberg_grid": lambda p: build_heisenberg_grid(p["levels"], p["step"]),
}


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and a rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(x):
    # repr gives the shortest string that round-trips
    return repr(float(x))


def space_to_dict(space):
    points = []
    for i in range(space.n_points):
        rec = {"id": i}
        if space.coords is not None:
            rec["coords"] = [float(c) for c in space.coords[i]]
        points.append(rec)
    if space.kind in ("graph", "heisenberg_grid"):
        src, dst = space.edges[:, 0], space.edges[:, 1]
        metric = {"type": "graph",
                  "edges": [[int(i), int(j), float(space.dist[i, j])]
                            for i, j in zip(src, dst)]}
    else:
        metric = {"type": "matrix", "data": space.dist.tolist()}
    out = {"kind": space.kind, "points": points, "metric": metric,
           "geo_tol": float(space.geo_tol), "geodesic": bool(space.geodesic),
           "approximate": bool(space.approximate), "params": space.params}
    if space.edge_index is not None and metric["type"] == "matrix":
        out["edges"] = space.edge_index.tolist()
    return out


def space_from_dict(data):
    """Rebuild a space from its JSON document.

    Generated kinds with recorded parameters are regenerated, which keeps
    the floating-point distances bit-identical; a stored distance matrix
    must then agree with the regenerated one.
    """
    try:
        kind = data["kind"]
        metric = data["metric"]
        points = data["points"]
    except KeyError as exc:
        raise InvalidArgumentError(f"space file lacks field {exc}") from None
    params = data.get("params") or {}
    if kind in _GENERATORS and params:
        space = _GENERATORS[kind](params)
        mismatch = len(points) != space.n_points
        if not mismatch and metric.get("type") == "matrix":
            mismatch = not np.allclose(metric["data"], space.dist, rtol=1e-12, atol=0)
        if mismatch:
            raise InvalidArgumentError("space file does not match its generator parameters")
        return space
    n = len(points)
    coords = None
    if points and all("coords" in p for p in points):
        coords = np.array([p["coords"] for p in points], dtype=float)
    if metric.get("type") == "graph":
        g = build_graph(n, metric["edges"])
        return MetricSpace(g.dist, kind=kind, coords=coords, edge_index=g.edge_index,
                           geo_tol=float(data.get("geo_tol", 0.0)), geodesic=True,
                           approximate=bool(data.get("approximate", False)),
                           params=params or g.params)
    if metric.get("type") == "matrix":
        return MetricSpace(np.array(metric["data"], dtype=float), kind=kind, coords=coords,
                           edge_index=data.get("edges"),
                           geo_tol=float(data.get("geo_tol", 0.0)),
                           geodesic=bool(data.get("geodesic", False)),
                           approximate=bool(data.get("approximate", False)),
                           params=params)
    raise InvalidArgumentError(f"unknown metric type {metric.get('type')!r}")


def save_space(space, path):
    atomic_write(path, json.dumps(space_to_dict(space), sort_keys=True) + "\n")


def load_space(path):
    with open(path, encoding="utf-8") as fh:
        return space_from_dict(json.load(fh))


def _table(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_table(path, header):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [h.strip() for h in rows[0]] != list(header):
        raise InvalidArgumentError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def field_to_csv(values):
    return _table(["point_id", "value"], [[i, _num(v)] for i, v in enumerate(values)])


def save_field(values, path):
    """Per-point values as ``point_id,value`` CSV."""
    atomic_write(path, field_to_csv(np.asarray(values, dtype=float)))


def load_field(path, n=None):
    """Read a ``point_id,value`` CSV; ids must be exactly ``0 .. n-1``."""
    rows = _read_table(path, ("point_id", "value"))
    ids = np.array([int(r[0]) for r in rows])
    values = np.array([float(r[1]) for r in rows])
    out = np.empty(len(rows))
    if sorted(ids.tolist()) != list(range(len(rows))):
        raise InvalidArgumentError(f"{path}: point ids must be 0..{len(rows) - 1}")
    out[ids] = values
    if n is not None and out.size != n:
        raise InvalidArgumentError(f"{path}: {out.size} values for a space of {n} points")
    return out


def save_hopf_lax(result, path):
    rows = [[i, _num(u), int(a)] for i, (u, a) in enumerate(zip(result.u, result.argmin))]
    atomic_write(path, _table(["point_id", "u", "argmin_id"], rows))


def save_plan(plan, path, threshold=0.0):
    """Nonzero entries of a coupling as ``src_id,dst_id,mass`` triplets."""
    src, dst = np.nonzero(plan.plan > threshold)
    rows = [[int(i), int(j), _num(plan.plan[i, j])] for i, j in zip(src, dst)]
    atomic_write(path, _table(["src_id", "dst_id", "mass"], rows))


def save_potentials(plan, path):
    rows = [[i, _num(f), _num(g)] for i, (f, g) in enumerate(zip(plan.f, plan.g))]
    atomic_write(path, _table(["point_id", "f", "g"], rows))


def save_tabulated(func, path):
    rows = [[_num(v), _num(y)] for v, y in zip(func.grid, func.values)]
    atomic_write(path, _table(["v", "value"], rows))


def load_tabulated(path, slope_bound=0.0):
    rows = _read_table(path, ("v", "value"))
    v = np.array([float(r[0]) for r in rows])
    y = np.array([float(r[1]) for r in rows])
    return Tabulated(v, y, slope_bound=slope_bound)


def convex_from_config(config):
    """``{"power": r}`` or ``{"table": path}`` to a convex function."""
    if isinstance(config, dict) and "power" in config:
        return PowerForm(float(config["power"]))
    if isinstance(config, dict) and "table" in config:
        return load_tabulated(config["table"], config.get("slope_bound", 0.0))
    raise InvalidArgumentError(f"cannot read a convex function from {config!r}")


def save_report(report, folder, stem=None):
    """Write ``<stem>.json`` and ``<stem>.md``; returns the JSON path."""
    stem = stem or report.name
    base = os.path.join(os.fspath(folder), stem)
    atomic_write(base + ".json", report.to_json())
    atomic_write(base + ".md", report.to_markdown())
    return base + ".json"


def load_report(path):
    with open(path, encoding="utf-8") as fh:
        return CheckReport.from_dict(json.load(fh))
