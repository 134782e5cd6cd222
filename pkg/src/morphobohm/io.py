"""CSV/JSON readers and writers.

Floats are written in Python's shortest round-trip form so reruns produce
identical bytes on every platform.

Formats
-------
field CSV      ``x[,y],value`` rows in row-major order, plus a JSON sidecar
               ``<stem>.json`` with ``name``, ``origin``, ``spacing``, ``shape``
trajectories   ``t,particle_id,x[,y]``
histogram      ``bin_center,count,normalized``
metric JSON    ``{"grid": {...}, "metric": "minkowski" | "diag": [...] |
               "components": [[...]]}``; entries are numbers or CSV paths
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import GridMismatch
from .fields import Grid, ScalarField


def fmt(v) -> str:
    """Shortest round-trip decimal form of a number."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def grid_to_dict(grid: Grid) -> dict:
    return {"origin": list(grid.origin), "spacing": list(grid.spacing), "shape": list(grid.shape)}


def grid_from_dict(d: dict) -> Grid:
    extra = set(d) - {"origin", "spacing", "shape"}
    if extra:
        raise ValueError(f"unknown grid keys: {sorted(extra)}")
    return Grid(tuple(d["origin"]), tuple(d["spacing"]), tuple(d["shape"]))


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_field(field: ScalarField, path) -> list:
    """Write ``field`` as CSV plus sidecar; returns both paths."""
    path = Path(path)
    grid = field.grid
    names = ["x", "y", "z"][: grid.ndim] if grid.ndim <= 3 else [f"x{i}" for i in range(grid.ndim)]
    mesh = [m.ravel() for m in grid.mesh()]
    vals = np.asarray(field.values, dtype=float).ravel()
    rows = ([fmt(c[i]) for c in mesh] + [fmt(vals[i])] for i in range(vals.size))
    _write_rows(path, names + ["value"], rows)
    side = sidecar_path(path)
    dump_json({"name": field.name, **grid_to_dict(grid)}, side)
    return [path, side]


def read_field(path) -> ScalarField:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    grid = grid_from_dict({k: meta[k] for k in ("origin", "spacing", "shape")})
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != int(np.prod(grid.shape)) or data.shape[1] != grid.ndim + 1:
        raise GridMismatch(f"{path}: {data.shape[0]} rows do not match grid {grid.shape}")
    return ScalarField(data[:, -1].reshape(grid.shape), grid, meta.get("name", ""))


def field_to_json(field: ScalarField) -> dict:
    return {
        "name": field.name,
        **grid_to_dict(field.grid),
        "values": [float(v) for v in np.asarray(field.values, dtype=float).ravel()],
    }


def write_trajectories(ensemble, path) -> Path:
    path = Path(path)
    d = ensemble.paths.shape[2]
    names = ["x", "y", "z"][:d]
    rows = (
        [fmt(t), str(p)] + [fmt(v) for v in ensemble.paths[i, p]]
        for i, t in enumerate(ensemble.times)
        for p in range(ensemble.paths.shape[1])
    )
    _write_rows(path, ["t", "particle_id"] + names, rows)
    return path


def write_histogram(centers, counts, path) -> Path:
    path = Path(path)
    counts = np.asarray(counts)
    total = counts.sum()
    norm = counts / total if total > 0 else np.zeros(counts.shape)
    rows = ([fmt(c), fmt(int(n)), fmt(q)] for c, n, q in zip(centers, counts, norm))
    _write_rows(path, ["bin_center", "count", "normalized"], rows)
    return path


def read_csv_columns(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = list(zip(*[[float(v) for v in row] for row in reader]))
    return {h: np.array(c) for h, c in zip(header, cols)}


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_metric(path):
    """Read a metric description (see module docstring)."""
    from .geometrodynamics import SpacetimeMetric, minkowski

    path = Path(path)
    spec = json.loads(path.read_text())
    extra = set(spec) - {"grid", "metric", "diag", "components", "c"}
    if extra:
        raise ValueError(f"unknown metric keys: {sorted(extra)}")
    grid = grid_from_dict(spec["grid"])
    d = grid.ndim

    def entry(v):
        if isinstance(v, str):
            f = read_field(path.parent / v)
            if f.grid.shape != grid.shape:
                raise GridMismatch(f"component {v} is on a different grid")
            return np.asarray(f.values, dtype=float)
        return np.full(grid.shape, float(v))

    given = [k for k in ("metric", "diag", "components") if k in spec]
    if len(given) != 1:
        raise ValueError("give exactly one of 'metric', 'diag', 'components'")
    if "metric" in spec:
        if spec["metric"] != "minkowski":
            raise ValueError(f"unknown named metric {spec['metric']!r}")
        return minkowski(grid, float(spec.get("c", 1.0)))
    if "diag" in spec:
        if len(spec["diag"]) != d:
            raise GridMismatch(f"diag needs {d} entries")
        g = np.zeros(grid.shape + (d, d))
        for a, v in enumerate(spec["diag"]):
            g[..., a, a] = entry(v)
        return SpacetimeMetric(g, grid)
    comps = spec["components"]
    if len(comps) != d or any(len(r) != d for r in comps):
        raise GridMismatch(f"components must be {d}x{d}")
    g = np.stack([np.stack([entry(v) for v in row], axis=-1) for row in comps], axis=-2)
    return SpacetimeMetric(g, grid)
