"""Scenario files, CSV position/trajectory/sample formats and JSON reports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .domain import (GaussianMixtureDensity, GridDensity, QuadratureGrid, RectDomain,
                     RingDensity, ScaledKernel, SwarmConfig, TargetDensity,
                     UniformDensity, OutsideDomainError)
from .metric import TrajectorySeries
from .pdf_bench import ErrorSampleSet


class InputError(ValueError):
    """Malformed input file; the message names the file and line."""


@dataclass
class Scenario:
    domain: RectDomain
    density: TargetDensity
    kernel: ScaledKernel
    grid: QuadratureGrid
    seed: int = 0
    source: dict = field(default_factory=dict)


_TOP_KEYS = {"domain", "density", "kernel", "delta", "grid", "seeds", "name"}
_DENSITY_KEYS = {
    "uniform": {"type"},
    "ring": {"type", "r1", "r2", "rho0", "contrast", "center"},
    "gaussian_mixture": {"type", "weights", "means", "sigmas"},
    "grid": {"type", "csv"},
}


def _reject_unknown(where: str, got: dict, allowed: set):
    extra = set(got) - allowed
    if extra:
        raise InputError(f"{where}: unknown key(s) {sorted(extra)}; allowed {sorted(allowed)}")


def ring_scenario_dict(nx: Optional[int] = None, ny: Optional[int] = None) -> dict:
    """The 48in x 70in ring benchmark as a scenario dictionary."""
    grid = {"cells_per_delta": 2, "minimum": 100} if nx is None else {"nx": nx, "ny": ny or nx}
    return {
        "name": "ring",
        "domain": {"x_min": 0.0, "x_max": 48.0, "y_min": 0.0, "y_max": 70.0},
        "density": {"type": "ring", "r1": 11.4, "r2": 20.6, "rho0": 2.79e-5, "contrast": 36.0},
        "kernel": {"type": "gaussian", "delta": 2.0},
        "grid": grid,
        "seeds": {"base": 0},
    }


def scenario_from_dict(d: dict, base_dir: Path = Path(".")) -> Scenario:
    if not isinstance(d, dict):
        raise InputError("scenario must be a JSON object")
    _reject_unknown("scenario", d, _TOP_KEYS)
    try:
        dd = d["domain"]
        _reject_unknown("domain", dd, {"x_min", "x_max", "y_min", "y_max"})
        dom = RectDomain(float(dd["x_min"]), float(dd["x_max"]), float(dd["y_min"]), float(dd["y_max"]))

        kd = d.get("kernel", {"type": "gaussian"})
        _reject_unknown("kernel", kd, {"type", "delta"})
        delta = float(kd.get("delta", d.get("delta", 2.0)))
        k = ScaledKernel(kd.get("type", "gaussian"), delta)

        gd = d.get("grid", {})
        _reject_unknown("grid", gd, {"nx", "ny", "cells_per_delta", "minimum"})
        if "nx" in gd:
            grid = QuadratureGrid(dom, int(gd["nx"]), int(gd.get("ny", gd["nx"])))
        else:
            grid = QuadratureGrid.for_delta(dom, delta, float(gd.get("cells_per_delta", 2.0)),
                                            int(gd.get("minimum", 100)))

        rd = d["density"]
        kind = rd.get("type")
        if kind not in _DENSITY_KEYS:
            raise InputError(f"density: unknown type {kind!r}; expected one of {sorted(_DENSITY_KEYS)}")
        _reject_unknown(f"density[{kind}]", rd, _DENSITY_KEYS[kind])
        if kind == "uniform":
            rho = UniformDensity(dom)
        elif kind == "ring":
            rho = RingDensity(dom, rd["r1"], rd["r2"], rd["rho0"], rd.get("contrast", 36.0), rd.get("center"))
        elif kind == "gaussian_mixture":
            rho = GaussianMixtureDensity(dom, rd["weights"], rd["means"], rd["sigmas"])
        else:
            rho = read_grid_density(base_dir / rd["csv"])
            if rho.domain != dom:
                raise InputError(f"grid density bounds {rho.domain} differ from scenario domain {dom}")
        seeds = d.get("seeds", {})
        _reject_unknown("seeds", seeds, {"base"})
    except KeyError as exc:
        raise InputError(f"scenario: missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"scenario: {exc}") from None
    return Scenario(dom, rho.normalized(), k, grid, int(seeds.get("base", 0)), d)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return scenario_from_dict(d, path.parent)


# --------------------------------------------------------------------------
# positions / trajectories
# --------------------------------------------------------------------------

def read_positions(path, domain: Optional[RectDomain] = None):
    """Read ``x,y[,t]`` rows.

    Returns a SwarmConfig when there is no ``t`` column, otherwise a
    TrajectorySeries with rows grouped by t (in file order of first appearance,
    which must be increasing).
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}:1: empty file") from None
        if header[:2] != ["x", "y"] or header[2:] not in ([], ["t"]):
            raise InputError(f"{path}:1: header must be 'x,y' or 'x,y,t', got {','.join(header)!r}")
        ncol = len(header)
        rows, lines = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != ncol:
                raise InputError(f"{path}:{lineno}: expected {ncol} fields, got {len(row)}")
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric field in {row}") from None
            if not all(math.isfinite(v) for v in vals):
                raise InputError(f"{path}:{lineno}: non-finite value")
            rows.append(vals)
            lines.append(lineno)
    if not rows:
        raise InputError(f"{path}: no robot rows")
    arr = np.array(rows)
    lines = np.array(lines)
    if domain is not None:
        bad = np.flatnonzero(~domain.contains(arr[:, :2]))
        if bad.size:
            where = ", ".join(f"line {lines[i]} ({arr[i, 0]:g}, {arr[i, 1]:g})" for i in bad[:10])
            raise InputError(f"{path}: {bad.size} position(s) outside the domain: {where}")
    if ncol == 2:
        return SwarmConfig(arr)
    times, idx = np.unique(arr[:, 2], return_index=True)
    frames = [SwarmConfig(arr[arr[:, 2] == t, :2]) for t in times]
    try:
        return TrajectorySeries(times, frames)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_positions(path, swarm):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if isinstance(swarm, TrajectorySeries):
            w.writerow(["x", "y", "t"])
            for t, f in zip(swarm.times, swarm.frames):
                for x, y in f.positions:
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(t))])
        else:
            w.writerow(["x", "y"])
            for x, y in swarm.positions:
                w.writerow([repr(float(x)), repr(float(y))])
    return path


# --------------------------------------------------------------------------
# grid densities
# --------------------------------------------------------------------------

def read_grid_density(path) -> GridDensity:
    """CSV: ``nx,ny,x_min,x_max,y_min,y_max`` header + values line, then ny rows of nx values.

    Rows run from y_min upward, columns from x_min rightward.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    if len(lines) < 3:
        raise InputError(f"{path}: too short for a grid density")
    keys = [s.strip() for s in lines[0].split(",")]
    if keys != ["nx", "ny", "x_min", "x_max", "y_min", "y_max"]:
        raise InputError(f"{path}:1: expected header nx,ny,x_min,x_max,y_min,y_max")
    try:
        meta = [float(s) for s in lines[1].split(",")]
        nx, ny = int(meta[0]), int(meta[1])
        dom = RectDomain(*meta[2:6])
    except (ValueError, IndexError, TypeError) as exc:
        raise InputError(f"{path}:2: bad grid metadata ({exc})") from None
    body = [ln for ln in lines[2:] if ln.strip()]
    if len(body) != ny:
        raise InputError(f"{path}: expected {ny} value rows, found {len(body)}")
    vals = np.empty((nx, ny))
    for j, ln in enumerate(body):
        try:
            row = [float(s) for s in ln.split(",")]
        except ValueError:
            raise InputError(f"{path}:{j + 3}: non-numeric value") from None
        if len(row) != nx:
            raise InputError(f"{path}:{j + 3}: expected {nx} values, got {len(row)}")
        vals[:, j] = row
    try:
        return GridDensity(QuadratureGrid(dom, nx, ny), vals)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_grid_density(path, grid: QuadratureGrid, values):
    path = Path(path)
    d = grid.domain
    with path.open("w") as fh:
        fh.write("nx,ny,x_min,x_max,y_min,y_max\n")
        fh.write(f"{grid.nx},{grid.ny},{d.x_min!r},{d.x_max!r},{d.y_min!r},{d.y_max!r}\n")
        for j in range(grid.ny):
            fh.write(",".join(repr(float(v)) for v in values[:, j]) + "\n")
    return path


def write_field_csv(path, grid: QuadratureGrid, values, name="value"):
    """Long-format field for plotting: ``x,y,<name>`` per cell center."""
    path = Path(path)
    X, Y = grid.mesh()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", name])
        for x, y, v in zip(X.ravel(), Y.ravel(), np.asarray(values).ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
    return path


# --------------------------------------------------------------------------
# sample sets, series, reports
# --------------------------------------------------------------------------

def write_samples(path, s: ErrorSampleSet):
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# N={s.n_robots}\n# delta={s.delta!r}\n# density={s.density_id}\n"
                 f"# seed={s.seed}\n# normalized_blob={int(s.normalized_blob)}\n")
        fh.write("e\n")
        for v in s.values:
            fh.write(repr(float(v)) + "\n")
    return path


def read_samples(path) -> ErrorSampleSet:
    path = Path(path)
    meta, vals = {}, []
    header_seen = False
    for lineno, ln in enumerate(path.read_text().splitlines(), start=1):
        ln = ln.strip()
        if not ln:
            continue
        if ln.startswith("#"):
            k, _, v = ln[1:].partition("=")
            meta[k.strip()] = v.strip()
            continue
        if not header_seen:
            if ln != "e":
                raise InputError(f"{path}:{lineno}: expected header 'e'")
            header_seen = True
            continue
        try:
            vals.append(float(ln))
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric sample {ln!r}") from None
    seed = meta.get("seed")
    return ErrorSampleSet(np.array(vals), int(meta.get("N", 0)), float(meta.get("delta", "nan")),
                          meta.get("density", ""), None if seed in (None, "None") else int(seed),
                          bool(int(meta.get("normalized_blob", 0))))


def write_series(path, t, e):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "e"])
        for a, b in zip(t, e):
            w.writerow([repr(float(a)), repr(float(b))])
    return path


def read_series(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_table(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def _jsonable(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, default=_jsonable)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
