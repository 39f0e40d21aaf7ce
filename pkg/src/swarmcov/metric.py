"""Swarm blob function and the L1 coverage error with its variants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .domain import (QuadratureGrid, RectDomain, ScaledKernel, SwarmConfig,
                     TargetDensity)


class EmptySwarmError(ValueError):
    pass


class MalformedTrajectoryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BlobField:
    grid: QuadratureGrid
    values: np.ndarray
    denominator_masses: np.ndarray

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.values)


@dataclass(frozen=True)
class MetricResult:
    e: float
    e_hat: float
    n: int
    delta: float
    kernel: str
    nx: int
    ny: int
    density_id: str = ""
    mass_defect: float = 0.0

    def to_dict(self) -> dict:
        return {"e": self.e, "e_hat": self.e_hat, "N": self.n, "delta": self.delta,
                "grid": {"nx": self.nx, "ny": self.ny}, "kernel": self.kernel,
                "density_id": self.density_id}


@dataclass(frozen=True, eq=False)
class TrajectorySeries:
    times: np.ndarray
    frames: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) != t.size or t.size == 0:
            raise MalformedTrajectoryError("need one configuration per time point, at least one frame")
        if np.any(np.diff(t) <= 0):
            raise MalformedTrajectoryError("timestamps must be strictly increasing")
        ns = {f.n for f in self.frames}
        if len(ns) != 1:
            raise MalformedTrajectoryError(f"robot count varies across frames: {sorted(ns)}")

    @property
    def n_robots(self) -> int:
        return self.frames[0].n

    def __len__(self):
        return len(self.frames)


# --------------------------------------------------------------------------
# boundary mass
# --------------------------------------------------------------------------

def _axis_mass(a, lo, hi, delta):
    return ndtr((hi - a) / delta) - ndtr((lo - a) / delta)


def _axis_mass_deriv(a, lo, hi, delta):
    c = 1.0 / (math.sqrt(2 * math.pi) * delta)
    return c * (np.exp(-0.5 * ((lo - a) / delta) ** 2) - np.exp(-0.5 * ((hi - a) / delta) ** 2))


@lru_cache(maxsize=1)
def _disc_nodes(n_r: int = 120, n_t: int = 240):
    # polar midpoint nodes on the unit disc, weights sum to 1
    r = (np.arange(n_r) + 0.5) / n_r
    t = (np.arange(n_t) + 0.5) * 2 * math.pi / n_t
    R, T = np.meshgrid(r, t, indexing="ij")
    w = R / R.sum()
    return np.stack([R * np.cos(T), R * np.sin(T)], -1).reshape(-1, 2), w.reshape(-1)


@lru_cache(maxsize=65536)
def _disc_mass_cached(x, y, delta, box):
    nodes, w = _disc_nodes()
    pts = nodes * delta + (x, y)
    inside = ((pts[:, 0] >= box[0]) & (pts[:, 0] <= box[1])
              & (pts[:, 1] >= box[2]) & (pts[:, 1] <= box[3]))
    return float(w[inside].sum())


def boundary_masses(positions, k: ScaledKernel, dom: RectDomain) -> np.ndarray:
    """Mass of each robot's blob that falls inside the domain."""
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    if k.kernel == "gaussian":
        return (_axis_mass(p[:, 0], dom.x_min, dom.x_max, k.delta)
                * _axis_mass(p[:, 1], dom.y_min, dom.y_max, k.delta))
    box = (dom.x_min, dom.x_max, dom.y_min, dom.y_max)
    return np.array([_disc_mass_cached(float(a), float(b), k.delta, box) for a, b in p])


def boundary_mass(k: ScaledKernel, dom: RectDomain, x) -> float:
    return float(boundary_masses(np.asarray(x, dtype=float)[None, :], k, dom)[0])


def boundary_mass_gradient(positions, k: ScaledKernel, dom: RectDomain) -> np.ndarray:
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    mx = _axis_mass(p[:, 0], dom.x_min, dom.x_max, k.delta)
    my = _axis_mass(p[:, 1], dom.y_min, dom.y_max, k.delta)
    dx = _axis_mass_deriv(p[:, 0], dom.x_min, dom.x_max, k.delta)
    dy = _axis_mass_deriv(p[:, 1], dom.y_min, dom.y_max, k.delta)
    return np.stack([dx * my, mx * dy], axis=1)


# --------------------------------------------------------------------------
# blob function
# --------------------------------------------------------------------------

def gaussian_factors(positions: np.ndarray, k: ScaledKernel, grid: QuadratureGrid):
    """Per-robot axis factors: blob_i(xc[a], yc[b]) == gx[i, a] * gy[i, b]."""
    gx = k.factor_1d(grid.xc[None, :] - positions[:, 0:1])
    gy = k.factor_1d(grid.yc[None, :] - positions[:, 1:2])
    return gx, gy


def kernel_sum(positions, k: ScaledKernel, grid: QuadratureGrid) -> np.ndarray:
    """Unnormalized sum of blobs at the grid cell centers."""
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    if k.kernel == "gaussian":
        gx, gy = gaussian_factors(p, k, grid)
        return gx.T @ gy
    out = np.zeros((grid.nx, grid.ny))
    xc, yc = grid.xc, grid.yc
    r2max = k.delta ** 2
    height = 1.0 / (math.pi * k.delta ** 2)
    for px, py in p:
        ax = (xc - px) ** 2
        ay = (yc - py) ** 2
        out += np.where(ax[:, None] + ay[None, :] < r2max, height, 0.0)
    return out


def blob_function(swarm: SwarmConfig, k: ScaledKernel, grid: QuadratureGrid,
                  normalize: bool = True) -> BlobField:
    """Swarm blob function on ``grid``.

    With ``normalize`` the blob sum is divided by the total in-domain blob
    mass; otherwise by the robot count (the kernel density estimator form).
    """
    p = _positions(swarm)
    s = kernel_sum(p, k, grid)
    if normalize:
        masses = boundary_masses(p, k, grid.domain)
        denom = masses.sum()
    else:
        masses = np.ones(p.shape[0])
        denom = float(p.shape[0])
    return BlobField(grid, s / denom, masses)


def _positions(swarm) -> np.ndarray:
    p = swarm.positions if isinstance(swarm, SwarmConfig) else np.asarray(swarm, dtype=float)
    p = np.atleast_2d(p)
    if p.size == 0:
        raise EmptySwarmError("swarm has no robots")
    return p


def l1_error(field_values: np.ndarray, rho_values: np.ndarray, cell_area: float):
    """Rectangle-rule L1 distance and the one-sided deficit."""
    diff = field_values - rho_values
    e = float(np.abs(diff).sum() * cell_area)
    e_hat = float(-diff[diff <= 0].sum() * cell_area)
    return e, e_hat


def error_metric(swarm, rho: TargetDensity, k: ScaledKernel, grid: QuadratureGrid,
                 normalize: bool = True, rho_values: Optional[np.ndarray] = None) -> MetricResult:
    field_ = blob_function(swarm, k, grid, normalize=normalize)
    rv = rho.on_grid(grid) if rho_values is None else rho_values
    e, e_hat = l1_error(field_.values, rv, grid.cell_area)
    defect = abs(field_.mass - 1.0) + abs(grid.integrate(rv) - 1.0)
    return MetricResult(e, e_hat, int(field_.denominator_masses.size), k.delta, k.kernel,
                        grid.nx, grid.ny, rho.density_id, defect)


def error_value(positions, rho_values, k, grid, normalize=True) -> float:
    """Just the error number; the hot path for optimizers and Monte Carlo."""
    p = np.atleast_2d(positions)
    s = kernel_sum(p, k, grid)
    denom = boundary_masses(p, k, grid.domain).sum() if normalize else float(p.shape[0])
    return float(np.abs(s / denom - rho_values).sum() * grid.cell_area)


def cumulative_error(traj: TrajectorySeries, rho: TargetDensity, k: ScaledKernel,
                     grid: QuadratureGrid, normalize: bool = True) -> float:
    """L1 distance between the time-averaged blob function and the target."""
    if not isinstance(traj, TrajectorySeries):
        traj = TrajectorySeries(np.arange(len(traj), dtype=float), traj)
    acc = np.zeros((grid.nx, grid.ny))
    for frame in traj.frames:
        acc += blob_function(frame, k, grid, normalize=normalize).values
    acc /= len(traj)
    e, _ = l1_error(acc, rho.on_grid(grid), grid.cell_area)
    return e


# --------------------------------------------------------------------------
# discretization metric
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Partition:
    """Tensor-product tiling of the domain into rectangles ``[x_i, x_i+1) x [y_j, y_j+1)``.

    The last row and column of cells are closed on their outer edge.
    """

    domain: RectDomain
    x_edges: np.ndarray
    y_edges: np.ndarray

    def __post_init__(self):
        xe = np.asarray(self.x_edges, dtype=float)
        ye = np.asarray(self.y_edges, dtype=float)
        d = self.domain
        if (xe[0] != d.x_min or xe[-1] != d.x_max or ye[0] != d.y_min or ye[-1] != d.y_max
                or np.any(np.diff(xe) <= 0) or np.any(np.diff(ye) <= 0)):
            raise ValueError("partition edges must be increasing and span the domain")
        object.__setattr__(self, "x_edges", xe)
        object.__setattr__(self, "y_edges", ye)

    @classmethod
    def regular(cls, domain: RectDomain, rows: int, cols: int) -> "Partition":
        """``rows`` cells along y, ``cols`` along x."""
        xe = np.linspace(domain.x_min, domain.x_max, cols + 1)
        ye = np.linspace(domain.y_min, domain.y_max, rows + 1)
        xe[-1], ye[-1] = domain.x_max, domain.y_max
        return cls(domain, xe, ye)

    @property
    def shape(self):
        return (self.x_edges.size - 1, self.y_edges.size - 1)

    @property
    def n_regions(self) -> int:
        return self.shape[0] * self.shape[1]

    def counts(self, positions) -> np.ndarray:
        p = np.atleast_2d(np.asarray(positions, dtype=float))
        nxr, nyr = self.shape
        ix = np.clip(np.searchsorted(self.x_edges, p[:, 0], side="right") - 1, 0, nxr - 1)
        iy = np.clip(np.searchsorted(self.y_edges, p[:, 1], side="right") - 1, 0, nyr - 1)
        out = np.zeros(self.shape, dtype=int)
        np.add.at(out, (ix, iy), 1)
        return out

    def target_masses(self, rho: TargetDensity, points_per_axis: Optional[int] = None) -> np.ndarray:
        """Midpoint-rule mass of ``rho`` in each region, rescaled to sum to one."""
        nxr, nyr = self.shape
        s = points_per_axis or max(1, min(16, 2000 // max(nxr, nyr)))
        out = np.zeros(self.shape)
        u = (np.arange(s) + 0.5) / s
        xs = (self.x_edges[:-1, None] + np.diff(self.x_edges)[:, None] * u[None, :]).reshape(-1)
        ys = (self.y_edges[:-1, None] + np.diff(self.y_edges)[:, None] * u[None, :]).reshape(-1)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        w = (np.repeat(np.diff(self.x_edges), s)[:, None] * np.repeat(np.diff(self.y_edges), s)[None, :]) / (s * s)
        vals = rho(X, Y) * w
        out = vals.reshape(nxr, s, nyr, s).sum(axis=(1, 3))
        return out / out.sum()


def discretization_metric(swarm, rho: TargetDensity, part: Partition) -> float:
    """Sum over regions of |target mass - robot fraction|."""
    p = _positions(swarm)
    frac = part.counts(p) / p.shape[0]
    return float(np.abs(part.target_masses(rho) - frac).sum())
