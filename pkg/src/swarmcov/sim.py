"""Stochastic stand-in controller: independent Metropolis random walks targeting rho."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .domain import QuadratureGrid, RectDomain, ScaledKernel, SwarmConfig, TargetDensity
from .metric import TrajectorySeries, error_value


@dataclass(frozen=True)
class ControllerParams:
    step_scale: float = 4.0
    n_steps: int = 6000
    stride: int = 20
    seed: int = 0
    start: str = "corner"  # "corner", "uniform", or "sample"

    def __post_init__(self):
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")
        if self.n_steps < 1 or self.stride < 1:
            raise ValueError("n_steps and stride must be >= 1")


def _initial(rho: TargetDensity, dom: RectDomain, n: int, params: ControllerParams, rng):
    if params.start == "corner":
        # tight cluster a couple of units in from the lower-left corner
        c = dom.lower + 0.05 * np.array([dom.width, dom.height])
        return dom.project(c + rng.normal(scale=0.01 * min(dom.width, dom.height), size=(n, 2)))
    if params.start == "uniform":
        return rng.uniform(dom.lower, dom.upper, size=(n, 2))
    if params.start == "sample":
        from .domain import sample_positions
        return sample_positions(rho, n, rng=rng).positions.copy()
    raise ValueError(f"unknown start {params.start!r}")


def run_trajectory(rho: TargetDensity, dom: Optional[RectDomain], n_robots: int,
                   params: ControllerParams = ControllerParams(),
                   start_positions=None) -> TrajectorySeries:
    """Move every robot by a Metropolis walk whose stationary law is ``rho``.

    A proposal leaving the domain is rejected (the robot stays put). Frames
    are recorded at step 0 and every ``stride`` steps after; frame times are
    step counts.
    """
    dom = dom or rho.domain
    rng = np.random.default_rng(params.seed)
    x = (np.array(start_positions, dtype=float).reshape(-1, 2) if start_positions is not None
         else _initial(rho, dom, n_robots, params, rng))
    dens = rho(x[:, 0], x[:, 1])
    times, frames = [0.0], [SwarmConfig(x.copy())]
    for step in range(1, params.n_steps + 1):
        prop = x + rng.normal(scale=params.step_scale, size=x.shape)
        inside = dom.contains(prop)
        pd = np.where(inside, rho(np.clip(prop[:, 0], dom.x_min, dom.x_max),
                                  np.clip(prop[:, 1], dom.y_min, dom.y_max)), 0.0)
        u = rng.uniform(size=x.shape[0])
        accept = inside & (u * dens < pd)
        x[accept] = prop[accept]
        dens[accept] = pd[accept]
        if step % params.stride == 0:
            times.append(float(step))
            frames.append(SwarmConfig(x.copy()))
    return TrajectorySeries(np.array(times), frames)


def error_time_series(traj: TrajectorySeries, rho: TargetDensity, k: ScaledKernel,
                      grid: QuadratureGrid, normalize: bool = True):
    """Instantaneous error for every recorded frame; returns ``(t, e)`` arrays."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    rv = rho.on_grid(grid)
    e = np.array([error_value(f.positions, rv, k, grid, normalize) for f in traj.frames])
    return traj.times.copy(), e
