"""Domains, target densities, blob kernels, quadrature grids and sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr


class InvalidDensityError(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


class OutsideDomainError(ValueError):
    def __init__(self, indices, message=None):
        self.indices = list(indices)
        shown = ", ".join(str(i) for i in self.indices[:20])
        more = "" if len(self.indices) <= 20 else f" (+{len(self.indices) - 20} more)"
        super().__init__(message or f"positions outside domain at indices: {shown}{more}")


@dataclass(frozen=True)
class RectDomain:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate domain {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.x_max, self.y_max])

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return ((p[:, 0] >= self.x_min) & (p[:, 0] <= self.x_max)
                & (p[:, 1] >= self.y_min) & (p[:, 1] <= self.y_max))

    def project(self, points) -> np.ndarray:
        return np.clip(points, self.lower, self.upper)

    def corners(self) -> np.ndarray:
        return np.array([[self.x_min, self.y_min], [self.x_max, self.y_min],
                         [self.x_min, self.y_max], [self.x_max, self.y_max]])


@dataclass(frozen=True)
class QuadratureGrid:
    """Midpoint-rule grid: ``nx`` by ``ny`` equal cells tiling the domain.

    Field arrays on the grid are indexed ``[ix, iy]``.
    """

    domain: RectDomain
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per axis")

    @classmethod
    def for_delta(cls, domain: RectDomain, delta: float, cells_per_delta: float = 2.0,
                  minimum: int = 100) -> "QuadratureGrid":
        nx = max(minimum, int(math.ceil(cells_per_delta * domain.width / delta)))
        ny = max(minimum, int(math.ceil(cells_per_delta * domain.height / delta)))
        return cls(domain, nx, ny)

    @property
    def hx(self) -> float:
        return self.domain.width / self.nx

    @property
    def hy(self) -> float:
        return self.domain.height / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def xc(self) -> np.ndarray:
        return self.domain.x_min + (np.arange(self.nx) + 0.5) * self.hx

    @property
    def yc(self) -> np.ndarray:
        return self.domain.y_min + (np.arange(self.ny) + 0.5) * self.hy

    def mesh(self):
        return np.meshgrid(self.xc, self.yc, indexing="ij")

    def refine(self, factor: int = 2) -> "QuadratureGrid":
        return QuadratureGrid(self.domain, self.nx * factor, self.ny * factor)

    def integrate(self, values) -> float:
        return float(np.sum(values) * self.cell_area)


# --------------------------------------------------------------------------
# target densities
# --------------------------------------------------------------------------

class TargetDensity:
    """Prescribed robot distribution on a rectangle.

    Subclasses supply the unnormalized shape via ``_raw``; calling the density
    divides by ``normalization_constant`` (the raw mass over the domain).
    """

    kind = "abstract"

    def __init__(self, domain: RectDomain, normalization_constant: float = 1.0):
        if not normalization_constant > 0:
            raise InvalidDensityError("normalization constant must be positive")
        self.domain = domain
        self.normalization_constant = float(normalization_constant)

    def _raw(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def raw_mass(self) -> Optional[float]:
        """Closed-form mass of the raw shape over the domain, if known."""
        return None

    def peak(self) -> float:
        """Upper bound on the (normalized) density, used by rejection sampling."""
        g = QuadratureGrid(self.domain, 200, 200)
        return 1.25 * float(np.max(self.on_grid(g)))

    def __call__(self, x, y=None) -> np.ndarray:
        if y is None:
            p = np.asarray(x, dtype=float)
            x, y = p[..., 0], p[..., 1]
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self._raw(x, y) / self.normalization_constant

    def on_grid(self, grid: QuadratureGrid) -> np.ndarray:
        X, Y = grid.mesh()
        return self(X, Y)

    def params(self) -> dict:
        return {}

    def normalized(self, grid: Optional[QuadratureGrid] = None) -> "TargetDensity":
        """Copy rescaled to unit mass.

        Uses the closed-form mass when the shape has one, otherwise the
        rectangle rule on ``grid`` (default 1000x1000).
        """
        mass = self.raw_mass()
        if mass is None:
            g = grid or QuadratureGrid(self.domain, 1000, 1000)
            X, Y = g.mesh()
            vals = self._raw(X, Y)
            if np.any(vals <= 0):
                raise InvalidDensityError("density must be strictly positive on the domain")
            mass = g.integrate(vals)
        return self._with_constant(mass)

    def _with_constant(self, c: float) -> "TargetDensity":
        import copy
        other = copy.copy(self)
        other.normalization_constant = float(c)
        return other

    @property
    def density_id(self) -> str:
        return self.kind

    def __repr__(self):
        return f"{type(self).__name__}({self.params()}, mass_const={self.normalization_constant:.6g})"


class UniformDensity(TargetDensity):
    kind = "uniform"

    def _raw(self, x, y):
        return np.full(np.broadcast(x, y).shape, 1.0 / self.domain.area)

    def raw_mass(self):
        return 1.0

    def peak(self):
        return 1.0 / self.domain.area / self.normalization_constant


class RingDensity(TargetDensity):
    """Annulus of elevated density (``contrast`` times background) centred in the domain."""

    kind = "ring"

    def __init__(self, domain: RectDomain, r1: float, r2: float, rho0: float,
                 contrast: float = 36.0, center=None, normalization_constant: float = 1.0):
        super().__init__(domain, normalization_constant)
        if not (0 <= r1 < r2) or rho0 <= 0 or contrast <= 0:
            raise InvalidDensityError("ring needs 0 <= r1 < r2, rho0 > 0, contrast > 0")
        self.r1, self.r2, self.rho0, self.contrast = float(r1), float(r2), float(rho0), float(contrast)
        if center is None:
            center = ((domain.x_min + domain.x_max) / 2, (domain.y_min + domain.y_max) / 2)
        self.center = (float(center[0]), float(center[1]))

    @classmethod
    def benchmark_ring(cls) -> "RingDensity":
        """The 48in x 70in ring scenario (r1=11.4, r2=20.6, rho0=2.79e-5), not renormalized."""
        return cls(RectDomain(0.0, 48.0, 0.0, 70.0), r1=11.4, r2=20.6, rho0=2.79e-5, contrast=36.0)

    def in_annulus(self, x, y):
        r2 = (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2
        return (r2 > self.r1 ** 2) & (r2 < self.r2 ** 2)

    def _raw(self, x, y):
        return np.where(self.in_annulus(x, y), self.contrast * self.rho0, self.rho0)

    def annulus_area(self) -> float:
        return math.pi * (self.r2 ** 2 - self.r1 ** 2)

    def raw_mass(self):
        d = self.domain
        cx, cy = self.center
        inside = (cx - self.r2 >= d.x_min and cx + self.r2 <= d.x_max
                  and cy - self.r2 >= d.y_min and cy + self.r2 <= d.y_max)
        if not inside:
            return None
        return self.rho0 * (d.area + (self.contrast - 1.0) * self.annulus_area())

    def peak(self):
        return self.contrast * self.rho0 / self.normalization_constant

    def params(self):
        return {"r1": self.r1, "r2": self.r2, "rho0": self.rho0,
                "contrast": self.contrast, "center": list(self.center)}


class GaussianMixtureDensity(TargetDensity):
    """Isotropic Gaussian mixture restricted to the domain."""

    kind = "gaussian_mixture"

    def __init__(self, domain: RectDomain, weights, means, sigmas, normalization_constant: float = 1.0):
        super().__init__(domain, normalization_constant)
        self.weights = np.asarray(weights, dtype=float).reshape(-1)
        self.means = np.asarray(means, dtype=float).reshape(-1, 2)
        self.sigmas = np.asarray(sigmas, dtype=float).reshape(-1)
        k = len(self.weights)
        if k == 0 or self.means.shape[0] != k or self.sigmas.shape[0] != k:
            raise InvalidDensityError("weights, means and sigmas must have matching lengths")
        if np.any(self.weights <= 0) or np.any(self.sigmas <= 0):
            raise InvalidDensityError("mixture weights and sigmas must be positive")

    def _raw(self, x, y):
        out = np.zeros(np.broadcast(x, y).shape)
        for w, (mx, my), s in zip(self.weights, self.means, self.sigmas):
            out = out + w * np.exp(-((x - mx) ** 2 + (y - my) ** 2) / (2 * s * s)) / (2 * math.pi * s * s)
        return out

    def raw_mass(self):
        d = self.domain
        total = 0.0
        for w, (mx, my), s in zip(self.weights, self.means, self.sigmas):
            px = ndtr((d.x_max - mx) / s) - ndtr((d.x_min - mx) / s)
            py = ndtr((d.y_max - my) / s) - ndtr((d.y_min - my) / s)
            total += w * px * py
        return float(total)

    def peak(self):
        # The mixture maximum sits near a component mean; pad the grid/mean estimate.
        pts = self.domain.project(self.means)
        at_means = float(np.max(self(pts[:, 0], pts[:, 1])))
        return max(at_means, super().peak() / 1.25) * 1.25

    def params(self):
        return {"weights": self.weights.tolist(), "means": self.means.tolist(),
                "sigmas": self.sigmas.tolist()}


class GridDensity(TargetDensity):
    """Piecewise-constant density given by cell values on a grid."""

    kind = "grid"

    def __init__(self, grid: QuadratureGrid, values, normalization_constant: float = 1.0):
        super().__init__(grid.domain, normalization_constant)
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.nx, grid.ny):
            raise InvalidDensityError(f"grid values must have shape {(grid.nx, grid.ny)}, got {values.shape}")
        if np.any(~np.isfinite(values)) or np.any(values <= 0):
            raise InvalidDensityError("grid density values must be finite and strictly positive")
        self.grid = grid
        self.values = values

    def _raw(self, x, y):
        g = self.grid
        ix = np.clip(np.floor((x - g.domain.x_min) / g.hx).astype(int), 0, g.nx - 1)
        iy = np.clip(np.floor((y - g.domain.y_min) / g.hy).astype(int), 0, g.ny - 1)
        return self.values[ix, iy]

    def raw_mass(self):
        return self.grid.integrate(self.values)

    def peak(self):
        return float(self.values.max()) / self.normalization_constant

    def params(self):
        return {"nx": self.grid.nx, "ny": self.grid.ny}


def density_mass(rho: TargetDensity, grid: QuadratureGrid) -> float:
    """Rectangle-rule mass of ``rho`` on ``grid``."""
    vals = rho.on_grid(grid)
    if np.any(~(vals > 0)):
        raise InvalidDensityError("nonpositive density value encountered on the grid")
    return grid.integrate(vals)


# --------------------------------------------------------------------------
# kernels
# --------------------------------------------------------------------------

KERNELS = ("gaussian", "indicator_disc")


@dataclass(frozen=True)
class ScaledKernel:
    """Blob shape ``kernel`` of radius ``delta``: K_delta(z) = K(z / delta) / delta**2."""

    kernel: str = "gaussian"
    delta: float = 2.0

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        r2 = np.sum(z * z, axis=-1) / self.delta ** 2
        if self.kernel == "gaussian":
            return np.exp(-0.5 * r2) / (2 * math.pi * self.delta ** 2)
        return np.where(r2 < 1.0, 1.0 / (math.pi * self.delta ** 2), 0.0)

    def factor_1d(self, u) -> np.ndarray:
        """One axis of the separable Gaussian blob."""
        d = self.delta
        return np.exp(-0.5 * (u / d) ** 2) / (math.sqrt(2 * math.pi) * d)


def scaled_kernel_eval(k: ScaledKernel, z) -> np.ndarray:
    return k(z)


# --------------------------------------------------------------------------
# swarm configurations and sampling
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SwarmConfig:
    positions: np.ndarray
    timestamps: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        p = np.array(self.positions, dtype=float).reshape(-1, 2)
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)
        if p.shape[0] < 1:
            raise ValueError("a swarm needs at least one robot")
        if not np.all(np.isfinite(p)):
            raise ValueError("non-finite robot position")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def check_in(self, domain: RectDomain) -> "SwarmConfig":
        bad = np.flatnonzero(~domain.contains(self.positions))
        if bad.size:
            raise OutsideDomainError(bad)
        return self


def sample_positions(rho: TargetDensity, n: int, seed=None, *, rng=None,
                     min_acceptance: float = 1e-4) -> SwarmConfig:
    """Draw ``n`` i.i.d. robot positions from ``rho`` by rejection from a uniform proposal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(seed)
    d = rho.domain
    peak = rho.peak()
    expected = 1.0 / (peak * d.area)
    if expected < min_acceptance:
        raise SamplingError(f"acceptance rate {expected:.3g} below floor {min_acceptance:g} "
                            f"(peak={peak:.3g}, area={d.area:.3g})")
    out = np.empty((0, 2))
    proposed = accepted = 0
    while out.shape[0] < n:
        batch = int(min(2e6, max(64, 1.2 * (n - out.shape[0]) / expected)))
        u = rng.uniform(d.lower, d.upper, size=(batch, 2))
        keep = rng.uniform(0.0, peak, size=batch) < rho(u[:, 0], u[:, 1])
        proposed += batch
        accepted += int(keep.sum())
        out = np.vstack([out, u[keep]])
        if proposed > 1000 and accepted / proposed < min_acceptance:
            raise SamplingError(f"empirical acceptance {accepted}/{proposed} below floor {min_acceptance:g}")
    return SwarmConfig(out[:n])


def uniform_positions(domain: RectDomain, n: int, rng) -> np.ndarray:
    return rng.uniform(domain.lower, domain.upper, size=(n, 2))
