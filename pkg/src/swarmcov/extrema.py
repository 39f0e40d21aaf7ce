"""Multistart bounds on the realizable extrema of the coverage error."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .domain import (QuadratureGrid, ScaledKernel, SwarmConfig, TargetDensity,
                     sample_positions, uniform_positions)
from ._opt import golden_section
from .metric import (boundary_mass_gradient, boundary_masses, error_value,
                     gaussian_factors)

log = logging.getLogger(__name__)


class UnsupportedGradientError(NotImplementedError):
    pass


class OptimizationError(RuntimeError):
    pass


class DegenerateBenchmarkError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerSettings:
    n_starts: int = 50
    max_iters: int = 2000
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    rel_tol: float = 1e-6
    window: int = 10
    seed: int = 0
    threads: int = 1
    informed_start: bool = True

    def __post_init__(self):
        if self.n_starts < 1 or self.max_iters < 1:
            raise ValueError("n_starts and max_iters must be >= 1")
        if not (self.initial_step > 0 and self.rel_tol > 0 and 0 < self.backtrack < 1):
            raise ValueError("step, tolerance and backtracking factor must be positive (factor < 1)")


@dataclass
class StartRecord:
    start_id: int
    sense: str
    kind: str
    value: float
    iters: int
    history: List[float] = field(default_factory=list, repr=False)


@dataclass
class ExtremaResult:
    e_minus: float
    e_plus: float
    argmin: SwarmConfig
    argmax: SwarmConfig
    per_start: List[StartRecord]
    n_starts: int
    seed: int

    def to_dict(self, argmin_csv=None, argmax_csv=None) -> dict:
        return {
            "e_minus": self.e_minus, "e_plus": self.e_plus,
            "e_minus_is": "upper bound on the global minimum",
            "e_plus_is": "lower bound on the global maximum",
            "n_starts": self.n_starts, "seeds": {"base": self.seed},
            "per_start": [{"sense": r.sense, "start": r.start_id, "kind": r.kind,
                           "value": r.value, "iters": r.iters} for r in self.per_start],
            "argmin_csv": argmin_csv, "argmax_csv": argmax_csv,
        }


@dataclass(frozen=True)
class RelativeErrorReport:
    e_observed: float
    e_minus: float
    e_plus: float
    e_rel: float

    @property
    def verdict(self) -> str:
        # interpretive bands only
        if self.e_rel <= 0.10:
            return "quite close to best possible"
        if self.e_rel >= 0.30:
            return "rather poor"
        return "intermediate"

    def to_dict(self) -> dict:
        return {"e_observed": self.e_observed, "e_minus": self.e_minus,
                "e_plus": self.e_plus, "e_rel": self.e_rel, "verdict": self.verdict}


# --------------------------------------------------------------------------
# objective and gradient
# --------------------------------------------------------------------------

def objective_subgradient(swarm, rho, k: ScaledKernel, grid: QuadratureGrid,
                          normalize: bool = True, rho_values=None):
    """Quadrature error and its gradient with respect to every robot position.

    Returns ``(e, grad)`` with ``grad`` shaped like the positions. Cells where
    the blob field equals the target contribute zero (sign(0) = 0).
    """
    if k.kernel != "gaussian":
        raise UnsupportedGradientError("analytic gradient needs the gaussian kernel; "
                                       "use finite_difference_gradient instead")
    p = np.atleast_2d(swarm.positions if isinstance(swarm, SwarmConfig) else np.asarray(swarm, float))
    rv = rho.on_grid(grid) if rho_values is None else rho_values
    gx, gy = gaussian_factors(p, k, grid)
    s = gx.T @ gy
    if normalize:
        denom = boundary_masses(p, k, grid.domain).sum()
    else:
        denom = float(p.shape[0])
    f = s / denom
    diff = f - rv
    area = grid.cell_area
    e = float(np.abs(diff).sum() * area)
    sg = np.sign(diff)
    d2 = k.delta ** 2
    # d/dx_i of the blob at z is (z - x_i)/delta^2 times the blob
    hx = gx * (grid.xc[None, :] - p[:, 0:1]) / d2
    hy = gy * (grid.yc[None, :] - p[:, 1:2]) / d2
    tx = np.einsum("ib,ib->i", hx @ sg, gy)
    ty = np.einsum("ib,ib->i", gx @ sg, hy)
    grad = np.stack([tx, ty], axis=1) / denom
    if normalize:
        total = float((sg * s).sum())
        grad -= boundary_mass_gradient(p, k, grid.domain) * total / denom ** 2
    return e, grad * area


def finite_difference_gradient(positions, rho_values, k, grid, h=1e-4, normalize=True):
    p = np.array(positions, dtype=float)
    out = np.zeros_like(p)
    for i in range(p.shape[0]):
        for j in range(2):
            a = p.copy()
            b = p.copy()
            a[i, j] += h
            b[i, j] -= h
            out[i, j] = (error_value(a, rho_values, k, grid, normalize)
                         - error_value(b, rho_values, k, grid, normalize)) / (2 * h)
    return out


# --------------------------------------------------------------------------
# local search
# --------------------------------------------------------------------------

@dataclass
class LocalResult:
    swarm: SwarmConfig
    e: float
    iters: int
    history: List[float]


def local_minimize(start, rho, k: ScaledKernel, grid: QuadratureGrid,
                   settings: OptimizerSettings = OptimizerSettings(), sense: str = "min",
                   rho_values=None, normalize: bool = True) -> LocalResult:
    """Projected gradient descent with Armijo backtracking over positions in the domain.

    ``sense="max"`` ascends instead. Trial steps use the Barzilai-Borwein
    length; every accepted step satisfies the sufficient-decrease test, so the
    recorded objective is monotone.
    """
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    sign = 1.0 if sense == "min" else -1.0
    dom = grid.domain
    rv = rho.on_grid(grid) if rho_values is None else rho_values
    x = dom.project(np.array(start.positions if isinstance(start, SwarmConfig) else start, dtype=float))

    def fg(y):
        e, g = objective_subgradient(y, rho, k, grid, normalize=normalize, rho_values=rv)
        if not (math.isfinite(e) and np.all(np.isfinite(g))):
            raise OptimizationError(f"non-finite objective/gradient (e={e}) at iterate with "
                                    f"bounds {y.min(0)}..{y.max(0)}")
        return sign * e, sign * g

    f, g = fg(x)
    history = [sign * f]
    gmax = float(np.abs(g).max())
    t = settings.initial_step / gmax if gmax > 0 else 1.0
    it = 0
    # gradient below this is stationary to working precision (objective is O(1))
    g_floor = 1e-12 / max(dom.width, dom.height)
    for it in range(1, settings.max_iters + 1):
        if gmax <= g_floor:
            it -= 1
            break
        accepted = False
        trial = t
        while trial * max(gmax, 1e-300) > 1e-10:
            x_new = dom.project(x - trial * g)
            d = x_new - x
            dd = float(np.vdot(g, d))
            if dd >= 0 or not np.any(d):
                break
            f_new, g_new = fg(x_new)
            if f_new <= f + settings.armijo * dd:
                accepted = True
                break
            trial *= settings.backtrack
        if not accepted:
            it -= 1
            break
        s_vec = x_new - x
        y_vec = g_new - g
        sy = float(np.vdot(s_vec, y_vec))
        t = float(np.vdot(s_vec, s_vec)) / sy if sy > 0 else trial / settings.backtrack
        t = min(max(t, 1e-8 / max(gmax, 1e-300)), 1e8)
        x, f, g = x_new, f_new, g_new
        gmax = float(np.abs(g).max())
        history.append(sign * f)
        w = settings.window
        if len(history) > w:
            ref = history[-1 - w]
            if abs(ref - history[-1]) <= settings.rel_tol * max(abs(ref), 1e-12):
                break
    return LocalResult(SwarmConfig(x), sign * f, it, history)


def _starts(rho, grid, n_robots, settings: OptimizerSettings, sense: str):
    seqs = np.random.SeedSequence([settings.seed, 0 if sense == "min" else 1]).spawn(settings.n_starts)
    out = []
    for i, ss in enumerate(seqs):
        rng = np.random.default_rng(ss)
        if settings.informed_start and i == 0 and sense == "min":
            out.append(("rho-sampled", sample_positions(rho, n_robots, rng=rng).positions))
        elif settings.informed_start and i == 0 and sense == "max":
            # one start with the whole swarm stacked at a random point
            c = uniform_positions(grid.domain, 1, rng)
            out.append(("coincident", np.repeat(c, n_robots, axis=0)))
        else:
            out.append(("uniform", uniform_positions(grid.domain, n_robots, rng)))
    return out


def multistart_extrema(rho, k: ScaledKernel, grid: QuadratureGrid, n_robots: int,
                       settings: OptimizerSettings = OptimizerSettings(),
                       senses: Sequence[str] = ("min", "max"),
                       progress=None) -> ExtremaResult:
    """Best local minimum and maximum over ``settings.n_starts`` seeded starts per sense."""
    rv = rho.on_grid(grid)
    records: List[StartRecord] = []
    best = {}
    for sense in senses:
        starts = _starts(rho, grid, n_robots, settings, sense)

        def run(item):
            i, (kind, x0) = item
            try:
                res = local_minimize(x0, rho, k, grid, settings, sense, rho_values=rv)
            except OptimizationError as exc:
                log.warning("start %d (%s) failed: %s", i, sense, exc)
                return i, kind, None
            if progress:
                progress(sense, i, res.e)
            return i, kind, res

        if settings.threads > 1:
            with ThreadPoolExecutor(settings.threads) as ex:
                results = list(ex.map(run, enumerate(starts)))
        else:
            results = [run(item) for item in enumerate(starts)]
        ok = [(i, kind, r) for i, kind, r in results if r is not None]
        if not ok:
            raise OptimizationError(f"all {len(starts)} starts failed for sense={sense}")
        for i, kind, r in ok:
            records.append(StartRecord(i, sense, kind, r.e, r.iters, r.history))
        # ties broken by lowest start id
        if sense == "min":
            i, _, r = min(ok, key=lambda t: (t[2].e, t[0]))
        else:
            i, _, r = min(ok, key=lambda t: (-t[2].e, t[0]))
        best[sense] = r
    lo = best.get("min")
    hi = best.get("max")
    e_minus = lo.e if lo else float("nan")
    e_plus = hi.e if hi else float("nan")
    return ExtremaResult(e_minus, e_plus, lo.swarm if lo else None, hi.swarm if hi else None,
                         records, settings.n_starts, settings.seed)


def relative_error(e_observed: float, extrema) -> RelativeErrorReport:
    """Where ``e_observed`` sits between the realizable bounds (0 = best, 1 = worst)."""
    if isinstance(extrema, ExtremaResult):
        lo, hi = extrema.e_minus, extrema.e_plus
    else:
        lo, hi = extrema
    if not hi > lo:
        raise DegenerateBenchmarkError(f"need e_plus > e_minus, got {lo}, {hi}")
    return RelativeErrorReport(e_observed, lo, hi, (e_observed - lo) / (hi - lo))


# --------------------------------------------------------------------------
# design sweep
# --------------------------------------------------------------------------

@dataclass
class SweepRow:
    n: int
    delta: float
    e_min: float
    suspect: bool = False
    error: Optional[str] = None


def _min_over_positions(rho, delta, grid, n, settings):
    k = ScaledKernel("gaussian", delta)
    return multistart_extrema(rho, k, grid, n, settings, senses=("min",)).e_minus


def design_sweep(rho, k: ScaledKernel, grid: QuadratureGrid, n_values: Sequence[int],
                 settings: OptimizerSettings = OptimizerSettings(n_starts=5),
                 optimize_delta: bool = False, delta_bounds=None,
                 delta_tol: float = 0.05) -> List[SweepRow]:
    """Minimum error for each swarm size, optionally with the blob radius free.

    Points where the minimum rises by more than 2% over a smaller swarm are
    flagged ``suspect`` (more robots can always mimic fewer).
    """
    if not n_values:
        raise ValueError("n_values must be nonempty")
    dom = grid.domain
    lo, hi = delta_bounds or (0.1, min(dom.width, dom.height) / 2)
    rows: List[SweepRow] = []
    for n in n_values:
        try:
            if optimize_delta:
                cache = {}

                def f(d):
                    if d not in cache:
                        cache[d] = _min_over_positions(rho, d, grid, n, settings)
                    return cache[d]

                d_best, e_best = golden_section(f, lo, hi, tol=delta_tol)
                # the fixed radius is a feasible point of the enlarged problem
                e_fixed = f(k.delta)
                if e_fixed < e_best:
                    d_best, e_best = k.delta, e_fixed
                rows.append(SweepRow(n, d_best, e_best))
            else:
                rows.append(SweepRow(n, k.delta, _min_over_positions(rho, k.delta, grid, n, settings)))
        except OptimizationError as exc:
            rows.append(SweepRow(n, float("nan"), float("nan"), error=str(exc)))
    running = math.inf
    for r in rows:
        if math.isfinite(r.e_min):
            if r.e_min > running * 1.02:
                r.suspect = True
            running = min(running, r.e_min)
    return rows
