import json

import numpy as np
import pytest

from swarmcov.domain import (GaussianMixtureDensity, QuadratureGrid, RectDomain, ScaledKernel,
                             UniformDensity)
from swarmcov.extrema import (DegenerateBenchmarkError, OptimizerSettings, UnsupportedGradientError, design_sweep,
                              finite_difference_gradient, local_minimize, multistart_extrema,
                              objective_subgradient, relative_error)
from swarmcov.metric import blob_function, error_value, kernel_sum


def _flip_free(p, i, j, h, rv, k, grid):
    """True when moving coordinate (i, j) by +-h changes no cell's sign."""
    signs = []
    for s in (-h, 0.0, h):
        q = p.copy()
        q[i, j] += s
        signs.append(np.sign(blob_function(q, k, grid).values - rv))
    return np.array_equal(signs[0], signs[1]) and np.array_equal(signs[1], signs[2])


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_central_differences(seed, ring):
    rng = np.random.default_rng(seed)
    grid = QuadratureGrid(ring.domain, 48, 70)
    k = ScaledKernel("gaussian", 2.0)
    p = np.c_[rng.uniform(0, 48, 6), rng.uniform(0, 70, 6)]
    rv = ring.on_grid(grid)
    e, g = objective_subgradient(p, ring, k, grid, rho_values=rv)
    assert e == pytest.approx(error_value(p, rv, k, grid), rel=1e-13)
    h = 1e-5
    fd = finite_difference_gradient(p, rv, k, grid, h=h)
    checked = 0
    for i in range(p.shape[0]):
        for j in range(2):
            if _flip_free(p, i, j, h, rv, k, grid):
                assert abs(g[i, j] - fd[i, j]) <= max(1e-3, 0.01 * abs(fd[i, j]))
                checked += 1
    assert checked >= 6


def test_gradient_kde_form(mixture):
    rng = np.random.default_rng(1)
    grid = QuadratureGrid(mixture.domain, 40, 40)
    k = ScaledKernel("gaussian", 0.1)
    p = rng.uniform(0, 1, (5, 2))
    rv = mixture.on_grid(grid)
    _, g = objective_subgradient(p, mixture, k, grid, normalize=False, rho_values=rv)
    fd = finite_difference_gradient(p, rv, k, grid, h=1e-6, normalize=False)
    np.testing.assert_allclose(g, fd, atol=1e-5)


def test_disc_kernel_has_no_analytic_gradient(unit_square):
    with pytest.raises(UnsupportedGradientError):
        objective_subgradient([[0.5, 0.5]], UniformDensity(unit_square),
                              ScaledKernel("indicator_disc", 0.1), QuadratureGrid(unit_square, 10, 10))


@pytest.mark.parametrize("sense", ["min", "max"])
def test_local_search_monotone_and_feasible(sense, ring):
    grid = QuadratureGrid(ring.domain, 48, 70)
    k = ScaledKernel("gaussian", 2.0)
    x0 = np.random.default_rng(4).uniform(0, 1, (15, 2)) * [48, 70]
    res = local_minimize(x0, ring, k, grid, OptimizerSettings(max_iters=200), sense=sense)
    h = np.array(res.history)
    d = np.diff(h)
    assert np.all(d <= 1e-15) if sense == "min" else np.all(d >= -1e-15)
    assert np.all(ring.domain.contains(res.swarm.positions))
    assert res.e == pytest.approx(h[-1])


def test_center_is_stationary_for_uniform_target(unit_square):
    rho = UniformDensity(unit_square)
    grid = QuadratureGrid(unit_square, 40, 40)
    k = ScaledKernel("gaussian", 0.3)
    _, g = objective_subgradient([[0.5, 0.5]], rho, k, grid)
    assert np.max(np.abs(g)) < 1e-12
    # and it is the minimizer: nearby placements are worse
    rv = rho.on_grid(grid)
    e0 = error_value([[0.5, 0.5]], rv, k, grid)
    for d in [(0.05, 0), (0, -0.05), (0.03, 0.03)]:
        assert error_value([[0.5 + d[0], 0.5 + d[1]]], rv, k, grid) > e0
    res = local_minimize([[0.5, 0.5]], rho, k, grid, OptimizerSettings(max_iters=50))
    np.testing.assert_allclose(res.swarm.positions, [[0.5, 0.5]], atol=1e-12)


def test_start_at_argmin_returns_start(ring):
    grid = QuadratureGrid(ring.domain, 48, 70)
    k = ScaledKernel("gaussian", 2.0)
    x0 = np.random.default_rng(2).uniform(0, 1, (10, 2)) * [48, 70]
    s = OptimizerSettings(max_iters=2000)
    first = local_minimize(x0, ring, k, grid, s)
    again = local_minimize(first.swarm, ring, k, grid, s)
    assert again.e <= first.e
    assert again.e == pytest.approx(first.e, rel=1e-5)


def test_descent_step_out_of_surplus(unit_square):
    rho = UniformDensity(unit_square)
    grid = QuadratureGrid(unit_square, 40, 40)
    k = ScaledKernel("gaussian", 0.1)
    p = np.array([[0.3, 0.5], [0.32, 0.5], [0.7, 0.5]])
    e0, g = objective_subgradient(p, rho, k, grid)
    q = p.copy()
    q[0] -= 1e-3 * g[0] / np.linalg.norm(g[0])
    assert error_value(q, rho.on_grid(grid), k, grid) < e0


def test_single_robot_argmin_is_interior(unit_square):
    rho = UniformDensity(unit_square)
    grid = QuadratureGrid(unit_square, 50, 50)
    k = ScaledKernel("gaussian", 0.08)
    res = multistart_extrema(rho, k, grid, 1, OptimizerSettings(n_starts=3, max_iters=300), senses=("min",))
    x = res.argmin.positions[0]
    assert np.all((x > 0.2) & (x < 0.8))
    rv = rho.on_grid(grid)
    for c in unit_square.corners():
        assert res.e_minus < error_value(c[None, :], rv, k, grid)


def test_multistart_small_run(ring, ring_grid):
    grid = ring_grid
    k = ScaledKernel("gaussian", 2.0)
    s = OptimizerSettings(n_starts=3, max_iters=150, seed=7)
    a = multistart_extrema(ring, k, grid, 20, s)
    assert 0 <= a.e_minus <= a.e_plus <= 2
    assert np.all(ring.domain.contains(a.argmin.positions))
    assert np.all(ring.domain.contains(a.argmax.positions))
    b = multistart_extrema(ring, k, grid, 20, s)
    assert a.e_minus == b.e_minus and a.e_plus == b.e_plus
    assert np.array_equal(a.argmin.positions, b.argmin.positions)
    c = multistart_extrema(ring, k, grid, 20, OptimizerSettings(n_starts=3, max_iters=150, seed=7, threads=3))
    assert c.e_minus == a.e_minus and c.e_plus == a.e_plus
    d = a.to_dict("argmin.csv", "argmax.csv")
    json.dumps(d)
    assert d["n_starts"] == 3 and len(d["per_start"]) == 6
    assert "upper bound" in d["e_minus_is"] and "lower bound" in d["e_plus_is"]
    # the reported values are the best of the per-start values
    assert a.e_minus == min(r.value for r in a.per_start if r.sense == "min")
    assert a.e_plus == max(r.value for r in a.per_start if r.sense == "max")


def test_relative_error_formula():
    r = relative_error(0.5157, (0.28205, 1.9867))
    assert r.e_rel == pytest.approx((0.5157 - 0.28205) / (1.9867 - 0.28205), rel=1e-15)
    assert r.e_rel == pytest.approx(0.1371, abs=1e-4)
    assert r.verdict == "intermediate"
    assert relative_error(0.3, (0.28, 1.98)).verdict.startswith("quite close")
    assert relative_error(1.5, (0.28, 1.98)).verdict == "rather poor"
    assert relative_error(0.28, (0.28, 1.98)).e_rel == 0.0
    assert relative_error(1.98, (0.28, 1.98)).e_rel == 1.0
    with pytest.raises(DegenerateBenchmarkError):
        relative_error(0.5, (0.4, 0.4))


def test_design_sweep_on_gaussian_target(unit_square):
    rho = GaussianMixtureDensity(unit_square, [1.0], [[0.5, 0.5]], [0.15]).normalized()
    grid = QuadratureGrid(unit_square, 40, 40)
    k = ScaledKernel("gaussian", 0.08)
    s = OptimizerSettings(n_starts=2, max_iters=300)
    rows = design_sweep(rho, k, grid, [1, 4, 16, 64], s)
    e = [r.e_min for r in rows]
    assert e[-1] < 0.1
    for a, r in zip(e[:-1], rows[1:]):
        assert r.suspect == (r.e_min > min(e[:rows.index(r)]) * 1.02)
    assert e[-1] <= e[0]


def test_design_sweep_free_radius_not_worse(unit_square):
    rho = GaussianMixtureDensity(unit_square, [1.0], [[0.5, 0.5]], [0.15]).normalized()
    grid = QuadratureGrid(unit_square, 30, 30)
    k = ScaledKernel("gaussian", 0.08)
    s = OptimizerSettings(n_starts=1, max_iters=200)
    fixed = design_sweep(rho, k, grid, [3], s)[0]
    free = design_sweep(rho, k, grid, [3], s, optimize_delta=True, delta_tol=0.02)[0]
    assert free.e_min <= fixed.e_min + 1e-9
    assert 0.1 <= free.delta <= 0.5


def test_sweep_requires_values(unit_square):
    with pytest.raises(ValueError):
        design_sweep(UniformDensity(unit_square), ScaledKernel("gaussian", 0.1),
                     QuadratureGrid(unit_square, 10, 10), [])
