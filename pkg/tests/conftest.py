import numpy as np
import pytest

from swarmcov.domain import (GaussianMixtureDensity, QuadratureGrid, RectDomain, RingDensity,
                             ScaledKernel, UniformDensity)


@pytest.fixture(scope="session")
def ring():
    return RingDensity.benchmark_ring().normalized()


@pytest.fixture(scope="session")
def ring_grid(ring):
    return QuadratureGrid.for_delta(ring.domain, 2.0)


@pytest.fixture(scope="session")
def gauss2():
    return ScaledKernel("gaussian", 2.0)


@pytest.fixture(scope="session")
def unit_square():
    return RectDomain(0.0, 1.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def mixture(unit_square):
    return GaussianMixtureDensity(unit_square, [1.0, 1.0], [[0.35, 0.4], [0.65, 0.6]],
                                  [0.15, 0.2]).normalized()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Record (and echo) the one-line verdict of an acceptance criterion."""

    def log(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
