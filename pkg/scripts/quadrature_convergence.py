"""Rectangle-rule convergence of the error metric under grid halving.

Compares a smooth two-Gaussian target with a target that jumps across x = 1/3.

    python scripts/quadrature_convergence.py
"""

import numpy as np

from swarmcov.domain import (GaussianMixtureDensity, QuadratureGrid, RectDomain, ScaledKernel,
                             UniformDensity, sample_positions)
from swarmcov.metric import error_metric


class StepDensity(UniformDensity):
    def _raw(self, x, y):
        return np.where(np.asarray(x) < 1 / 3, 2.0, 1.0)

    def raw_mass(self):
        return 4 / 3

    def peak(self):
        return 2.0 / self.normalization_constant


def main(sizes=(25, 50, 100, 200, 400), oracle=3200, n_swarms=10):
    dom = RectDomain(0.0, 1.0, 0.0, 1.0)
    smooth = GaussianMixtureDensity(dom, [1, 1], [[0.35, 0.4], [0.65, 0.6]], [0.15, 0.2]).normalized()
    k = ScaledKernel("gaussian", 0.1)
    swarms = [sample_positions(smooth, 20, seed=s).positions for s in range(n_swarms)]
    for name, rho in [("smooth", smooth), ("jump", StepDensity(dom).normalized())]:
        err = np.zeros(len(sizes))
        for p in swarms:
            ref = error_metric(p, rho, k, QuadratureGrid(dom, oracle, oracle)).e
            err += [abs(error_metric(p, rho, k, QuadratureGrid(dom, n, n)).e - ref) for n in sizes]
        err /= n_swarms
        print(f"{name:6s} mean |e_h - e_ref|: " + "  ".join(f"{e:.2e}" for e in err))
        print(f"{name:6s} halving ratios:     " + "  ".join(f"{r:.2f}" for r in err[:-1] / err[1:]))


if __name__ == "__main__":
    main()
