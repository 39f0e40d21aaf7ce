"""Minimum error as a function of swarm size, optionally with the blob radius free.

    python scripts/design_sweep.py --n 10 20 40 80 160 --starts 5 --optimize-delta
"""

import argparse

from swarmcov import io
from swarmcov.extrema import OptimizerSettings, design_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[10, 20, 40, 80, 160, 256])
    ap.add_argument("--starts", type=int, default=5)
    ap.add_argument("--optimize-delta", action="store_true")
    ap.add_argument("--out", default="results/sweep.csv")
    args = ap.parse_args()

    sc = io.scenario_from_dict(io.ring_scenario_dict())
    rows = design_sweep(sc.density, sc.kernel, sc.grid, args.n, OptimizerSettings(n_starts=args.starts),
                        optimize_delta=args.optimize_delta)
    io.write_table(args.out, ["N", "delta", "e_min"], [(r.n, r.delta, r.e_min) for r in rows])
    for r in rows:
        flag = "  suspect (rises over a smaller swarm)" if r.suspect else ""
        print(f"N = {r.n:4d}  delta = {r.delta:.3f}  e_min = {r.e_min:.5f}{flag}")


if __name__ == "__main__":
    main()
