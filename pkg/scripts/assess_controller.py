"""Full assessment of the stand-in Metropolis controller on the ring scenario.

Thin wrapper over ``swarmcov assess --simulate`` with the reproduction defaults.

    python scripts/assess_controller.py --starts 50 --m 1000 --out results/assess
"""

import sys

from swarmcov.cli import main

if __name__ == "__main__":
    argv = ["assess", "--simulate"] + sys.argv[1:]
    if "--out" not in argv:
        argv += ["--out", "results/assess"]
    sys.exit(main(argv))
