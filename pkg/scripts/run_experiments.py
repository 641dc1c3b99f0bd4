"""Run the three shipped experiments and print their summary tables.

    python scripts/run_experiments.py --out results/ [--jobs N] [--trials N] [1 2 3]
"""

import argparse
import time
from pathlib import Path

from conescoop.harness import experiment_configs, run_sweep, write_outputs


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("experiments", nargs="*", type=int, default=[1, 2, 3])
    ap.add_argument("--out", default="results")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--trials", type=int)
    args = ap.parse_args()
    for n in args.experiments:
        t0 = time.perf_counter()
        sweep = run_sweep(experiment_configs(n, trials=args.trials), jobs=args.jobs)
        paths = write_outputs(sweep, Path(args.out) / f"experiment{n}")
        print(f"## experiment {n} ({(time.perf_counter() - t0) / 60:.1f} min)\n")
        print(paths["summary"].read_text())


if __name__ == "__main__":
    main()
