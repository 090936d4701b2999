#!/usr/bin/env python3
"""Run the full suite twice with one seed, report wall time and whether results.csv matches."""

import argparse
import filecmp
import tempfile
import time
from pathlib import Path

from fracsing.cli import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--levels", type=int, default=None, help="1 = coarsest meshes")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="./out/full-suite")
    a = ap.parse_args()

    first = Path(a.out)
    t0 = time.perf_counter()
    code = run(RunConfig("full-suite", levels=a.levels, seed=a.seed, output_dir=str(first)),
               workers=a.workers)
    wall = time.perf_counter() - t0
    print(f"full-suite exit={code} wall={wall:.1f}s -> {first}")
    with tempfile.TemporaryDirectory() as tmp:
        run(RunConfig("full-suite", levels=a.levels, seed=a.seed, output_dir=tmp), workers=a.workers)
        same = filecmp.cmp(first / "results.csv", Path(tmp) / "results.csv", shallow=False)
    print(f"second run byte-identical: {same}")
    return 0 if code == 0 and same and wall < 600 else 1


if __name__ == "__main__":
    raise SystemExit(main())
