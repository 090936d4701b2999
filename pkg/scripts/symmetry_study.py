#!/usr/bin/env python3
"""Symmetry ratio of a tilted cylindrical profile against the radius and the
(8r/eps+1)^((n-2sigma)/2) bound."""

import argparse

import numpy as np

from fracsing.fraclap import cylindrical_solution
from fracsing.lattice import AffineStrip
from fracsing.probes import symmetry_ratio


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--tilt", type=float, default=0.1)
    a = ap.parse_args()
    L = AffineStrip.coordinate(a.n, a.k)
    e = np.eye(a.n)[a.k]
    u = lambda x: cylindrical_solution(x, (a.n, a.sigma), 1.0, a.k) * (1 + a.tilt * (x @ e))
    print("r\tratio\tbound\tok")
    for r in np.geomspace(0.03, 1e-4, 10):
        ratio, bound, ok = symmetry_ratio(u, L, np.zeros(a.n), r, (a.n, a.sigma))
        print(f"{r:.3g}\t{ratio:.8f}\t{bound:.6f}\t{ok}")


if __name__ == "__main__":
    main()
