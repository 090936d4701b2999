#!/usr/bin/env python3
"""Capacity of balls, points and segments against mesh spacing.

Prints one TSV row per (set, h): the extension energy mu, the Fourier
capacity (positive-capacity sets only) and mu / (2 N(sigma) Cap).
"""

import argparse

from fracsing import capacity as capm
from fracsing.core import constants
from fracsing.lattice import parse_set

SETS = {2: ["ball(0,0;0.25)", "point(0,0)", "strip(1;0.25)"],
        3: ["ball(0,0,0;0.25)", "point(0,0,0)", "strip(1;0.25)"]}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=2, choices=(2, 3))
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--h0", type=float, default=0.1)
    a = ap.parse_args()
    Ns = constants(a.n, a.sigma).N_sigma
    print("set\th\tmu\tcap\tratio")
    for spec in SETS[a.n]:
        L = parse_set(spec, a.n)
        positive = L.dim > a.n - 2 * a.sigma
        outer = None if positive else max(2.0, 4 * L.diameter()) if L.diameter() else 1.0
        for lev in range(a.levels):
            h = a.h0 / 2 ** lev
            mu = capm.mu_extension(L, outer, (a.n, a.sigma), h).value
            cap = capm.cap_fourier(L, h, (a.n, a.sigma)).value if positive else float("nan")
            print(f"{spec}\t{h:g}\t{mu:.6g}\t{cap:.6g}\t{mu / (2 * Ns * cap):.4f}")


if __name__ == "__main__":
    main()
