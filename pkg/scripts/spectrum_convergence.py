#!/usr/bin/env python3
"""Low spectrum of the linearised rBO operator under window doubling."""
import argparse
import math
from pathlib import Path

from rbolab import serialize as io
from rbolab.fourier import hilbert_deriv, make_grid
from rbolab.linop import assemble, eigen_report, kernel_vector
from rbolab.waves import rbo_wave


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, default=4.0)
    ap.add_argument("--L", type=float, default=2 * math.pi)
    ap.add_argument("--M", type=int, nargs="+", default=[24, 48, 96, 192])
    ap.add_argument("--out", type=Path, default=Path("runs/spectrum"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    N = max(256, 4 * max(args.M))
    wave = rbo_wave(args.c, args.L, make_grid(N, 2 * args.L))
    rows = []
    for M in args.M:
        A = assemble(wave, hilbert_deriv(), 1, M)
        rep = eigen_report(A, kernel_vector(A, wave))
        lam = rep.eigenvalues
        rows.append((M, lam[0], lam[1], lam[2], lam[3], rep.count_negative,
                     rep.kernel_alignment))
        print(f"M={M:4d}  lambda0={lam[0]:.12f}  lambda1={lam[1]:+.2e}  "
              f"lambda2={lam[2]:.12f}  negatives={rep.count_negative}")
    io.write_csv(args.out / "low_spectrum.csv",
                 ["M", "lambda0", "lambda1", "lambda2", "lambda3", "negatives", "alignment"], rows)


if __name__ == "__main__":
    main()
