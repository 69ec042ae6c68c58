#!/usr/bin/env python3
"""Scalar stability indicators of the BBM cnoidal family along k.

Tabulates c(k), w(k), dw/dk, a~(k), s~(k) and the index I = -dF/dc; the
sign of s~ is only reported.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from rbolab import serialize as io
from rbolab.fourier import make_grid, neg_second_deriv
from rbolab.linop import stability_index
from rbolab.waves import bbm_k0, bbm_k_L, bbm_scalars, bbm_wave_at_speed


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--L", type=float, default=8.0)
    ap.add_argument("--points", type=int, default=50)
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--out", type=Path, default=Path("runs/bbm"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    L = args.L
    kmax = 0.9 * min(bbm_k0(L), bbm_k_L(L))
    cstar = 1 + 4 * math.pi**2 / (L * L - 4 * math.pi**2)
    g = make_grid(args.N, L)
    rows = []
    for k in np.linspace(0.01, kmax, args.points):
        sc = bbm_scalars(L, k)
        h = min(1e-4, 0.25 * (sc.c - cstar))
        idx = stability_index(lambda s: bbm_wave_at_speed(s, L, g).field, sc.c, h,
                              neg_second_deriv())
        rows.append((k, sc.c, sc.w, sc.dw_dk, sc.a_tilde, sc.s_tilde, idx.I))
    data = np.array(rows)
    io.write_csv(args.out / "indicators.csv",
                 ["k", "c", "w", "dw_dk", "a_tilde", "s_tilde", "I"], rows)
    print(f"k in [0.01, {kmax:.4f}], {args.points} points")
    print(f"dw/dk > 0: {bool(np.all(data[:, 3] > 0))}")
    print(f"a~ increasing: {bool(np.all(np.diff(data[:, 4]) > 0))}")
    print(f"c increasing: {bool(np.all(np.diff(data[:, 1]) > 0))}")
    print(f"I < 0: {bool(np.all(data[:, 6] < 0))}  (range {data[:, 6].min():.4g} .. "
          f"{data[:, 6].max():.4g})")
    neg = data[data[:, 5] <= 0, 0]
    print(f"s~ > 0 everywhere: {neg.size == 0}" + ("" if neg.size == 0 else
          f"; non-positive for k in [{neg.min():.4f}, {neg.max():.4f}]"))


if __name__ == "__main__":
    main()
