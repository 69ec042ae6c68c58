#!/usr/bin/env python3
"""Growth of the second Picard iterate, periodic and non-periodic.

Periodic: fitted exponent of R(N, t) against N for several s.
Non-periodic: compensated lower bound across N.
"""
import argparse
from pathlib import Path

import numpy as np

from rbolab import serialize as io
from rbolab.experiments import illposed_nonperiodic, illposed_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, nargs="+", default=[-0.25, -0.5, -0.75])
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--out", type=Path, default=Path("runs/illposed"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    Ns = 2 ** np.arange(5, 12)
    scans = []
    for s in args.s:
        scan = illposed_scan(s, args.t, Ns)
        scans.append(scan.to_dict())
        io.write_columns(args.out / f"ratio_s={s:g}.dat", "N R", scan.N, scan.ratios)
        print(f"s={s:g}: slope={scan.slope:.5f} (expected {-s:g}), onset N={scan.onset}, "
              f"{'pass' if scan.passed else 'FAIL'}")

    rows = []
    for N in (16, 32, 64, 128):
        r = illposed_nonperiodic(N, -0.5, args.eps)
        rows.append((N, r.t, r.lower_bound, r.compensated))
        print(f"N={N:4d}  t={r.t:.4f}  lower bound={r.lower_bound:.6e}  "
              f"compensated={r.compensated:.6f}")
    io.write_csv(args.out / "nonperiodic.csv", ["N", "t", "lower_bound", "compensated"], rows)
    io.write_json(args.out / "summary.json", {"periodic": scans, "nonperiodic": rows})


if __name__ == "__main__":
    main()
