"""Raw versus merged Pauli-term counts and encoding time on random integrals.

    python3 scripts/bench.py [--grid 4:2,8:2,16:2,6:3,12:3] [--out results/bench.csv]
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

from qee.cli import bench_point, loglog_slopes


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", default="4:2,6:2,8:2,12:2,16:2,20:2,6:3,8:3,12:3")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/bench.csv")
    args = ap.parse_args(argv)
    grid = [tuple(int(v) for v in item.split(":")) for item in args.grid.split(",")]
    points = [bench_point(n, m, args.seed + i) for i, (n, m) in enumerate(grid)]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(points[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(points)
    for p in points:
        print(f"N={p['n']:3d} m={p['m']} Q={p['qubits']:2d} raw={p['raw_measured']:>9} "
              f"merged={p['merged_terms']:>7} {p['seconds']:.4f}s")
    for m, s in loglog_slopes(points).items():
        print(f"m={m}: time ~ N^{s:.2f}")


if __name__ == "__main__":
    main()
