"""Noiseless VQE potential-energy scans over the shipped fixture groups.

    python3 scripts/run_scan.py [--groups h2_631g,lih_sto3g] [--out results/]

Writes ``scan_<group>.csv`` and, when matplotlib is available, ``scan_<group>.png``.
"""

from __future__ import annotations

import argparse
from pathlib import Path

from qee.encoder import build_hamiltonian
from qee.fixtures import FixtureStore
from qee.vqe import CHEMICAL_ACCURACY, AnsatzSpec, OptimizerConfig, scan_to_csv, surface_scan


def run_group(store, group, seed):
    points = []
    for fx in store.group(group):
        ham = build_hamiltonian(fx.space(), fx.spin_table())
        points.append((fx.distance, ham, {"exact": fx.reference["e_fci"], "e_hf": fx.reference["e_hf"]}))
    spec = AnsatzSpec(points[0][1].n_qubits, reps=2)
    return surface_scan(points, spec, OptimizerConfig(seed=seed))


def plot(scan, path, title):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return False
    d = [p.distance for p in scan]
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(5, 6))
    top.plot(d, [p.exact for p in scan], "k-", label="exact")
    top.plot(d, [p.hartree_fock for p in scan], "b--", label="Hartree-Fock")
    top.plot(d, [p.energy for p in scan], "ro", ms=3, label="VQE")
    top.set_ylabel("energy / Ha")
    top.set_title(title)
    top.legend()
    bottom.semilogy(d, [abs(p.error) for p in scan], "ro", ms=3)
    bottom.axhline(CHEMICAL_ACCURACY, color="gray", ls=":")
    bottom.set_xlabel("bond length / Angstrom")
    bottom.set_ylabel("|VQE - exact| / Ha")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--groups", default="h2_631g,lih_sto3g")
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store = FixtureStore()
    for group in args.groups.split(","):
        scan = run_group(store, group, args.seed)
        (out / f"scan_{group}.csv").write_text(scan_to_csv(scan))
        plot(scan, out / f"scan_{group}.png", group)
        worst = max(scan, key=lambda p: abs(p.error))
        inside = sum(abs(p.error) < CHEMICAL_ACCURACY for p in scan)
        minimum = min(scan, key=lambda p: p.energy)
        print(f"{group}: {inside}/{len(scan)} points within chemical accuracy; "
              f"worst {worst.error:.2e} at {worst.distance} A; VQE minimum at {minimum.distance} A")


if __name__ == "__main__":
    main()
