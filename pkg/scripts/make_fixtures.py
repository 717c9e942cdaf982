"""Regenerate the integral fixture corpus with PySCF.

    python3 scripts/make_fixtures.py [--out src/qee/data/fixtures]

Needs ``pyscf`` (not a runtime dependency).  Each fixture stores active-space
integrals in chemist notation with the nuclear repulsion plus frozen-core
energy as the constant, and records HF / FCI reference energies.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np
import pyscf
from pyscf import ao2mo, fci, gto, scf, symm

from qee.fixtures import MANIFEST, sha256_of
from qee.integrals import CHEMIST, IntegralTable, OrbitalLayout, emit_fcidump, emit_json_integrals

COMMAND = "python3 scripts/make_fixtures.py"

# (name, atoms, distance, frozen, removed, filter with m, sz) ; symmetry off
TABLE_ROWS = [
    ("survey_lih_0_3", ("Li", "H"), 1.595, [0], [3], "sz"),
    ("survey_hf_none", ("F", "H"), 0.917, [], [], "sz"),
    ("survey_hf_0", ("F", "H"), 0.917, [0], [], "m"),
    ("survey_hcl_0", ("Cl", "H"), 1.275, [0], [], "m"),
    ("survey_hcl_0_1", ("Cl", "H"), 1.275, [0, 1], [], "sz"),
    ("survey_hbr_0-2", ("Br", "H"), 1.414, list(range(3)), [], "sz"),
    ("survey_hbr_0-4", ("Br", "H"), 1.414, list(range(5)), [], "sz"),
    ("survey_f2_0_1", ("F", "F"), 1.412, [0, 1], [], "sz"),
    ("survey_cl2_0_1", ("Cl", "Cl"), 1.988, [0, 1], [], "sz"),
    ("survey_cl2_0-9", ("Cl", "Cl"), 1.988, list(range(10)), [], "sz"),
    ("survey_br2_0-27", ("Br", "Br"), 2.281, list(range(28)), [], "sz"),
    ("survey_i2_0-45", ("I", "I"), 2.666, list(range(46)), [], "sz"),
]


MOLECULE_NAMES = {("Li", "H"): "LiH", ("F", "H"): "HF", ("Cl", "H"): "HCl", ("Br", "H"): "HBr",
                  ("F", "F"): "F2", ("Cl", "Cl"): "Cl2", ("Br", "Br"): "Br2", ("I", "I"): "I2"}


def _label(indices):
    if not indices:
        return "N/A"
    if len(indices) > 2 and indices == list(range(indices[0], indices[-1] + 1)):
        return f"{indices[0]}-{indices[-1]}"
    return ", ".join(str(i) for i in indices)


def active_space(atoms, distance, basis, frozen=(), removed=(), symmetry=False, drop_irrep=None):
    geometry = f"{atoms[0]} 0 0 0; {atoms[1]} 0 0 {distance}"
    mol = gto.M(atom=geometry, basis=basis, unit="Angstrom", verbose=0, symmetry=symmetry)
    mf = scf.RHF(mol).run()
    coeff = mf.mo_coeff
    removed = list(removed)
    if drop_irrep is not None:
        labels = symm.label_orb_symm(mol, mol.irrep_name, mol.symm_orb, coeff)
        removed += [i for i, lab in enumerate(labels) if lab == drop_irrep]
    frozen = list(frozen)
    act = [i for i in range(coeff.shape[1]) if i not in frozen and i not in removed]
    hcore = mf.get_hcore()
    c_act = coeff[:, act]
    ecore = mol.energy_nuc()
    veff = np.zeros_like(hcore)
    if frozen:
        c_fr = coeff[:, frozen]
        dm = 2 * c_fr @ c_fr.T
        veff = mf.get_veff(mol, dm)
        ecore += float(np.einsum("ij,ji", dm, hcore + 0.5 * veff))
    h1 = c_act.T @ (hcore + veff) @ c_act
    eri = ao2mo.restore(1, ao2mo.full(mol, c_act), len(act))
    nelec = mol.nelectron - 2 * len(frozen)
    e_fci, _ = fci.direct_spin1.kernel(h1, eri, len(act), (nelec // 2, nelec // 2), ecore=ecore)
    table = IntegralTable(len(act), h1, eri, ecore, CHEMIST, False)
    record = {
        "geometry": geometry,
        "basis": basis,
        "distance": distance,
        "frozen": frozen,
        "removed": sorted(removed),
        "n_electrons": nelec,
        "n_spatial": len(act),
        "reference": {"e_hf": float(mf.e_tot), "e_fci": float(e_fci),
                      "nuclear_repulsion": float(mol.energy_nuc()),
                      "mo_energies": [float(e) for e in mf.mo_energy[act]]},
    }
    return table, record


class Writer:
    def __init__(self, out):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.records = {}

    def add(self, name, table, record, layout, flt, groups, fmt="json", extra_args=""):
        if fmt == "json":
            text = emit_json_integrals(table)
            fname = f"{name}.json"
        else:
            text = emit_fcidump(table, record["n_electrons"])
            fname = f"{name}.fcidump"
        (self.out / fname).write_text(text)
        record = dict(record, file=fname, format=fmt, sha256=sha256_of(self.out / fname),
                      layout=layout.to_dict(), filter=flt, groups=list(groups),
                      command=f"{COMMAND}{extra_args}")
        self.records[name] = record
        print(f"{name:28s} E_fci={record['reference']['e_fci']:.8f}", flush=True)

    def finish(self):
        doc = {"generator": COMMAND, "oracle": f"pyscf {pyscf.__version__} RHF", "fixtures": self.records}
        (self.out / MANIFEST).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def grid(lo, hi, step, extra):
    n = int(round((hi - lo) / step))
    pts = {round(lo + i * step, 4) for i in range(n + 1)} | set(extra)
    return sorted(pts)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/qee/data/fixtures"))
    ap.add_argument("--skip-table", action="store_true", help="skip the heavy-element rows")
    args = ap.parse_args(argv)
    w = Writer(args.out)

    # H2 / STO-3G at 0.735 A: restricted (blocked) and unrestricted (interleaved)
    table, rec = active_space(("H", "H"), 0.735, "sto-3g")
    w.add("h2_sto3g_restricted", table, rec, OrbitalLayout.blocked(2), "m=2;sz=1,1", ["h2_sto3g"])
    # creation order g_up, g_dn, u_dn, u_up on an interleaved layout
    unres = OrbitalLayout(2, OrbitalLayout.interleaved(2).spin_order, (3, 2, 0, 1))
    w.add("h2_sto3g_unrestricted", table, rec, unres, "m=2", ["h2_sto3g"])

    for d in grid(0.3, 2.8, 0.1, [0.745]):
        table, rec = active_space(("H", "H"), d, "6-31g")
        w.add(f"h2_631g_d{d:.3f}", table, rec, OrbitalLayout.blocked(4), "m=2;sz=1,1", ["h2_631g"])

    for d in grid(0.5, 4.0, 0.1, [1.55]):
        table, rec = active_space(("Li", "H"), d, "sto-3g", frozen=[0], symmetry=True, drop_irrep="E1y")
        w.add(f"lih_sto3g_d{d:.3f}", table, rec, OrbitalLayout.blocked(4), "m=2;sz=1,1", ["lih_sto3g"])

    if not args.skip_table:
        for index, (name, atoms, d, frozen, removed, mode) in enumerate(TABLE_ROWS):
            table, rec = active_space(atoms, d, "sto-3g", frozen, removed)
            m = rec["n_electrons"]
            flt = f"m={m};sz={m // 2},{m // 2}" if mode == "sz" else f"m={m}"
            rec["row_label"] = MOLECULE_NAMES[atoms]
            rec["row_orbitals"] = _label(sorted(frozen + removed))
            rec["row_index"] = index
            w.add(name, table, rec, OrbitalLayout.blocked(rec["n_spatial"]), flt, ["survey"], fmt="fcidump")
    w.finish()


if __name__ == "__main__":
    main()
