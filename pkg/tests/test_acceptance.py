"""One check per acceptance criterion, each printing a PASS/FAIL line.

The collected lines are repeated in the terminal summary (see conftest.py).
"""

import math
import time

import numpy as np
import pytest

from oracles import jw_dense, operator_dense, random_physicist_table, second_quantized_matrix
from reference_operators import H2_631G, H2_STO3G_RESTRICTED, H2_STO3G_UNRESTRICTED
from qee.cli import bench_point, report_rows
from qee.configspace import enumerate_space, parse_filter, qubit_count_for, space_from_configs
from qee.encoder import build_hamiltonian, build_transition, entry_factors, hamiltonian_matrix, \
    transition_to_pauli
from qee.integrals import PHYSICIST, IntegralTable
from qee.mitigation import CalibrationMatrix, extrapolate, preoptimize, zne_pipeline
from qee.pauli import PauliOperator
from qee.simulator import NoiseModel, diagonalize
from qee.vqe import CHEMICAL_ACCURACY, AnsatzSpec, OptimizerConfig, minimize

RESULTS = []

SURVEY_EXPECTED = [  # molecule, orbitals, JW qubits, JW terms, QEE qubits, QEE terms
    ("LiH", "0, 3", 8, 193, 4, 100), ("HF", "N/A", 12, 631, 6, 1184), ("HF", "0", 10, 276, 6, 608),
    ("HCl", "0", 18, 3772, 8, 8960), ("HCl", "0, 1", 16, 2329, 6, 640), ("HBr", "0-2", 32, 40705, 8, 18490),
    ("HBr", "0-4", 28, 21891, 8, 18472), ("F2", "0, 1", 16, 1177, 6, 1040), ("Cl2", "0, 1", 32, 21481, 8, 17500),
    ("Cl2", "0-9", 16, 1177, 6, 1040), ("Br2", "0-27", 16, 1177, 6, 1040), ("I2", "0-45", 16, 1177, 6, 1040),
]


def verdict(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def compiled(store, name, include_constant=False):
    fx = store.get(name)
    return build_hamiltonian(fx.space(), fx.spin_table(), include_constant=include_constant)


def max_deviation(op, reference):
    ref = PauliOperator.from_labels(reference, op.n_qubits)
    labels = op.labels()
    if set(labels) != set(ref.labels()):
        return math.inf
    return max(abs(labels[k] - v) for k, v in ref.labels().items())


# singlet-space excitations: (p, q, [(target, source) qubit entries], factorization per qubit high..low, Pauli expansion)
SINGLET_EXCITATIONS = [
    (1, 0, [(0b01, 0b00), (0b11, 0b10)], "I Q+", {"IX": 0.5, "IY": -0.5j}),
    (3, 2, [(0b10, 0b00), (0b11, 0b01)], "Q+ I", {"XI": 0.5, "YI": -0.5j}),
    (0, 0, [(0b00, 0b00), (0b10, 0b10)], "I N0", {"II": 0.5, "IZ": 0.5}),
    (1, 1, [(0b01, 0b01), (0b11, 0b11)], "I N1", {"II": 0.5, "IZ": -0.5}),
    (2, 2, [(0b00, 0b00), (0b01, 0b01)], "N0 I", {"II": 0.5, "ZI": 0.5}),
    (3, 3, [(0b10, 0b10), (0b11, 0b11)], "N1 I", {"II": 0.5, "ZI": -0.5}),
]
FACTOR = {"I": np.eye(2), "Q+": np.array([[0, 0], [1, 0]]), "N0": np.diag([1, 0]), "N1": np.diag([0, 1])}


def test_criterion_01_singlet_excitations():
    start = time.perf_counter()
    space = enumerate_space(parse_filter("m=2;sz=1,1", 4))
    failures = []
    for p, q, entries, factor, pauli in SINGLET_EXCITATIONS:
        t = build_transition(space, p, q)
        got = sorted((target, source) for source, (target, sign) in t.entries.items() if sign == 1)
        if got != sorted(entries) or len(t) != len(entries):
            failures.append(f"E_{p}{q} entries {got}")
        dense = sum(np.kron(*[operator_dense(f.pauli(), 1) for f in reversed(entry_factors(a, b, 2))])
                    for a, b in got)
        high, low = factor.split()
        if not np.allclose(dense, np.kron(FACTOR[high], FACTOR[low])):
            failures.append(f"E_{p}{q} factorization")
        if transition_to_pauli(space, t) != PauliOperator.from_labels(pauli):
            failures.append(f"E_{p}{q} Pauli")
    elapsed = time.perf_counter() - start
    verdict(1, not failures and elapsed < 1, f"6 excitation rows exact ({elapsed:.3f}s) {failures or ''}")


def test_criterion_02_h2_minimal_singlet(store):
    start = time.perf_counter()
    op = compiled(store, "h2_sto3g_restricted")
    dev = max_deviation(op, H2_STO3G_RESTRICTED)
    elapsed = time.perf_counter() - start
    verdict(2, len(op) == 5 and dev < 1e-6 and elapsed < 1,
            f"{len(op)} terms, max coefficient deviation {dev:.1e} ({elapsed:.3f}s)")


def test_criterion_03_h2_minimal_all_configs(store):
    op = compiled(store, "h2_sto3g_unrestricted")
    dev = max_deviation(op, H2_STO3G_UNRESTRICTED)
    verdict(3, op.n_qubits == 3 and len(op) == 16 and dev < 1e-6,
            f"{op.n_qubits} qubits, {len(op)} terms, max coefficient deviation {dev:.1e}")


def test_criterion_04_h2_split_valence(store):
    op = compiled(store, "h2_631g_d0.745")
    dev = max_deviation(op, H2_631G)
    # labels put qubit Q-1 leftmost, so the printed lines equal the reference lines as a set
    printed = set(op.format().splitlines())
    expected = {f"{c:+.6f} · {lbl}" for lbl, c in H2_631G.items()}
    verdict(4, op.n_qubits == 4 and len(op) == len(H2_631G) and dev < 1e-6 and printed == expected,
            f"{len(op)} terms (printed reference lists {len(H2_631G)}), max coefficient deviation {dev:.1e}, "
            f"{len(printed & expected)}/{len(expected)} printed lines identical")


@pytest.fixture(scope="module")
def survey(store):
    start = time.perf_counter()
    rows = report_rows(store, "survey")
    return rows, time.perf_counter() - start


def test_criterion_05a_survey_qubits(survey):
    rows, _ = survey
    got = [(r["molecule"], r["frozen"], r["jw_qubits"], r["qee_qubits"]) for r in rows]
    want = [(m, f, jq, qq) for m, f, jq, _, qq, _ in SURVEY_EXPECTED]
    verdict("5a", got == want, f"{sum(g == w for g, w in zip(got, want))}/12 rows with exact JW and QEE qubit counts")


def test_criterion_05b_survey_terms(survey):
    rows, elapsed = survey
    mismatched = []
    for r, (mol, frozen, _, jw_terms, _, qee_terms) in zip(rows, SURVEY_EXPECTED):
        if (r["jw_terms"], r["qee_terms"]) != (jw_terms, qee_terms):
            mismatched.append(f"{mol} {frozen}: JW {r['jw_terms']} vs {jw_terms}, QEE {r['qee_terms']} vs {qee_terms}")
    detail = f"{12 - len(mismatched)}/12 rows with exact term counts ({elapsed:.1f}s)"
    if mismatched:
        detail += ("; term counts depend on orbital basis, ordering and configuration order, which the fixtures "
                   "cannot pin down. Differing rows: " + "; ".join(mismatched))
    verdict("5b", not mismatched, detail)


def _spectrum_case(rng):
    n = int(rng.integers(2, 9))
    m = int(rng.integers(1, min(4, n - 1) + 1))
    h, g = random_physicist_table(n, rng, density=float(rng.choice([0.3, 1.0])))
    configs = enumerate_space(parse_filter(f"m={m}", n)).configs
    if rng.random() < 0.5 and len(configs) > 2:
        keep = rng.random(len(configs)) < 0.7
        configs = [f for f, k in zip(configs, keep) if k] or [configs[0]]
    ranks = tuple(int(r) for r in rng.permutation(n)) if rng.random() < 0.5 else None
    return space_from_configs(n, configs, ranks), IntegralTable(n, h, g, 0.0, PHYSICIST, True)


def test_criterion_06_spectrum_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst_spec = worst_elem = 0.0
    for _ in range(200):
        space, ints = _spectrum_case(rng)
        ham = build_hamiltonian(space, ints, include_constant=False)
        size = len(space)
        qee_block = ham.to_matrix()[:size, :size].real
        idx = list(space.configs)
        jw_block = jw_dense(ints.one_body, ints.two_body)[np.ix_(idx, idx)].real
        worst_spec = max(worst_spec, np.abs(np.linalg.eigvalsh(qee_block) - np.linalg.eigvalsh(jw_block)).max())
        oracle = second_quantized_matrix(ints.one_body, ints.two_body, space.configs, space.sign_ranks)
        worst_elem = max(worst_elem, np.abs(hamiltonian_matrix(space, ints) - oracle).max(),
                         np.abs(qee_block - oracle).max())
    elapsed = time.perf_counter() - start
    verdict(6, worst_spec < 1e-9 and worst_elem < 1e-10 and elapsed < 120,
            f"200 instances, spectrum gap {worst_spec:.1e}, matrix-element gap {worst_elem:.1e} ({elapsed:.1f}s)")


def test_criterion_07_counting_law():
    start = time.perf_counter()
    checked = bad = 0
    for n in range(2, 13):
        for m in range(1, n + 1):
            space = enumerate_space(parse_filter(f"m={m}", n))
            for p in range(n):
                for q in range(n):
                    law = math.comb(n - 1, m - 1) if p == q else math.comb(n - 2, m - 1)
                    bad += len(build_transition(space, p, q)) != law
                    checked += 1
    raw_ok = []
    for n, m in [(4, 2), (6, 2), (6, 3), (8, 2), (8, 4), (10, 3), (12, 2), (6, 6)]:
        pt = bench_point(n, m, seed=n * 100 + m, repeats=1)
        raw_ok.append(pt["raw_measured"] == pt["raw_analytic"] <= pt["raw_bound"])
    elapsed = time.perf_counter() - start
    verdict(7, bad == 0 and all(raw_ok) and elapsed < 60,
            f"{checked} (N, m, p, q) transition counts, {bad} off the law; raw term counts exact and bounded at "
            f"{sum(raw_ok)}/{len(raw_ok)} grid points ({elapsed:.1f}s)")


def test_criterion_08_headline_count():
    q = qubit_count_for(402, 10)
    verdict(8, q == 65 and isinstance(q, int), f"qubit_count_for(402, 10) = {q}")


@pytest.mark.parametrize("name", ["h2_sto3g_restricted", "h2_sto3g_unrestricted", "h2_631g_d0.745"])
def test_criterion_09_noiseless_vqe(store, name):
    ham = compiled(store, name)
    start = time.perf_counter()
    res = minimize(ham, AnsatzSpec(ham.n_qubits, 2), OptimizerConfig())
    elapsed = time.perf_counter() - start
    gap = res.energy - diagonalize(ham)[0]
    verdict(9, 0 <= gap + 1e-9 and gap < CHEMICAL_ACCURACY and res.restarts_used <= 3 and elapsed < 60,
            f"{name}: VQE {gap:.1e} Ha above the minimum, {res.restarts_used} restarts ({elapsed:.1f}s)")


def test_criterion_10_zne(store):
    start = time.perf_counter()
    ham = compiled(store, "h2_631g_d0.745")
    exact = float(diagonalize(ham)[0])
    spec = AnsatzSpec(ham.n_qubits, 2)
    opt = OptimizerConfig()
    angles = preoptimize(ham, spec, opt).parameters
    noise = NoiseModel.santiago(ham.n_qubits)
    errors, inside = {}, []
    for shots in (10_000, 100_000):
        errors[shots] = []
        for family in range(5):
            fit, _ = zne_pipeline(ham, spec, opt, noise, shots, 10, (6, 12, 18), angles=angles, seed=1000 + family)
            err = abs(fit.intercept - exact)
            errors[shots].append(err)
            if shots == 100_000:
                inside.append(err < fit.error_bar)
    low, high = np.median(errors[10_000]), np.median(errors[100_000])
    elapsed = time.perf_counter() - start
    verdict(10, all(inside) and high < low and elapsed < 600,
            f"{sum(inside)}/5 intercepts within 2 sigma at 1e5 shots; median |error| {high:.1e} at 1e5 vs "
            f"{low:.1e} at 1e4 ({elapsed:.0f}s)")


def test_criterion_11_extrapolation_closed_forms():
    start = time.perf_counter()
    line = extrapolate([(6, 1.0, 0.1), (12, 2.0, 0.1), (18, 3.0, 0.1)])
    s = 0.0123
    equal = extrapolate([(6, -1.1, s), (12, -1.05, s), (18, -0.97, s)])
    checks = [abs(line.intercept) < 1e-12, abs(line.slope - 1 / 6) < 1e-12,
              max(map(abs, line.residuals)) < 1e-12, abs(equal.sigma - s * math.sqrt(7 / 3)) < 1e-12]
    elapsed = time.perf_counter() - start
    verdict(11, all(checks) and elapsed < 1, f"{sum(checks)}/4 closed-form checks to 1e-12 ({elapsed:.4f}s)")


def test_criterion_12_mitigation_round_trip():
    start = time.perf_counter()
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        q = int(rng.integers(1, 5))
        cal = CalibrationMatrix(per_qubit=[np.array([[1 - a, b], [a, 1 - b]]) for a, b in rng.uniform(0, 0.3, (q, 2))])
        p = rng.dirichlet(np.ones(1 << q))
        worst = max(worst, np.abs(cal.solve(cal.apply(p)) - p).max())
    elapsed = time.perf_counter() - start
    verdict(12, worst < 1e-10 and elapsed < 1, f"100 random cases, worst deviation {worst:.1e} ({elapsed:.3f}s)")
