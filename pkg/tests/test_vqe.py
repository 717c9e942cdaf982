import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reference_operators import H2_STO3G_RESTRICTED
from qee.pauli import PauliOperator
from qee.simulator import CNOT, NoiseModel, diagonalize, run_statevector
from qee.vqe import (Backend, AnsatzSpec, OptimizerConfig, VqeError, build_ansatz, minimize, scan_to_csv,
                     surface_scan)

H2_SINGLET = PauliOperator.from_labels(H2_STO3G_RESTRICTED)


def test_base_ansatz_shape():
    spec = AnsatzSpec(4, 2)
    circ = build_ansatz(spec)
    assert spec.parameter_count == 12
    assert sum(isinstance(g, CNOT) for g in circ.gates) == 6 == spec.cnot_count
    assert [AnsatzSpec.for_cnot_count(4, 2, c).cnot_count for c in (6, 12, 18)] == [6, 12, 18]
    assert AnsatzSpec.for_cnot_count(4, 2, 12).pairs_after() == [1, 0, 1, 0, 1, 0]
    assert AnsatzSpec.for_cnot_count(4, 2, 18).pairs_after() == [1] * 6


def test_single_qubit_ansatz():
    spec = AnsatzSpec(1, 2)
    assert spec.parameter_count == 3 and spec.cnot_count == 0
    psi = run_statevector(build_ansatz(spec, [0.2, 0.3, 0.5]))
    assert np.allclose(psi, [np.cos(0.5), np.sin(0.5)])


def test_ansatz_validation():
    with pytest.raises(VqeError):
        AnsatzSpec(0)
    with pytest.raises(VqeError):
        AnsatzSpec.for_cnot_count(4, 2, 9)
    with pytest.raises(VqeError):
        AnsatzSpec(1, 2, 1)
    with pytest.raises(VqeError):
        build_ansatz(AnsatzSpec(2, 1), [0.0])


@settings(max_examples=50)
@given(st.lists(st.floats(-np.pi, np.pi), min_size=12, max_size=12))
def test_redundant_pairs_are_noiseless_identity(theta):
    states = [run_statevector(build_ansatz(AnsatzSpec.for_cnot_count(4, 2, c), theta)) for c in (6, 12, 18)]
    assert np.allclose(states[0], states[1], atol=1e-12)
    assert np.allclose(states[0], states[2], atol=1e-12)
    assert np.abs(states[0].imag).max() < 1e-12


def test_two_qubit_exact_minimum():
    res = minimize(H2_SINGLET, AnsatzSpec(2, 2))
    assert abs(res.energy - diagonalize(H2_SINGLET)[0]) < 1e-6
    assert res.energy == min(res.trajectory)
    assert res.evaluations == len(res.trajectory)


def test_zero_hamiltonian():
    res = minimize(PauliOperator.zero(2), AnsatzSpec(2, 2), OptimizerConfig(restarts=0))
    assert res.energy == 0.0
    assert res.restarts_used == 0


def test_qubit_mismatch():
    with pytest.raises(VqeError):
        minimize(H2_SINGLET, AnsatzSpec(3, 2))


def test_variational_bound_exact(store):
    from qee.encoder import build_hamiltonian
    fx = store.get("h2_sto3g_unrestricted")
    ham = build_hamiltonian(fx.space(), fx.spin_table())
    res = minimize(ham, AnsatzSpec(ham.n_qubits, 2), OptimizerConfig(max_iterations=200))
    floor = diagonalize(ham)[0]
    assert min(res.trajectory) >= floor - 1e-9


def test_variational_bound_shots():
    backend = Backend("shots", 4000)
    res = minimize(H2_SINGLET, AnsatzSpec(2, 2), OptimizerConfig(max_iterations=60, restarts=0), backend)
    # per-group sigma bound: sum |c| / sqrt(shots) over the non-identity terms
    sigma = sum(abs(c) for lbl, c in H2_SINGLET.labels().items() if set(lbl) != {"I"}) / np.sqrt(4000)
    assert min(res.trajectory) >= diagonalize(H2_SINGLET)[0] - 3 * sigma


@pytest.mark.parametrize("backend", [Backend(), Backend("shots", 500),
                                     Backend("noisy", 500, NoiseModel.santiago(2))])
def test_determinism(backend):
    opt = OptimizerConfig(max_iterations=40, seed=7)
    a = minimize(H2_SINGLET, AnsatzSpec(2, 2), opt, backend)
    b = minimize(H2_SINGLET, AnsatzSpec(2, 2), opt, backend)
    assert a.trajectory == b.trajectory
    assert np.array_equal(a.parameters, b.parameters)


def test_backend_parsing():
    assert Backend.parse("exact") == Backend()
    assert Backend.parse("shots:100") == Backend("shots", 100)
    noisy = Backend.parse("noisy:santiago:1000")
    assert noisy.kind == "noisy" and noisy.noise == NoiseModel.santiago()
    for bad in ("shots", "shots:x", "noisy:nowhere:10", "exact:1", "shots:0"):
        with pytest.raises(VqeError):
            Backend.parse(bad)


def test_optimizer_config_validation():
    with pytest.raises(VqeError):
        OptimizerConfig(max_iterations=0)


def test_single_distance_scan_equals_minimize():
    spec = AnsatzSpec(2, 2)
    [point] = surface_scan([(0.735, H2_SINGLET, {"exact": -1.137})], spec)
    assert point.energy == minimize(H2_SINGLET, spec).energy
    assert point.error == pytest.approx(point.energy + 1.137)
    text = scan_to_csv([point])
    assert text.splitlines()[0] == "distance,energy,exact,hartree_fock,error,evaluations"
    assert text.splitlines()[1].startswith("0.735,")
