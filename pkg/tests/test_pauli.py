import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import operator_dense, pauli_dense
from qee.pauli import PauliError, PauliOperator, label_to_xz, qubitwise_commute, xz_to_label

LETTERS = "IXYZ"


def op(mapping):
    return PauliOperator.from_labels(mapping)


def operators(n_qubits, max_terms=6):
    label = st.text(LETTERS, min_size=n_qubits, max_size=n_qubits)
    coeff = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
    return st.dictionaries(label, coeff, max_size=max_terms).map(lambda d: PauliOperator.from_labels(d, n_qubits))


def test_add_merges_and_prunes():
    assert op({"XX": 0.5}) + op({"XX": 0.5}) == op({"XX": 1.0})
    assert len(op({"XX": 0.5}) + op({"XX": -0.5})) == 0
    assert len(op({"IZ": 1}).scale(2) + op({"IZ": -2})) == 0
    assert len(PauliOperator.from_label("Z", 1e-13)) == 0


def test_single_qubit_products():
    assert op({"X": 1}) * op({"Y": 1}) == op({"Z": 1j})
    assert op({"Y": 1}) * op({"X": 1}) == op({"Z": -1j})
    assert op({"Z": 1}) * op({"X": 1}) == op({"Y": 1j})
    assert op({"Y": 1}) * op({"Y": 1}) == op({"I": 1})


def test_projector_product_matches_dense():
    a = op({"II": 0.5, "IZ": 0.5})
    b = op({"II": 0.5, "IZ": -0.5})
    assert len(a * b) == 0
    assert np.allclose((a * a).to_matrix(), a.to_matrix() @ a.to_matrix())


def test_identity_is_neutral():
    a = op({"XYZ": 0.3, "ZZI": -1j})
    assert a * PauliOperator.identity(3) == a


def test_dense_conventions():
    assert np.array_equal(op({"Z": 1}).to_matrix(), np.diag([1, -1]))
    assert np.array_equal(op({"I": 0.5, "Z": -0.5}).to_matrix(), np.diag([0, 1]))
    # qubit 0 is the least significant factor: IX flips bit 0
    assert op({"IX": 1}).to_matrix()[1, 0] == 1


def test_length_mismatch():
    with pytest.raises(PauliError):
        op({"X": 1}) + op({"XX": 1})
    with pytest.raises(PauliError):
        op({"X": 1}) * op({"XX": 1})
    with pytest.raises(PauliError):
        PauliOperator.from_labels({"X": 1, "XX": 1})
    with pytest.raises(PauliError):
        label_to_xz("XQ")


def test_dense_limit():
    with pytest.raises(PauliError):
        PauliOperator.identity(15).to_matrix()


def test_format_and_json_round_trip():
    a = op({"XZ": -0.25, "II": 1.5, "YY": 0.5j})
    text = a.format()
    assert "+1.500000 · II" in text and "-0.250000 · XZ" in text
    again = PauliOperator.from_json(a.to_json())
    assert again == a
    doc = json.loads(a.to_json())
    assert doc["n_qubits"] == 2 and len(doc["terms"]) == 3
    with pytest.raises(PauliError):
        PauliOperator.from_dict({"n_qubits": 2, "terms": [{"string": "X", "re": 1}]})


def test_wide_operators_multiply():
    n = 70
    a = PauliOperator.from_label("X" + "I" * (n - 1))
    b = PauliOperator.from_label("Y" + "I" * (n - 1))
    assert (a * b).coefficient("Z" + "I" * (n - 1)) == 1j


def test_qubitwise_commutation():
    assert qubitwise_commute(label_to_xz("XIZ"), label_to_xz("XZI"))
    assert not qubitwise_commute(label_to_xz("XI"), label_to_xz("ZI"))


@given(st.text(LETTERS, min_size=0, max_size=8))
def test_label_round_trip(label):
    x, z = label_to_xz(label)
    assert xz_to_label(x, z, len(label)) == label
    assert np.allclose(PauliOperator.from_label(label).to_matrix(), pauli_dense(label))


@given(operators(3), operators(3))
def test_multiply_matches_dense(a, b):
    assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix(), atol=1e-12)


@given(operators(4, 4), operators(4, 4), operators(4, 4))
def test_associative_and_distributive(a, b, c):
    ma, mb, mc = a.to_matrix(), b.to_matrix(), c.to_matrix()
    assert np.allclose(((a * b) * c).to_matrix(), (a * (b * c)).to_matrix(), atol=1e-12)
    assert np.allclose((a * (b + c)).to_matrix(), ma @ (mb + mc), atol=1e-12)


@given(st.dictionaries(st.text(LETTERS, min_size=3, max_size=3),
                       st.floats(-2, 2, allow_nan=False), max_size=6))
def test_hermitian_square(mapping):
    a = PauliOperator.from_labels(mapping, 3)
    sq = a * a
    assert sq.is_hermitian()
    assert np.allclose(sq.to_matrix(), operator_dense(mapping, 3) @ operator_dense(mapping, 3), atol=1e-12)


@given(operators(3, 8))
def test_keys_unique_and_above_threshold(a):
    assert len(set(a.terms)) == len(a.terms)
    assert all(abs(c) >= 1e-12 for c in a.terms.values())


@given(operators(3), st.integers(0, 7))
def test_apply_matches_dense(a, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    assert np.allclose(a.apply(v), a.to_matrix() @ v, atol=1e-12)
