"""Dense statevector and density-matrix simulation of RY/CNOT circuits.

Basis index bit ``w`` is qubit ``w``.  Internally a state is reshaped into a
``(2,)*Q`` tensor whose axis ``Q-1-w`` carries qubit ``w``; density matrices
use ``(2,)*2Q`` with the column axes following the row axes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .pauli import popcount, qubitwise_commute

STATEVECTOR_LIMIT = 24
DENSITY_LIMIT = 10


class SimulatorError(ValueError):
    pass


# ---------------------------------------------------------------------------
# circuits


@dataclass(frozen=True)
class RY:
    qubit: int
    angle: float

    def matrix(self):
        c, s = np.cos(self.angle / 2), np.sin(self.angle / 2)
        return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int


@dataclass
class Circuit:
    n_qubits: int
    gates: list = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            self._validate(g)

    def _validate(self, g):
        q = self.n_qubits
        if isinstance(g, RY):
            if not 0 <= g.qubit < q:
                raise SimulatorError(f"RY on qubit {g.qubit} outside 0..{q - 1}")
        elif isinstance(g, CNOT):
            if not (0 <= g.control < q and 0 <= g.target < q):
                raise SimulatorError(f"CNOT({g.control},{g.target}) outside 0..{q - 1}")
            if g.control == g.target:
                raise SimulatorError("CNOT control equals target")
        else:
            raise SimulatorError(f"unsupported gate {g!r}")

    def append(self, g):
        self._validate(g)
        self.gates.append(g)
        return self

    @property
    def cnot_count(self):
        return sum(isinstance(g, CNOT) for g in self.gates)

    def to_dict(self):
        return {"n_qubits": self.n_qubits,
                "gates": [["ry", g.qubit, g.angle] if isinstance(g, RY) else ["cx", g.control, g.target]
                          for g in self.gates]}


# ---------------------------------------------------------------------------
# noise model


SANTIAGO_SINGLE = {
    # qubit: (gate error, P(0|1), P(1|0)) in percent
    0: (0.0228, 2.04, 0.86),
    1: (0.0183, 1.42, 1.26),
    2: (0.0217, 1.66, 14.34),
    3: (0.0262, 4.20, 2.52),
    4: (0.0174, 1.48, 0.30),
}
SANTIAGO_CNOT = {(0, 1): 0.573, (1, 2): 0.686, (2, 3): 0.670, (3, 4): 0.636}


def _prob(x, name):
    if not 0.0 <= x <= 1.0:
        raise SimulatorError(f"{name} = {x} is not a probability")
    return float(x)


@dataclass
class NoiseModel:
    """Depolarizing gate noise plus independent asymmetric readout flips.

    ``readout[q] = (P(1|0), P(0|1))``; ``cnot_error`` is keyed by unordered
    coupling ``(min, max)``.
    """

    n_qubits: int
    single_qubit_error: tuple = ()
    readout: tuple = ()
    cnot_error: dict = field(default_factory=dict)

    def __post_init__(self):
        q = self.n_qubits
        self.single_qubit_error = tuple(_prob(p, "single-qubit error") for p in self.single_qubit_error) or (0.0,) * q
        self.readout = tuple((_prob(a, "P(1|0)"), _prob(b, "P(0|1)")) for a, b in self.readout) or ((0.0, 0.0),) * q
        if len(self.single_qubit_error) != q or len(self.readout) != q:
            raise SimulatorError("per-qubit noise lists must have one entry per qubit")
        self.cnot_error = {tuple(sorted(map(int, k))): _prob(v, "CNOT error") for k, v in self.cnot_error.items()}

    @classmethod
    def ideal(cls, n_qubits):
        return cls(n_qubits)

    @classmethod
    def santiago(cls, n_qubits=4):
        """Calibration snapshot of a 5-qubit linear-chain device (first ``n_qubits``)."""
        if not 1 <= n_qubits <= 5:
            raise SimulatorError("the calibration snapshot covers 5 qubits")
        single = [SANTIAGO_SINGLE[q][0] / 100 for q in range(n_qubits)]
        readout = [(SANTIAGO_SINGLE[q][2] / 100, SANTIAGO_SINGLE[q][1] / 100) for q in range(n_qubits)]
        cx = {k: v / 100 for k, v in SANTIAGO_CNOT.items() if max(k) < n_qubits}
        return cls(n_qubits, tuple(single), tuple(readout), cx)

    def cnot_probability(self, a, b):
        key = (min(a, b), max(a, b))
        if key not in self.cnot_error:
            if not self.has_gate_noise():
                return 0.0
            raise SimulatorError(f"no CNOT calibration for coupling {key}")
        return self.cnot_error[key]

    def has_gate_noise(self):
        return any(self.single_qubit_error) or any(self.cnot_error.values())

    def has_readout_noise(self):
        return any(a or b for a, b in self.readout)

    def readout_only(self):
        return NoiseModel(self.n_qubits, readout=self.readout)

    def without_readout(self):
        return NoiseModel(self.n_qubits, self.single_qubit_error, (), dict(self.cnot_error))

    def confusion_matrices(self):
        """Column-stochastic 2x2 matrices ``A[measured, prepared]`` per qubit."""
        return [np.array([[1 - p10, p01], [p10, 1 - p01]]) for p10, p01 in self.readout]

    def to_dict(self):
        return {"n_qubits": self.n_qubits,
                "single_qubit_error": list(self.single_qubit_error),
                "readout": [{"p1_given_0": a, "p0_given_1": b} for a, b in self.readout],
                "cnot_error": [{"coupling": list(k), "error": v} for k, v in sorted(self.cnot_error.items())]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc):
        try:
            readout = [(r["p1_given_0"], r["p0_given_1"]) for r in doc.get("readout", [])]
            cx = {tuple(e["coupling"]): e["error"] for e in doc.get("cnot_error", [])}
            return cls(int(doc["n_qubits"]), tuple(doc.get("single_qubit_error", ())), tuple(readout), cx)
        except (KeyError, TypeError, ValueError) as exc:
            raise SimulatorError(f"bad noise model document: {exc}") from None

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# tensor kernels


def _apply(t, u, axes):
    """Contract a ``2**k`` square matrix into tensor axes ``axes``."""
    k = len(axes)
    u = u.reshape((2,) * (2 * k))
    out = np.tensordot(u, t, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def _cnot_inplace(t, c_axis, t_axis):
    idx = [slice(None)] * t.ndim
    idx[c_axis] = 1
    sub = t[tuple(idx)]
    tgt = t_axis - (t_axis > c_axis)
    a = np.take(sub, 0, axis=tgt).copy()
    b = np.take(sub, 1, axis=tgt)
    s0 = [slice(None)] * sub.ndim
    s1 = [slice(None)] * sub.ndim
    s0[tgt], s1[tgt] = 0, 1
    sub[tuple(s0)] = b
    sub[tuple(s1)] = a


def _check_size(q, limit, what):
    if q > limit:
        raise SimulatorError(f"{q} qubits exceeds the {what} limit of {limit}")


def run_statevector(circuit, limit=STATEVECTOR_LIMIT):
    q = circuit.n_qubits
    _check_size(q, limit, "statevector")
    t = np.zeros((2,) * q) if q else np.zeros(())
    t[(0,) * q] = 1.0
    for g in circuit.gates:
        if isinstance(g, RY):
            t = _apply(t, g.matrix(), [q - 1 - g.qubit])
        else:
            _cnot_inplace(t, q - 1 - g.control, q - 1 - g.target)
    return t.reshape(-1).astype(complex)


def _depolarize(rho, q, qubits, p):
    """``(1-p) rho + p (I/d) (x) Tr_qubits(rho)`` on a ``(2,)*2Q`` tensor."""
    if p <= 0:
        return rho
    k = len(qubits)
    d = 1 << k
    axes = [q - 1 - w for w in qubits]
    axes += [a + q for a in axes]
    moved = np.moveaxis(rho, axes, list(range(2 * q - 2 * k, 2 * q)))
    rest = moved.shape[:2 * q - 2 * k]
    traced = np.trace(moved.reshape(*rest, d, d), axis1=-2, axis2=-1)
    mixed = (traced[..., None, None] * (np.eye(d) / d)).reshape(*rest, *(2,) * (2 * k))
    return (1 - p) * rho + p * np.moveaxis(mixed, list(range(2 * q - 2 * k, 2 * q)), axes)


def run_noisy(circuit, noise, limit=DENSITY_LIMIT):
    """Density matrix after the circuit with depolarizing gate noise."""
    q = circuit.n_qubits
    _check_size(q, limit, "density-matrix")
    if noise.n_qubits < q:
        raise SimulatorError("noise model covers fewer qubits than the circuit")
    rho = np.zeros((2,) * (2 * q))
    rho[(0,) * (2 * q)] = 1.0
    for g in circuit.gates:
        if isinstance(g, RY):
            u = g.matrix()
            ax = q - 1 - g.qubit
            rho = _apply(rho, u, [ax])
            rho = _apply(rho, u.conj(), [ax + q])
            rho = _depolarize(rho, q, [g.qubit], noise.single_qubit_error[g.qubit])
        else:
            c, t = q - 1 - g.control, q - 1 - g.target
            _cnot_inplace(rho, c, t)
            _cnot_inplace(rho, c + q, t + q)
            rho = _depolarize(rho, q, [g.control, g.target], noise.cnot_probability(g.control, g.target))
    dim = 1 << q
    return rho.reshape(dim, dim).astype(complex)


# ---------------------------------------------------------------------------
# expectation values


def expectation(state, op):
    """Exact ``<H>`` for a statevector or density matrix."""
    if not op.is_hermitian():
        raise SimulatorError("operator has complex coefficients")
    state = np.asarray(state)
    dim = 1 << op.n_qubits
    if state.shape[0] != dim:
        raise SimulatorError(f"state dimension {state.shape[0]} does not match {op.n_qubits} qubits")
    if state.ndim == 1:
        val = np.vdot(state, op.apply(state))
    else:
        ks = np.arange(dim, dtype=np.int64)
        val = 0j
        for (x, z), c in op.terms.items():
            sign = 1 - 2 * (popcount(ks & z) & 1)
            # Tr(P rho) = sum_k <k^x| P |k> rho[k, k^x]
            val += c * (1j ** (x & z).bit_count()) * np.sum(sign * state[ks, ks ^ x])
    if abs(val.imag) > 1e-10:
        raise SimulatorError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def diagonalize(op, limit=14):
    """Ascending eigenvalues of the dense Hermitian matrix."""
    if op.n_qubits > limit:
        raise SimulatorError(f"{op.n_qubits} qubits exceeds the dense limit of {limit}")
    return np.linalg.eigvalsh(op.to_matrix(limit))


# ---------------------------------------------------------------------------
# measurement


_HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
# RY(-pi/2): maps the X eigenbasis onto the computational basis
BASIS_ROTATION = {
    "X": np.array([[1, 1], [-1, 1]]) / np.sqrt(2),
    "Y": _HADAMARD @ np.diag([1, -1j]),
}


@dataclass
class ShotCounts:
    """Histogram over ``2**Q`` outcomes; index bit ``w`` is qubit ``w``."""

    n_qubits: int
    counts: np.ndarray

    @property
    def shots(self):
        return int(self.counts.sum())

    def frequencies(self):
        return self.counts / self.shots

    def as_dict(self):
        q = self.n_qubits
        return {format(k, f"0{q}b") if q else "": int(c) for k, c in enumerate(self.counts) if c}


def basis_letters(x, z, n_qubits):
    """Per-qubit measurement letter ``I/X/Y/Z`` for string ``(x, z)``."""
    return ["IXZY"[(x >> w & 1) | (z >> w & 1) << 1] for w in range(n_qubits)]


def _rotation_for(letters):
    return {w: BASIS_ROTATION[ch] for w, ch in enumerate(letters) if ch in "XY"}


def rotated_probabilities(state, letters):
    """Born probabilities after rotating each qubit into its measured basis."""
    state = np.asarray(state)
    q = len(letters)
    rot = _rotation_for(letters)
    if state.ndim == 1:
        t = state.reshape((2,) * q) if q else state.reshape(())
        for w, u in rot.items():
            t = _apply(t, u, [q - 1 - w])
        probs = np.abs(t.reshape(-1)) ** 2
    else:
        t = state.reshape((2,) * (2 * q)) if q else state.reshape(())
        for w, u in rot.items():
            t = _apply(t, u, [q - 1 - w])
            t = _apply(t, u.conj(), [2 * q - 1 - w])
        dim = 1 << q
        probs = np.real(np.diagonal(t.reshape(dim, dim)))
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def apply_readout(probs, confusions):
    """Push a probability vector through per-qubit confusion matrices."""
    q = len(confusions)
    t = np.asarray(probs, dtype=float).reshape((2,) * q) if q else np.asarray(probs, dtype=float)
    for w, a in enumerate(confusions):
        t = _apply(t, a, [q - 1 - w])
    return t.reshape(-1)


def _as_rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample(state, basis, shots, readout=None, seed=None):
    """Sample ``shots`` outcomes in the eigenbasis of ``basis``.

    ``basis`` is a label like ``"XZ"`` or an ``(x, z)`` pair with the qubit
    count taken from the state.  ``readout`` is a list of per-qubit confusion
    matrices (see :meth:`NoiseModel.confusion_matrices`).
    """
    if shots <= 0:
        raise SimulatorError("shots must be positive")
    state = np.asarray(state)
    q = int(np.log2(state.shape[0]))
    if isinstance(basis, str):
        if len(basis) != q:
            raise SimulatorError(f"basis {basis!r} does not have {q} letters")
        letters = list(reversed(basis))
    else:
        letters = basis_letters(*basis, q)
    probs = rotated_probabilities(state, letters)
    if readout is not None:
        probs = apply_readout(probs, readout)
    probs = np.clip(probs, 0.0, None)
    counts = _as_rng(seed).multinomial(shots, probs / probs.sum())
    return ShotCounts(q, counts)


def group_qubitwise(op):
    """Greedy qubit-wise-commuting groups of the non-identity strings."""
    groups = []
    for key, _ in sorted(op.terms.items(), key=lambda kv: (-abs(kv[1]), kv[0])):
        if key == (0, 0):
            continue
        for g in groups:
            if all(qubitwise_commute(key, other) for other in g):
                g.append(key)
                break
        else:
            groups.append([key])
    return groups


def group_basis(group, n_qubits):
    letters = ["I"] * n_qubits
    for x, z in group:
        for w, ch in enumerate(basis_letters(x, z, n_qubits)):
            if ch != "I":
                letters[w] = ch
    return letters


def group_observable(op, group, n_qubits):
    """Outcome-indexed values ``g(b) = sum_P c_P (-1)^{|b & supp P|}``."""
    ks = np.arange(1 << n_qubits, dtype=np.int64)
    g = np.zeros(1 << n_qubits)
    for x, z in group:
        g += op.terms[(x, z)].real * (1 - 2 * (popcount(ks & (x | z)) & 1))
    return g


@dataclass
class EnergyEstimate:
    energy: float
    sigma: float
    groups: int = 0
    shots_per_group: int = 0


def prepare(circuit, noise=None):
    """Statevector when noiseless, density matrix otherwise."""
    if noise is not None and noise.has_gate_noise():
        return run_noisy(circuit, noise)
    return run_statevector(circuit)


def estimate_energy(circuit, op, shots=None, noise=None, mitigation=None, seed=None, state=None):
    """Energy from per-group sampling (or exactly when ``shots`` is None).

    ``mitigation`` is an object with ``apply(freqs)`` and ``transpose_solve(g)``
    (a calibration matrix); when given, readout errors are inverted before
    the observable is averaged.
    """
    if not op.is_hermitian():
        raise SimulatorError("operator has complex coefficients")
    if op.n_qubits != circuit.n_qubits:
        raise SimulatorError("operator and circuit qubit counts differ")
    if state is None:
        state = prepare(circuit, noise)
    if shots is None:
        return EnergyEstimate(expectation(state, op), 0.0)
    rng = _as_rng(seed)
    q = op.n_qubits
    readout = noise.confusion_matrices()[:q] if noise is not None and noise.has_readout_noise() else None
    energy = op.terms.get((0, 0), 0j).real
    var = 0.0
    groups = group_qubitwise(op)
    for group in groups:
        letters = group_basis(group, q)
        label = "".join(reversed(letters))
        counts = sample(state, label, shots, readout, rng)
        freqs = counts.frequencies()
        g = group_observable(op, group, q)
        if mitigation is not None:
            g = mitigation.transpose_solve(g)
        mean = float(freqs @ g)
        energy += mean
        var += float(freqs @ (g - mean) ** 2) / shots
    return EnergyEstimate(energy, float(np.sqrt(var)), len(groups), shots)
