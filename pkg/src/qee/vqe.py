"""Real-amplitude RY/CNOT ansatz and derivative-free energy minimization."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .simulator import CNOT, RY, Circuit, NoiseModel, SimulatorError, diagonalize, estimate_energy

CHEMICAL_ACCURACY = 1.6e-3


class VqeError(ValueError):
    pass


@dataclass(frozen=True)
class AnsatzSpec:
    """Alternating RY layers and linear CNOT chains.

    ``redundant_cnot_pairs`` back-to-back CNOT pairs are spread over the
    chain CNOTs round-robin, so they add noise but no logic.
    """

    qubit_count: int
    reps: int = 2
    redundant_cnot_pairs: int = 0

    def __post_init__(self):
        if self.qubit_count < 1:
            raise VqeError("ansatz needs at least one qubit")
        if self.reps < 0 or self.redundant_cnot_pairs < 0:
            raise VqeError("reps and redundant pair count must be non-negative")
        if self.redundant_cnot_pairs and self.base_cnot_count == 0:
            raise VqeError("no CNOTs to pad with redundant pairs")

    @classmethod
    def for_cnot_count(cls, qubit_count, reps, cnot_count):
        base = (qubit_count - 1) * reps
        extra = cnot_count - base
        if extra < 0 or extra % 2:
            raise VqeError(f"{cnot_count} CNOTs is not {base} plus an even number")
        return cls(qubit_count, reps, extra // 2)

    @property
    def parameter_count(self):
        return self.qubit_count * (self.reps + 1)

    @property
    def base_cnot_count(self):
        return (self.qubit_count - 1) * self.reps

    @property
    def cnot_count(self):
        return self.base_cnot_count + 2 * self.redundant_cnot_pairs

    def pairs_after(self):
        """Number of identity pairs following each chain CNOT, in circuit order."""
        n = self.base_cnot_count
        out = [0] * n
        for j in range(self.redundant_cnot_pairs):
            out[(j * n // self.redundant_cnot_pairs) if self.redundant_cnot_pairs <= n else j % n] += 1
        return out

    def with_cnot_count(self, cnot_count):
        return AnsatzSpec.for_cnot_count(self.qubit_count, self.reps, cnot_count)


def build_ansatz(spec, params=None):
    q = spec.qubit_count
    theta = np.zeros(spec.parameter_count) if params is None else np.asarray(params, dtype=float)
    if theta.shape != (spec.parameter_count,):
        raise VqeError(f"expected {spec.parameter_count} parameters, got {theta.shape}")
    pads = spec.pairs_after()
    circ = Circuit(q)
    for w in range(q):
        circ.append(RY(w, float(theta[w])))
    k = 0
    for layer in range(1, spec.reps + 1):
        for w in range(q - 1):
            gate = CNOT(w, w + 1)
            circ.append(gate)
            for _ in range(2 * pads[k]):
                circ.append(gate)
            k += 1
        for w in range(q):
            circ.append(RY(w, float(theta[layer * q + w])))
    return circ


@dataclass(frozen=True)
class Backend:
    """``exact`` | ``shots`` | ``noisy`` energy evaluation."""

    kind: str = "exact"
    shots: int | None = None
    noise: NoiseModel | None = None
    mitigate_readout: bool = True

    def __post_init__(self):
        if self.kind not in ("exact", "shots", "noisy"):
            raise VqeError(f"unknown backend {self.kind!r}")
        if self.kind != "exact" and (self.shots is None or self.shots <= 0):
            raise VqeError("sampling backends need a positive shot count")
        if self.kind == "noisy" and self.noise is None:
            raise VqeError("noisy backend needs a noise model")

    @classmethod
    def parse(cls, text, load_noise=None):
        """``exact``, ``shots:N`` or ``noisy:<model>:N``; ``load_noise`` maps the model name."""
        parts = text.split(":")
        try:
            if parts == ["exact"]:
                return cls()
            if parts[0] == "shots" and len(parts) == 2:
                return cls("shots", int(parts[1]))
            if parts[0] == "noisy" and len(parts) == 3:
                name = parts[1]
                noise = load_noise(name) if load_noise else (NoiseModel.santiago() if name == "santiago" else None)
                if noise is None:
                    raise VqeError(f"cannot resolve noise model {name!r}")
                return cls("noisy", int(parts[2]), noise)
        except ValueError as exc:
            raise VqeError(f"bad backend {text!r}: {exc}") from None
        raise VqeError(f"bad backend {text!r}; expected exact | shots:N | noisy:MODEL:N")

    def calibration(self, n_qubits):
        from .mitigation import CalibrationMatrix

        if self.kind == "noisy" and self.mitigate_readout and self.noise.has_readout_noise():
            return CalibrationMatrix.from_noise(self.noise, n_qubits)
        return None

    def describe(self):
        return self.kind if self.kind == "exact" else f"{self.kind}:{self.shots}"


@dataclass
class OptimizerConfig:
    max_iterations: int = 500
    initial_step: float = 0.5
    tolerance: float = 1e-8
    seed: int = 0
    restarts: int = 3
    restart_threshold: float = CHEMICAL_ACCURACY

    def __post_init__(self):
        if self.max_iterations < 1:
            raise VqeError("max_iterations must be at least 1")
        if self.restarts < 0:
            raise VqeError("restarts must be non-negative")


@dataclass
class VqeResult:
    energy: float
    parameters: np.ndarray
    trajectory: list = field(default_factory=list)
    evaluations: int = 0
    restarts_used: int = 0
    reference_minimum: float | None = None

    def to_dict(self):
        return {"energy": self.energy, "parameters": [float(x) for x in self.parameters],
                "evaluations": self.evaluations, "restarts_used": self.restarts_used,
                "reference_minimum": self.reference_minimum,
                "trajectory": [float(e) for e in self.trajectory]}


def _energy_function(ham, spec, backend, seed):
    calibration = backend.calibration(spec.qubit_count)
    noise = backend.noise if backend.kind == "noisy" else None
    seeds = np.random.SeedSequence(seed)

    def energy(theta):
        circ = build_ansatz(spec, theta)
        if backend.kind == "exact":
            return estimate_energy(circ, ham).energy
        rng = np.random.default_rng(seeds.spawn(1)[0])
        return estimate_energy(circ, ham, backend.shots, noise, calibration, rng).energy

    return energy


def minimize(ham, spec, opt=None, backend=None):
    """COBYLA from the all-zeros (reference) parameters with seeded restarts.

    Restarts run on the exact backend only, while the best energy stays more
    than ``restart_threshold`` above the dense ground energy.
    """
    opt = opt or OptimizerConfig()
    backend = backend or Backend()
    if ham.n_qubits != spec.qubit_count:
        raise VqeError(f"Hamiltonian has {ham.n_qubits} qubits, ansatz {spec.qubit_count}")
    trajectory = []
    best = {"energy": np.inf, "params": np.zeros(spec.parameter_count)}
    energy = _energy_function(ham, spec, backend, opt.seed)

    def tracked(theta):
        e = energy(theta)
        trajectory.append(e)
        if e < best["energy"]:
            best["energy"], best["params"] = e, np.array(theta, dtype=float)
        return e

    reference = None
    if backend.kind == "exact":
        try:
            reference = float(diagonalize(ham)[0])
        except SimulatorError:
            reference = None

    rng = np.random.default_rng(opt.seed)
    restarts = 0
    x0 = np.zeros(spec.parameter_count)
    while True:
        scipy_minimize(tracked, x0, method="COBYLA",
                       options={"maxiter": opt.max_iterations, "rhobeg": opt.initial_step,
                                "tol": opt.tolerance})
        stuck = reference is not None and best["energy"] - reference > opt.restart_threshold
        if not stuck or restarts >= opt.restarts:
            break
        restarts += 1
        x0 = rng.uniform(-np.pi, np.pi, spec.parameter_count)
    return VqeResult(float(best["energy"]), best["params"], trajectory, len(trajectory), restarts, reference)


# ---------------------------------------------------------------------------
# surface scans


@dataclass
class ScanPoint:
    distance: float
    energy: float
    exact: float | None = None
    hartree_fock: float | None = None
    evaluations: int = 0

    @property
    def error(self):
        return None if self.exact is None else self.energy - self.exact


def surface_scan(points, spec, opt=None, backend=None):
    """Independent minimization per ``(distance, hamiltonian, reference dict)``."""
    out = []
    for distance, ham, ref in points:
        res = minimize(ham, spec, opt, backend)
        ref = ref or {}
        out.append(ScanPoint(float(distance), res.energy, ref.get("exact"), ref.get("e_hf"), res.evaluations))
    return out


def scan_to_csv(points):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["distance", "energy", "exact", "hartree_fock", "error", "evaluations"])
    for p in points:
        w.writerow([p.distance, repr(p.energy), "" if p.exact is None else repr(p.exact),
                    "" if p.hartree_fock is None else repr(p.hartree_fock),
                    "" if p.error is None else repr(p.error), p.evaluations])
    return buf.getvalue()
