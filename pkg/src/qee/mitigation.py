"""Readout-error inversion and linear zero-noise extrapolation over CNOT count."""

from __future__ import annotations

import csv
import dataclasses
import io
from dataclasses import dataclass, field

import numpy as np

from .simulator import RY, Circuit, NoiseModel, apply_readout, estimate_energy, prepare, sample

CONDITION_LIMIT = 1e8
PREOPTIMIZE_ITERATIONS = 5000
PREOPTIMIZE_THRESHOLD = 1e-4


class MitigationError(ValueError):
    pass


def _kron_all(mats):
    out = np.ones((1, 1))
    for a in reversed(mats):  # qubit 0 is the least significant factor
        out = np.kron(out, a)
    return out


class CalibrationMatrix:
    """Column-stochastic readout confusion ``A[measured, prepared]``.

    Built either from per-qubit 2x2 matrices (tensor form) or as a full
    ``2**Q`` matrix, e.g. from calibration-circuit counts.
    """

    def __init__(self, per_qubit=None, full=None):
        if (per_qubit is None) == (full is None):
            raise MitigationError("give exactly one of per_qubit or full")
        if per_qubit is not None:
            self.per_qubit = [np.asarray(a, dtype=float) for a in per_qubit]
            for a in self.per_qubit:
                _check_stochastic(a)
            self.n_qubits = len(self.per_qubit)
            self.full = None
            cond = max((np.linalg.cond(a) for a in self.per_qubit), default=1.0) ** max(self.n_qubits, 1)
        else:
            self.full = np.asarray(full, dtype=float)
            _check_stochastic(self.full)
            self.n_qubits = int(np.log2(self.full.shape[0]))
            self.per_qubit = None
            cond = np.linalg.cond(self.full)
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise MitigationError(f"calibration matrix is ill-conditioned (cond {cond:.3g})")
        self._inv = None

    @classmethod
    def from_noise(cls, noise, n_qubits=None):
        q = noise.n_qubits if n_qubits is None else n_qubits
        return cls(per_qubit=noise.confusion_matrices()[:q])

    @classmethod
    def from_counts(cls, counts_by_prepared):
        """Full matrix from ``{prepared basis index: ShotCounts}``."""
        dim = len(counts_by_prepared)
        cols = []
        for k in range(dim):
            try:
                cols.append(counts_by_prepared[k].frequencies())
            except KeyError:
                raise MitigationError(f"missing calibration run for basis state {k}") from None
        return cls(full=np.column_stack(cols))

    @classmethod
    def calibrate(cls, noise, n_qubits, shots, seed=None):
        """Simulate the ``2**Q`` basis-state preparation circuits and histogram them."""
        rng = np.random.default_rng(seed)
        readout = noise.confusion_matrices()[:n_qubits]
        runs = {}
        for k in range(1 << n_qubits):
            circ = Circuit(n_qubits, [RY(w, np.pi) for w in range(n_qubits) if k >> w & 1])
            state = prepare(circ, NoiseModel(n_qubits, noise.single_qubit_error[:n_qubits]))
            runs[k] = sample(state, "Z" * n_qubits, shots, readout, rng)
        return cls.from_counts(runs)

    def matrix(self):
        return self.full if self.full is not None else _kron_all(self.per_qubit)

    def apply(self, probs):
        """Forward map: true distribution to measured distribution."""
        if self.full is not None:
            return self.full @ probs
        return apply_readout(probs, self.per_qubit)

    def solve(self, freqs):
        """``A^{-1} f`` (quasi-probabilities; may contain small negatives)."""
        freqs = np.asarray(freqs, dtype=float)
        if freqs.shape != (1 << self.n_qubits,):
            raise MitigationError(f"frequency vector has shape {freqs.shape}, expected {(1 << self.n_qubits,)}")
        if self.full is not None:
            return np.linalg.solve(self.full, freqs)
        return apply_readout(freqs, [np.linalg.inv(a) for a in self.per_qubit])

    def transpose_solve(self, values):
        """``A^{-T} g``: outcome weights that average correctly over raw frequencies."""
        values = np.asarray(values, dtype=float)
        if self.full is not None:
            return np.linalg.solve(self.full.T, values)
        return apply_readout(values, [np.linalg.inv(a).T for a in self.per_qubit])


def _check_stochastic(a):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MitigationError("confusion matrix must be square")
    if np.any(a < -1e-12) or not np.allclose(a.sum(axis=0), 1.0, atol=1e-9):
        raise MitigationError("confusion matrix columns must be probability vectors")


def mitigate(counts, calibration):
    """Quasi-probability vector ``A^{-1} f`` from raw shot counts."""
    if counts.n_qubits != calibration.n_qubits:
        raise MitigationError("counts and calibration differ in qubit count")
    return calibration.solve(counts.frequencies())


def clip_normalize(quasi):
    """Nearest-looking probability vector for display: clip negatives, renormalize."""
    p = np.clip(np.asarray(quasi, dtype=float), 0.0, None)
    total = p.sum()
    if total <= 0:
        raise MitigationError("no positive mass left after clipping")
    return p / total


# ---------------------------------------------------------------------------
# extrapolation


@dataclass(frozen=True)
class ExtrapolationPoint:
    cnot_count: float
    energy: float
    sigma: float


@dataclass
class ExtrapolationResult:
    intercept: float
    slope: float
    sigma: float
    residuals: list
    chi2: float

    @property
    def error_bar(self):
        return 2 * self.sigma

    def to_dict(self):
        return {"intercept": self.intercept, "slope": self.slope, "sigma": self.sigma,
                "error_bar_2sigma": self.error_bar, "residuals": list(self.residuals), "chi2": self.chi2}


def extrapolate(points):
    """Weighted least-squares line through ``(c_i, E_i)`` with weights ``1/sigma_i^2``.

    The intercept uncertainty is ``sqrt(S_xx / Delta)`` with
    ``Delta = S S_xx - S_x^2`` over the weighted sums.
    """
    pts = [p if isinstance(p, ExtrapolationPoint) else ExtrapolationPoint(*p) for p in points]
    if len({p.cnot_count for p in pts}) < 2:
        raise MitigationError("need at least two distinct CNOT counts")
    if any(not p.sigma > 0 for p in pts):
        raise MitigationError("every point needs a positive standard deviation")
    x = np.array([p.cnot_count for p in pts], dtype=float)
    y = np.array([p.energy for p in pts], dtype=float)
    w = 1.0 / np.array([p.sigma for p in pts], dtype=float) ** 2
    s, sx, sxx = w.sum(), (w * x).sum(), (w * x * x).sum()
    sy, sxy = (w * y).sum(), (w * x * y).sum()
    delta = s * sxx - sx * sx
    intercept = (sxx * sy - sx * sxy) / delta
    slope = (s * sxy - sx * sy) / delta
    sigma = float(np.sqrt(sxx / delta))
    resid = y - (intercept + slope * x)
    return ExtrapolationResult(float(intercept), float(slope), sigma,
                               [float(r) for r in resid], float((w * resid ** 2).sum()))


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class ZneRecord:
    cnot_count: int
    energies: list = field(default_factory=list)

    @property
    def mean(self):
        return float(np.mean(self.energies))

    @property
    def std(self):
        return float(np.std(self.energies, ddof=1)) if len(self.energies) > 1 else 0.0

    def to_dict(self):
        return {"cnot_count": self.cnot_count, "mean": self.mean, "std": self.std,
                "energies": [float(e) for e in self.energies]}


def preoptimize(ham, spec, opt):
    """Exact-backend angles with a larger budget than a single VQE run."""
    from .vqe import minimize

    tight = dataclasses.replace(opt, max_iterations=max(opt.max_iterations, PREOPTIMIZE_ITERATIONS),
                                restart_threshold=min(opt.restart_threshold, PREOPTIMIZE_THRESHOLD))
    return minimize(ham, spec, tight)


def zne_pipeline(ham, spec, opt, noise, shots, repeats, cnot_counts=(6, 12, 18), mode="fixed-angles",
                 angles=None, seed=0, mitigate_readout=True, full_calibration_shots=None):
    """Energies at each CNOT count, then a linear fit to zero CNOTs.

    ``fixed-angles`` optimizes once on the exact backend (unless ``angles`` is
    given) and re-estimates that circuit; ``full-vqe`` re-optimizes each repeat
    on the noisy backend.  Readout errors are inverted per repeat with a
    calibration matrix (tensor form, or a simulated full calibration when
    ``full_calibration_shots`` is set).
    """
    from .vqe import Backend, OptimizerConfig, build_ansatz, minimize

    if mode not in ("fixed-angles", "full-vqe"):
        raise MitigationError(f"unknown mode {mode!r}")
    if repeats < 2:
        raise MitigationError("need at least two repeats for a standard deviation")
    opt = opt or OptimizerConfig()
    q = spec.qubit_count
    if mode == "fixed-angles" and angles is None:
        angles = preoptimize(ham, spec, opt).parameters
    seeds = np.random.SeedSequence(seed)
    records = []
    for count in cnot_counts:
        variant = spec.with_cnot_count(count)
        rec = ZneRecord(count)
        state = prepare(build_ansatz(variant, angles), noise) if mode == "fixed-angles" else None
        for child in seeds.spawn(repeats):
            rng = np.random.default_rng(child)
            cal = None
            if mitigate_readout and noise.has_readout_noise():
                if full_calibration_shots:
                    cal = CalibrationMatrix.calibrate(noise, q, full_calibration_shots, rng)
                else:
                    cal = CalibrationMatrix.from_noise(noise, q)
            if mode == "fixed-angles":
                est = estimate_energy(build_ansatz(variant, angles), ham, shots, noise, cal, rng, state=state)
                rec.energies.append(est.energy)
            else:
                run_opt = OptimizerConfig(opt.max_iterations, opt.initial_step, opt.tolerance,
                                          int(rng.integers(2 ** 31)), 0, opt.restart_threshold)
                backend = Backend("noisy", shots, noise, mitigate_readout)
                rec.energies.append(minimize(ham, variant, run_opt, backend).energy)
        records.append(rec)
    fit = extrapolate([ExtrapolationPoint(r.cnot_count, r.mean, r.std) for r in records])
    raw = {"mode": mode, "shots": shots, "repeats": repeats,
           "angles": None if angles is None else [float(a) for a in angles],
           "points": [r.to_dict() for r in records]}
    return fit, raw


def zne_to_csv(raw, fit):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cnot_count", "mean", "std"])
    for p in raw["points"]:
        w.writerow([p["cnot_count"], repr(p["mean"]), repr(p["std"])])
    w.writerow([0, repr(fit.intercept), repr(fit.sigma)])
    return buf.getvalue()
