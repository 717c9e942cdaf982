"""Compile excitation operators and integrals into qubit-efficient Pauli form.

A configuration ``f`` (bit ``p`` set when spin-orbital ``p`` is filled) is
mapped to the qubit basis state ``|k>`` where ``k`` is its position in the
ascending configuration list.  The excitation ``E_pq = a_p^dag a_q`` then acts
as a signed partial permutation on those indices, and each matrix element
``|k'><k|`` factorizes into one-qubit entry operators.

Fermionic signs follow a creation order given by ``ranks`` (bit ``b`` is the
``ranks[b]``-th mode); ``None`` means plain bit order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .configspace import enumerate_space
from .integrals import PHYSICIST
from .pauli import PauliOperator, popcount

IMAG_TOLERANCE = 1e-10


class EncodingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# single excitations


def _between_mask(a, b):
    lo, hi = min(a, b), max(a, b)
    return ((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1)


def _to_rank_space(f, ranks):
    if ranks is None:
        return f
    out = 0
    for b, r in enumerate(ranks):
        if f >> b & 1:
            out |= 1 << r
    return out


def apply_excitation(f, p, q, ranks=None):
    """``a_p^dag a_q |f>`` as ``(f', sign)``, or ``None`` when it vanishes."""
    if p == q:
        return (f, 1) if f >> p & 1 else None
    if not f >> q & 1 or f >> p & 1:
        return None
    g = _to_rank_space(f, ranks)
    rp, rq = (p, q) if ranks is None else (ranks[p], ranks[q])
    sign = -1 if (g & _between_mask(rp, rq)).bit_count() & 1 else 1
    return f ^ (1 << p) ^ (1 << q), sign


# ---------------------------------------------------------------------------
# transitions


@dataclass
class TransitionOperator:
    """Signed partial map ``k -> (k', c)`` on configuration indices."""

    size: int
    entries: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def target(self, k):
        hit = self.entries.get(k)
        return None if hit is None else hit[0]

    def to_matrix(self):
        m = np.zeros((self.size, self.size))
        for k, (kp, c) in self.entries.items():
            m[kp, k] = c
        return m

    def __eq__(self, other):
        return isinstance(other, TransitionOperator) and self.size == other.size \
            and self.entries == other.entries


def identity_transition(space):
    return TransitionOperator(len(space), {k: (k, 1) for k in range(len(space))})


def build_transition(space, p, q):
    out = {}
    for k, f in enumerate(space.configs):
        hit = apply_excitation(f, p, q, space.sign_ranks)
        if hit is not None and hit[0] in space:
            out[k] = (space.index_of(hit[0]), hit[1])
    return TransitionOperator(len(space), out)


def compose(a, b):
    """Matrix product ``a @ b``: ``b`` acts first."""
    if a.size != b.size:
        raise EncodingError("transitions live on different spaces")
    out = {}
    for k, (mid, cb) in b.entries.items():
        hit = a.entries.get(mid)
        if hit is not None:
            out[k] = (hit[0], hit[1] * cb)
    return TransitionOperator(a.size, out)


# ---------------------------------------------------------------------------
# entry operators and Pauli expansion


class EntryOperator(enum.Enum):
    """One-qubit matrix units ``|a><b|`` keyed by (target bit, source bit)."""

    Q_PLUS = (1, 0)
    Q_MINUS = (0, 1)
    N_ZERO = (0, 0)
    N_ONE = (1, 1)

    @classmethod
    def for_bits(cls, target, source):
        return cls((target, source))

    def pauli(self):
        half = 0.5
        return {
            EntryOperator.Q_PLUS: {"X": half, "Y": -0.5j},
            EntryOperator.Q_MINUS: {"X": half, "Y": 0.5j},
            EntryOperator.N_ZERO: {"I": half, "Z": half},
            EntryOperator.N_ONE: {"I": half, "Z": -half},
        }[self]


def entry_factors(k_target, k_source, n_qubits):
    """Per-qubit entry operators of ``|k_target><k_source|``, qubit 0 first."""
    return [EntryOperator.for_bits(k_target >> w & 1, k_source >> w & 1) for w in range(n_qubits)]


def _expand_entries(targets, sources, coeffs, n_qubits):
    """All ``2**Q`` strings per matrix element, unmerged."""
    zs = np.arange(1 << n_qubits, dtype=np.int64)
    xs = (targets ^ sources)[:, None]
    src = sources[:, None]
    sign = 1 - 2 * (popcount(zs[None, :] & src) & 1)
    phase = np.array([1, -1j, -1, 1j])[popcount(zs[None, :] & xs) % 4]
    c = coeffs[:, None] * sign * phase / (1 << n_qubits)
    return np.broadcast_to(xs, c.shape).ravel(), np.broadcast_to(zs, c.shape).ravel(), c.ravel()


def raw_expansion(space, t):
    """Unmerged ``(x, z, coeff)`` arrays; exactly ``2**Q`` rows per entry."""
    q = space.qubit_count
    if not t.entries:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0, dtype=complex)
    src = np.fromiter(t.entries.keys(), dtype=np.int64)
    tgt = np.array([v[0] for v in t.entries.values()], dtype=np.int64)
    cs = np.array([v[1] for v in t.entries.values()], dtype=complex)
    return _expand_entries(tgt, src, cs, q)


def expand_matrix(mat, n_qubits):
    """Unmerged entry-operator expansion of every nonzero element of ``mat``."""
    rows, cols = np.nonzero(mat)
    return _expand_entries(rows.astype(np.int64), cols.astype(np.int64), mat[rows, cols], n_qubits)


def transition_to_pauli(space, t):
    q = space.qubit_count
    if t.size != len(space):
        raise EncodingError("transition does not match configuration space")
    xs, zs, cs = raw_expansion(space, t)
    return PauliOperator.from_arrays(q, xs, zs, cs)


def _walsh_hadamard(rows):
    """In-place-style WHT along the last axis (length a power of two)."""
    out = rows.copy()
    n = out.shape[-1]
    h = 1
    while h < n:
        v = out.reshape(*out.shape[:-1], n // (2 * h), 2, h)
        a = v[..., 0, :].copy()
        b = v[..., 1, :]
        v[..., 0, :] = a + b
        v[..., 1, :] = a - b
        h *= 2
    return out


def matrix_to_pauli(mat, n_qubits, threshold=None):
    """Exact Pauli decomposition of a matrix embedded in the top-left block.

    Elements sharing ``x = k' ^ k`` are grouped; for each group the ``z``
    coefficients are a Walsh-Hadamard transform of the group's column vector.
    """
    dim = 1 << n_qubits
    size = mat.shape[0]
    full = np.zeros((dim, dim), dtype=complex)
    full[:size, :size] = mat
    ks = np.arange(dim, dtype=np.int64)
    zs = ks
    phase_table = np.array([1, -1j, -1, 1j])
    chunk = max(1, (1 << 20) // dim)
    xs_out, zs_out, cs_out = [], [], []
    for start in range(0, dim, chunk):
        xblock = ks[start:start + chunk]
        v = full[ks[None, :] ^ xblock[:, None], ks[None, :]]
        live = np.any(v != 0, axis=1)
        if not live.any():
            continue
        xblock, v = xblock[live], v[live]
        w = _walsh_hadamard(v)
        w *= phase_table[popcount(xblock[:, None] & zs[None, :]) % 4] / dim
        xs_out.append(np.broadcast_to(xblock[:, None], w.shape).ravel())
        zs_out.append(np.broadcast_to(zs[None, :], w.shape).ravel())
        cs_out.append(w.ravel())
    if not xs_out:
        return PauliOperator(n_qubits)
    kwargs = {} if threshold is None else {"threshold": threshold}
    return PauliOperator.from_arrays(n_qubits, np.concatenate(xs_out), np.concatenate(zs_out),
                                     np.concatenate(cs_out), **kwargs)


# ---------------------------------------------------------------------------
# Hamiltonian assembly


def _parity(a):
    if a.dtype == object:
        return np.array([int(v).bit_count() & 1 for v in a], dtype=np.int64)
    return popcount(a) & 1


def _excite(f, g, p, q, ranks):
    """Vectorized ``a_p^dag a_q`` on configs ``f`` (rank-space copies ``g``).

    Returns ``(valid, f', g', sign)``.
    """
    one = f.dtype.type(1) if f.dtype != object else 1
    bp, bq = one << p, one << q
    if p == q:
        valid = (f & bp) != 0
        return valid, f, g, np.ones(f.shape, dtype=np.int64)
    valid = ((f & bq) != 0) & ((f & bp) == 0)
    rp, rq = (p, q) if ranks is None else (ranks[p], ranks[q])
    mask = _between_mask(rp, rq)
    sign = 1 - 2 * _parity(g & (mask if f.dtype == object else f.dtype.type(mask)))
    rbits = (one << rp) | (one << rq)
    return valid, f ^ (bp | bq), g ^ rbits, sign


class _Lookup:
    def __init__(self, configs):
        self.configs = configs

    def __call__(self, targets, valid):
        idx = np.searchsorted(self.configs, targets)
        idx = np.minimum(idx, len(self.configs) - 1)
        ok = valid & (self.configs[idx] == targets)
        return idx, ok


def _config_arrays(space):
    dtype = np.int64 if space.n_spin_orbitals <= 62 else object
    f = np.array(space.configs, dtype=dtype)
    if space.sign_ranks is None:
        g = f.copy()
    else:
        g = np.array([_to_rank_space(c, space.sign_ranks) for c in space.configs], dtype=dtype)
    return f, g


def effective_one_body(integrals):
    """One-body part with the ``delta_qr E_ps`` piece of the two-body sum folded in."""
    return integrals.one_body + 0.5 * np.einsum("pqqs->ps", integrals.two_body)


def hamiltonian_matrix(space, integrals):
    """``<f_k'|H|f_k>`` over the configuration space, without the constant.

    Intermediate states of ``E_pr E_qs`` may leave the space; only the final
    configuration must be admitted.
    """
    _check_inputs(space, integrals)
    n = space.n_spin_orbitals
    ranks = space.sign_ranks
    f, g = _config_arrays(space)
    size = len(f)
    cols = np.arange(size)
    lookup = _Lookup(f)
    mat = np.zeros((size, size))

    h1 = effective_one_body(integrals)
    for p, q in zip(*np.nonzero(h1)):
        valid, t, _, sign = _excite(f, g, int(p), int(q), ranks)
        idx, ok = lookup(t, valid)
        np.add.at(mat, (idx[ok], cols[ok]), h1[p, q] * sign[ok])

    h2 = integrals.two_body
    # - 1/2 sum h_pqrs E_pr E_qs; E_qs acts first
    for q in range(n):
        for s in range(n):
            block = h2[:, q, :, s]
            pr = np.argwhere(block)
            if not len(pr):
                continue
            valid1, f1, g1, sign1 = _excite(f, g, q, s, ranks)
            if not valid1.any():
                continue
            src = cols[valid1]
            f1, g1, sign1 = f1[valid1], g1[valid1], sign1[valid1]
            for p, r in pr:
                valid2, t, _, sign2 = _excite(f1, g1, int(p), int(r), ranks)
                idx, ok = lookup(t, valid2)
                if ok.any():
                    np.add.at(mat, (idx[ok], src[ok]), -0.5 * block[p, r] * (sign1 * sign2)[ok])
    return mat


def _check_inputs(space, integrals):
    if integrals.n_spin_orbitals != space.n_spin_orbitals:
        raise EncodingError(
            f"integrals cover {integrals.n_spin_orbitals} spin-orbitals, space has {space.n_spin_orbitals}")
    if integrals.convention != PHYSICIST:
        raise EncodingError("integrals must be in physicist spin-orbital form")


@dataclass
class EncodingStats:
    nonzero_elements: int
    raw_terms: int
    merged_terms: int
    max_imag_residue: float


def build_hamiltonian(space, integrals, include_constant=True, stats=None):
    """Pauli operator on ``space.qubit_count`` qubits for ``integrals``.

    Raises ``EncodingError`` if the merged coefficients keep an imaginary
    part above ``IMAG_TOLERANCE``.  Pass a list as ``stats`` to receive an
    ``EncodingStats`` record.
    """
    mat = hamiltonian_matrix(space, integrals)
    q = space.qubit_count
    op = matrix_to_pauli(mat, q)
    residue = op.max_imag()
    if residue > IMAG_TOLERANCE:
        raise EncodingError(f"imaginary residue {residue:.3e} in merged Hamiltonian")
    op = op.real_part()
    if include_constant and integrals.constant:
        op = op + PauliOperator.identity(q, integrals.constant)
    if stats is not None:
        nnz = int(np.count_nonzero(np.abs(mat) > 0))
        stats.append(EncodingStats(nnz, nnz << q, len(op), residue))
    return op


# ---------------------------------------------------------------------------
# Jordan-Wigner reference


def _product_rows(ops_idx, coeffs, n_qubits):
    """Expand ``coeff * prod_j ladder_j`` for arrays of ladder specs.

    ``ops_idx`` is a list of ``(modes, dagger)`` with ``modes`` an int array.
    """
    m = len(coeffs)
    xs_all, zs_all, cs_all = [], [], []
    n_ops = len(ops_idx)
    for choice in range(1 << n_ops):
        x = np.zeros(m, dtype=np.int64)
        z = np.zeros(m, dtype=np.int64)
        c = coeffs.astype(complex)
        for j, (modes, dagger) in enumerate(ops_idx):
            pick = choice >> j & 1
            e = np.left_shift(np.int64(1), modes)
            low = e - 1
            x2, z2 = e, (low | e) if pick else low
            if pick:
                c = c * (-0.5j if dagger else 0.5j)
            else:
                c = c * 0.5
            k = popcount(x & z) + popcount(x2 & z2) + 2 * popcount(z & x2)
            x, z = x ^ x2, z ^ z2
            k = k - popcount(x & z)
            c = c * np.array([1, 1j, -1, -1j])[k % 4]
        xs_all.append(x)
        zs_all.append(z)
        cs_all.append(c)
    return np.concatenate(xs_all), np.concatenate(zs_all), np.concatenate(cs_all)


def jw_encode(integrals, include_constant=True, chunk=200_000):
    """Jordan-Wigner image of the second-quantized Hamiltonian on N qubits."""
    if integrals.convention != PHYSICIST:
        raise EncodingError("integrals must be in physicist spin-orbital form")
    n = integrals.n_spin_orbitals
    if n > 62:
        raise EncodingError("Jordan-Wigner reference limited to 62 spin-orbitals")
    pieces = []
    p, q = np.nonzero(integrals.one_body)
    if len(p):
        pieces.append(_product_rows([(p, True), (q, False)], integrals.one_body[p, q], n))
    idx = np.argwhere(integrals.two_body)
    idx = idx[(idx[:, 0] != idx[:, 1]) & (idx[:, 2] != idx[:, 3])]
    for start in range(0, len(idx), chunk):
        part = idx[start:start + chunk]
        a, b, c, d = part.T
        vals = 0.5 * integrals.two_body[a, b, c, d]
        pieces.append(_product_rows([(a, True), (b, True), (c, False), (d, False)], vals, n))
    if include_constant and integrals.constant:
        pieces.append((np.zeros(1, np.int64), np.zeros(1, np.int64),
                       np.array([integrals.constant], dtype=complex)))
    if not pieces:
        return PauliOperator(n)
    xs, zs, cs = (np.concatenate(t) for t in zip(*pieces))
    op = PauliOperator.from_arrays(n, xs, zs, cs)
    if op.max_imag() > IMAG_TOLERANCE:
        raise EncodingError(f"imaginary residue {op.max_imag():.3e} in JW Hamiltonian")
    return op.real_part()


# ---------------------------------------------------------------------------
# reporting


@dataclass(frozen=True)
class TermCountRow:
    jw_qubits: int
    jw_terms: int
    qee_qubits: int
    qee_terms: int

    def __iter__(self):
        return iter((self.jw_qubits, self.jw_terms, self.qee_qubits, self.qee_terms))


def term_count_report(integrals, flt, include_constant=True):
    space = enumerate_space(flt)
    jw = jw_encode(integrals, include_constant)
    qee = build_hamiltonian(space, integrals, include_constant)
    return TermCountRow(integrals.n_spin_orbitals, len(jw), space.qubit_count, len(qee))


def transition_count_law(n, m, same):
    """Expected nonzero entries of an unfiltered ``E_pq`` (``same``: p == q)."""
    return math.comb(n - 1, m - 1) if same else math.comb(n - 2, m - 1)
