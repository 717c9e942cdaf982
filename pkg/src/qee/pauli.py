"""Linear combinations of Pauli strings in symplectic bitmask form.

A string is a pair of integers ``(x, z)``; qubit ``w`` carries
``I, X, Z, Y`` for ``(x_w, z_w) = (0,0), (1,0), (0,1), (1,1)``.  The string
denotes ``i**popcount(x & z) * X**x Z**z`` so every stored string is
Hermitian and the coefficient carries all phases.

Labels are written with qubit ``Q-1`` first, e.g. ``"XZ"`` is ``X_1 Z_0``.
"""

from __future__ import annotations

import json

import numpy as np

PRUNE_THRESHOLD = 1e-12
DENSE_LIMIT = 14

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTERS.items()}
_IPOW = np.array([1, 1j, -1, -1j])


class PauliError(ValueError):
    pass


def popcount(a):
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


def string_phase(x1, z1, x2, z2):
    """Power of ``i`` in ``P(x1,z1) P(x2,z2) = i**k P(x1^x2, z1^z2)``."""
    x, z = x1 ^ x2, z1 ^ z2
    k = (x1 & z1).bit_count() + (x2 & z2).bit_count() + 2 * (z1 & x2).bit_count() - (x & z).bit_count()
    return k % 4


def label_to_xz(label):
    x = z = 0
    n = len(label)
    for pos, ch in enumerate(label):
        try:
            bx, bz = _BITS[ch]
        except KeyError:
            raise PauliError(f"bad Pauli letter {ch!r} in {label!r}") from None
        w = n - 1 - pos
        x |= bx << w
        z |= bz << w
    return x, z


def xz_to_label(x, z, n):
    return "".join(_LETTERS[(x >> w & 1, z >> w & 1)] for w in range(n - 1, -1, -1))


class PauliOperator:
    """Sum of Pauli strings with complex coefficients on ``n_qubits`` qubits."""

    __slots__ = ("n_qubits", "terms")

    def __init__(self, n_qubits, terms=None, threshold=PRUNE_THRESHOLD):
        self.n_qubits = int(n_qubits)
        self.terms = {}
        if terms:
            limit = 1 << self.n_qubits
            for (x, z), c in terms.items():
                if x >= limit or z >= limit or x < 0 or z < 0:
                    raise PauliError(f"string ({x}, {z}) exceeds {self.n_qubits} qubits")
                c = complex(c)
                if abs(c) >= threshold:
                    self.terms[(int(x), int(z))] = c

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_label(cls, label, coeff=1.0):
        return cls(len(label), {label_to_xz(label): coeff})

    @classmethod
    def from_labels(cls, mapping, n_qubits=None):
        if n_qubits is None:
            lengths = {len(k) for k in mapping}
            if len(lengths) != 1:
                raise PauliError("labels must share one length")
            n_qubits = lengths.pop()
        out = cls(n_qubits)
        for label, c in mapping.items():
            if len(label) != n_qubits:
                raise PauliError(f"label {label!r} has wrong length")
            out = out + cls.from_label(label, c)
        return out

    @classmethod
    def identity(cls, n_qubits, coeff=1.0):
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def zero(cls, n_qubits):
        return cls(n_qubits)

    @classmethod
    def from_arrays(cls, n_qubits, xs, zs, coeffs, threshold=PRUNE_THRESHOLD):
        """Merge parallel arrays of (x, z, coeff), summing repeated strings."""
        xs = np.asarray(xs)
        zs = np.asarray(zs)
        coeffs = np.asarray(coeffs, dtype=complex)
        if xs.size == 0:
            return cls(n_qubits)
        if n_qubits <= 31:
            key = (xs.astype(np.int64) << n_qubits) | zs.astype(np.int64)
            uniq, inv = np.unique(key, return_inverse=True)
            ux, uz = uniq >> n_qubits, uniq & ((1 << n_qubits) - 1)
        elif n_qubits <= 63:
            pairs = np.stack([xs.astype(np.int64), zs.astype(np.int64)], axis=1)
            uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
            ux, uz = uniq[:, 0], uniq[:, 1]
        else:
            acc = {}
            for x, z, c in zip(xs.tolist(), zs.tolist(), coeffs.tolist()):
                acc[(x, z)] = acc.get((x, z), 0) + c
            return cls(n_qubits, acc, threshold)
        inv = inv.ravel()
        re = np.bincount(inv, weights=coeffs.real, minlength=len(ux))
        im = np.bincount(inv, weights=coeffs.imag, minlength=len(ux))
        out = cls(n_qubits)
        keep = np.hypot(re, im) >= threshold
        for x, z, r, i in zip(ux[keep].tolist(), uz[keep].tolist(), re[keep].tolist(), im[keep].tolist()):
            out.terms[(x, z)] = complex(r, i)
        return out

    # -- arithmetic --------------------------------------------------------

    def _check(self, other):
        if not isinstance(other, PauliOperator):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise PauliError(f"length mismatch: {self.n_qubits} vs {other.n_qubits} qubits")
        return True

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        acc = dict(self.terms)
        for k, c in other.terms.items():
            acc[k] = acc.get(k, 0) + c
        return PauliOperator(self.n_qubits, acc)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self + (-other)

    def scale(self, c):
        return PauliOperator(self.n_qubits, {k: v * c for k, v in self.terms.items()})

    def multiply(self, other):
        self._check(other)
        if not self.terms or not other.terms:
            return PauliOperator(self.n_qubits)
        if self.n_qubits > 63:
            acc = {}
            for (xa, za), ca in self.terms.items():
                for (xb, zb), cb in other.terms.items():
                    k = (xa ^ xb, za ^ zb)
                    acc[k] = acc.get(k, 0) + ca * cb * 1j ** string_phase(xa, za, xb, zb)
            return PauliOperator(self.n_qubits, acc)
        ax, az, ac = self._arrays()
        bx, bz, bc = other._arrays()
        x1, x2 = np.meshgrid(ax, bx, indexing="ij")
        z1, z2 = np.meshgrid(az, bz, indexing="ij")
        c = np.outer(ac, bc)
        x, z = x1 ^ x2, z1 ^ z2
        k = popcount(x1 & z1) + popcount(x2 & z2) + 2 * popcount(z1 & x2) - popcount(x & z)
        return PauliOperator.from_arrays(self.n_qubits, x.ravel(), z.ravel(), (c * _IPOW[k % 4]).ravel())

    def __mul__(self, other):
        if isinstance(other, PauliOperator):
            return self.multiply(other)
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        return NotImplemented

    def __matmul__(self, other):
        return self.multiply(other)

    def adjoint(self):
        return PauliOperator(self.n_qubits, {k: c.conjugate() for k, c in self.terms.items()})

    # -- inspection --------------------------------------------------------

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.sorted_terms())

    def __repr__(self):
        return f"PauliOperator({self.n_qubits}, {len(self.terms)} terms)"

    def __eq__(self, other):
        if not isinstance(other, PauliOperator):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.terms == other.terms

    def allclose(self, other, atol=1e-10):
        if self.n_qubits != other.n_qubits:
            return False
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) <= atol for k in keys)

    def coefficient(self, label):
        return self.terms.get(label_to_xz(label), 0j)

    def sorted_terms(self):
        """``(label, coeff)`` ordered by support weight, then Z-part, then X-part."""
        keys = sorted(self.terms, key=lambda k: ((k[0] | k[1]).bit_count(), k[0], k[1]))
        return [(xz_to_label(x, z, self.n_qubits), self.terms[(x, z)]) for x, z in keys]

    def labels(self):
        return {xz_to_label(x, z, self.n_qubits): c for (x, z), c in self.terms.items()}

    def max_imag(self):
        return max((abs(c.imag) for c in self.terms.values()), default=0.0)

    def is_hermitian(self, atol=1e-10):
        return self.max_imag() <= atol

    def real_part(self):
        return PauliOperator(self.n_qubits, {k: c.real for k, c in self.terms.items()})

    def _arrays(self):
        keys = list(self.terms)
        xs = np.array([k[0] for k in keys], dtype=np.int64)
        zs = np.array([k[1] for k in keys], dtype=np.int64)
        cs = np.array([self.terms[k] for k in keys], dtype=complex)
        return xs, zs, cs

    def is_diagonal(self):
        return all(x == 0 for x, _ in self.terms)

    # -- dense form --------------------------------------------------------

    def to_matrix(self, limit=DENSE_LIMIT):
        """Dense ``2**Q`` matrix; qubit 0 is the least-significant index bit."""
        q = self.n_qubits
        if q > limit:
            raise PauliError(f"{q} qubits exceeds dense limit {limit}")
        dim = 1 << q
        mat = np.zeros((dim, dim), dtype=complex)
        ks = np.arange(dim, dtype=np.int64)
        for (x, z), c in self.terms.items():
            sign = 1 - 2 * (popcount(ks & z) & 1)
            mat[ks ^ x, ks] += c * (1j ** (x & z).bit_count()) * sign
        return mat

    def apply(self, state):
        """``H |state>`` without forming the matrix."""
        state = np.asarray(state, dtype=complex)
        out = np.zeros_like(state)
        ks = np.arange(state.shape[0], dtype=np.int64)
        for (x, z), c in self.terms.items():
            sign = 1 - 2 * (popcount(ks & z) & 1)
            out[ks ^ x] += c * (1j ** (x & z).bit_count()) * sign * state
        return out

    # -- text and JSON -----------------------------------------------------

    def format(self, digits=6):
        lines = []
        for label, c in self.sorted_terms():
            if abs(c.imag) > 10 ** -(digits + 1):
                coeff = f"({c.real:+.{digits}f}{c.imag:+.{digits}f}j)"
            else:
                coeff = f"{c.real:+.{digits}f}"
            lines.append(f"{coeff} · {label or 'I'}")
        return "\n".join(lines)

    def __str__(self):
        return self.format()

    def to_dict(self):
        return {"n_qubits": self.n_qubits,
                "terms": [{"string": label, "re": c.real, "im": c.imag}
                          for label, c in self.sorted_terms()]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc):
        try:
            n = int(doc["n_qubits"])
            terms = {}
            for t in doc["terms"]:
                label = t["string"]
                if len(label) != n:
                    raise PauliError(f"string {label!r} does not have {n} letters")
                key = label_to_xz(label)
                terms[key] = terms.get(key, 0) + complex(t["re"], t.get("im", 0.0))
        except (KeyError, TypeError) as exc:
            raise PauliError(f"bad operator document: {exc}") from None
        return cls(n, terms)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def qubitwise_commute(a, b):
    """True when strings ``a = (x, z)`` and ``b`` agree wherever both act."""
    (xa, za), (xb, zb) = a, b
    both = (xa | za) & (xb | zb)
    return ((xa ^ xb) | (za ^ zb)) & both == 0
