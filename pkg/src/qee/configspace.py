"""Fermionic configuration sets and their ascending qubit-basis mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .integrals import OrbitalLayout


class ConfigSpaceError(ValueError):
    pass


def qubit_count_for(n, m):
    """``ceil(log2(C(n, m)))`` in exact integer arithmetic."""
    if not 0 <= m <= n:
        raise ConfigSpaceError(f"need 0 <= m <= n, got n={n}, m={m}")
    return qubits_for_size(math.comb(n, m))


def qubits_for_size(size):
    """Smallest Q with ``size <= 2**Q`` (0 for a single configuration)."""
    if size < 1:
        raise ConfigSpaceError("empty configuration set")
    return (size - 1).bit_length()


def weight_combinations(n, m):
    """All n-bit integers of Hamming weight m, ascending (Gosper's hack)."""
    if m == 0:
        yield 0
        return
    if m > n:
        return
    v = (1 << m) - 1
    limit = 1 << n
    while v < limit:
        yield v
        c = v & -v
        r = v + c
        v = (((r ^ v) >> 2) // c) | r


def _scatter(bits_value, positions):
    out = 0
    for i, pos in enumerate(positions):
        if bits_value >> i & 1:
            out |= 1 << pos
    return out


@dataclass(frozen=True)
class SymmetryFilter:
    """Selection rule for admitted configurations.

    ``sz`` is ``(m_alpha, m_beta)``; alpha/beta bits come from ``layout``
    (blocked by default).
    """

    n_spin_orbitals: int
    n_particles: int
    sz: tuple[int, int] | None = None
    exclude: frozenset = frozenset()
    include_extra: frozenset = frozenset()
    layout: OrbitalLayout | None = None

    def __post_init__(self):
        n, m = self.n_spin_orbitals, self.n_particles
        if not 0 <= m <= n:
            raise ConfigSpaceError(f"need 0 <= m <= N, got N={n}, m={m}")
        if self.sz is not None:
            if sum(self.sz) != m or min(self.sz) < 0:
                raise ConfigSpaceError(f"sz counts {self.sz} do not add up to m={m}")
            if n % 2:
                raise ConfigSpaceError("sz filtering needs an even spin-orbital count")
        if self.layout is not None and self.layout.n_spin_orbitals != n:
            raise ConfigSpaceError("layout size does not match N")
        object.__setattr__(self, "exclude", frozenset(self.exclude))
        object.__setattr__(self, "include_extra", frozenset(self.include_extra))
        if self.exclude & self.include_extra:
            raise ConfigSpaceError("exclude and include_extra overlap")
        for f in self.exclude | self.include_extra:
            if f < 0 or f >> n:
                raise ConfigSpaceError(f"configuration {f:b} references bits >= N={n}")

    def resolved_layout(self):
        return self.layout or OrbitalLayout.blocked(self.n_spin_orbitals // 2)

    def candidates(self):
        n, m = self.n_spin_orbitals, self.n_particles
        if self.sz is None:
            return weight_combinations(n, m)
        layout = self.resolved_layout()
        half = n // 2
        alpha = [layout.bit(i, 0) for i in range(half)]
        beta = [layout.bit(i, 1) for i in range(half)]
        ma, mb = self.sz
        fa = [_scatter(v, alpha) for v in weight_combinations(half, ma)]
        fb = [_scatter(v, beta) for v in weight_combinations(half, mb)]
        return sorted(a | b for a in fa for b in fb)


@dataclass(frozen=True)
class ConfigSpace:
    """Ascending list of admitted configurations; ``configs[k]`` maps to ``|k>``.

    ``sign_ranks`` carries the layout's creation-operator order for fermionic
    signs (``None``: bit order).
    """

    n_spin_orbitals: int
    configs: tuple[int, ...]
    sign_ranks: tuple[int, ...] | None = None
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.configs:
            raise ConfigSpaceError("empty configuration set")
        if any(a >= b for a, b in zip(self.configs, self.configs[1:])):
            raise ConfigSpaceError("configurations must be strictly ascending")
        object.__setattr__(self, "_index", {f: k for k, f in enumerate(self.configs)})

    def __len__(self):
        return len(self.configs)

    def __contains__(self, f):
        return f in self._index

    @property
    def qubit_count(self):
        return qubits_for_size(len(self.configs))

    @property
    def n_particles(self):
        weights = {f.bit_count() for f in self.configs}
        return weights.pop() if len(weights) == 1 else None

    def index_of(self, f):
        try:
            return self._index[f]
        except KeyError:
            raise ConfigSpaceError(f"configuration {f:0{self.n_spin_orbitals}b} not in space") from None

    def label(self, f):
        return format(f, f"0{self.n_spin_orbitals}b")

    def qubit_label(self, k):
        q = self.qubit_count
        return format(k, f"0{q}b") if q else ""

    def table(self, names=None):
        """Rows ``(filled spin-orbitals, f-string, q-string)``."""
        rows = []
        for k, f in enumerate(self.configs):
            filled = [i for i in range(self.n_spin_orbitals) if f >> i & 1]
            if names is not None:
                filled = [names[i] for i in filled]
            rows.append((" ".join(str(x) for x in reversed(filled)), self.label(f), self.qubit_label(k)))
        return rows

    def to_dict(self):
        return {"n_spin_orbitals": self.n_spin_orbitals,
                "qubit_count": self.qubit_count,
                "mapping": [{"index": k, "config": self.label(f), "qubits": self.qubit_label(k)}
                            for k, f in enumerate(self.configs)]}


def enumerate_space(flt):
    """Build the ascending configuration space admitted by ``flt``."""
    keep = set(flt.candidates())
    keep -= flt.exclude
    for f in flt.include_extra:
        keep.add(f)
    if not keep:
        raise ConfigSpaceError("filter admits no configurations")
    ranks = flt.layout.sign_order if flt.layout is not None else None
    return ConfigSpace(flt.n_spin_orbitals, tuple(sorted(keep)), ranks)


def encode_state(space, f):
    return space.index_of(f)


def space_from_configs(n, configs, sign_ranks=None):
    return ConfigSpace(n, tuple(sorted(set(configs))), sign_ranks)


def parse_filter(spec, n_spin_orbitals, layout=None):
    """Parse ``"m=2;sz=1,1;exclude=0101,1010;include=..."``.

    Configurations are bit strings written most-significant bit first.
    """
    fields = {}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        key, _, val = part.partition("=")
        fields[key.strip().lower()] = val.strip()
    if "m" not in fields:
        raise ConfigSpaceError("filter spec needs m=<particles>")
    try:
        m = int(fields["m"])
        sz = None
        if fields.get("sz"):
            a, b = fields["sz"].split(",")
            sz = (int(a), int(b))
        exclude = frozenset(int(x, 2) for x in fields.get("exclude", "").split(",") if x)
        include = frozenset(int(x, 2) for x in fields.get("include", "").split(",") if x)
    except ValueError as exc:
        raise ConfigSpaceError(f"bad filter spec {spec!r}: {exc}") from None
    return SymmetryFilter(n_spin_orbitals, m, sz, exclude, include, layout)


def log2_binomial_bound(n, m):
    """``m log2 N - log2 m!``; strict upper bound on ``log2 C(N, m)`` for m >= 2."""
    return m * math.log2(n) - math.log2(math.factorial(m))
