"""One- and two-electron integral tables.

Internally every spin-orbital table uses the physicist pairing

    h_pqrs = <p(1) q(2) | r(2) s(1)>

so that ``H = sum h_pq a+_p a_q + 1/2 sum h_pqrs a+_p a+_q a_r a_s`` holds
verbatim.  Chemist-notation input ``(ij|kl)`` converts as
``h_pqrs = (ps|qr)``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

TWO_BODY_THRESHOLD = 1e-12

CHEMIST = "chemist"
PHYSICIST = "physicist"


class IntegralError(ValueError):
    """Malformed or inconsistent integral input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class OrbitalLayout:
    """Placement of spin-orbitals on occupation-vector bits.

    ``spin_order[i + s * n_spatial]`` is the bit holding spatial orbital ``i``
    with spin ``s`` (0 = alpha, 1 = beta).

    ``sign_order`` optionally fixes the canonical creation-operator order used
    for fermionic exchange signs: ``sign_order[b]`` is the rank of bit ``b``.
    ``None`` means rank == bit, the usual Jordan-Wigner convention.
    """

    n_spatial: int
    spin_order: tuple[int, ...]
    sign_order: tuple[int, ...] | None = None

    def __post_init__(self):
        n = 2 * self.n_spatial
        if self.n_spatial < 1:
            raise ValueError("n_spatial must be positive")
        if sorted(self.spin_order) != list(range(n)):
            raise ValueError("spin_order must be a permutation of range(2 * n_spatial)")
        if self.sign_order is not None and sorted(self.sign_order) != list(range(n)):
            raise ValueError("sign_order must be a permutation of range(2 * n_spatial)")

    @classmethod
    def blocked(cls, n_spatial):
        """All alpha spin-orbitals on the low bits, then all beta."""
        return cls(n_spatial, tuple(range(2 * n_spatial)))

    @classmethod
    def interleaved(cls, n_spatial):
        """Bit ``2 i + s`` for spatial orbital ``i`` and spin ``s``."""
        order = [0] * (2 * n_spatial)
        for i in range(n_spatial):
            for s in range(2):
                order[i + s * n_spatial] = 2 * i + s
        return cls(n_spatial, tuple(order))

    @classmethod
    def from_name(cls, name, n_spatial):
        if name == "blocked":
            return cls.blocked(n_spatial)
        if name == "interleaved":
            return cls.interleaved(n_spatial)
        raise ValueError(f"unknown layout {name!r}")

    @property
    def n_spin_orbitals(self):
        return 2 * self.n_spatial

    def bit(self, spatial, spin):
        return self.spin_order[spatial + spin * self.n_spatial]

    def spin_of_bit(self, bit):
        return self.spin_order.index(bit) // self.n_spatial

    def spin_mask(self, spin):
        mask = 0
        for i in range(self.n_spatial):
            mask |= 1 << self.bit(i, spin)
        return mask

    def ranks(self):
        if self.sign_order is None:
            return tuple(range(self.n_spin_orbitals))
        return self.sign_order

    def to_dict(self):
        d = {"n_spatial": self.n_spatial, "spin_order": list(self.spin_order)}
        if self.sign_order is not None:
            d["sign_order"] = list(self.sign_order)
        return d

    @classmethod
    def from_dict(cls, d):
        sign = d.get("sign_order")
        return cls(int(d["n_spatial"]), tuple(d["spin_order"]), None if sign is None else tuple(sign))


@dataclass
class IntegralTable:
    """Dense integral arrays over ``n_orbitals`` orbitals.

    ``spin_resolved`` tables are in the physicist convention over spin-orbitals;
    spatial tables keep whatever ``convention`` they were read in.
    """

    n_orbitals: int
    one_body: np.ndarray
    two_body: np.ndarray
    constant: float = 0.0
    convention: str = PHYSICIST
    spin_resolved: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.n_orbitals
        self.one_body = np.asarray(self.one_body, dtype=float)
        self.two_body = np.asarray(self.two_body, dtype=float)
        if self.one_body.shape != (n, n):
            raise IntegralError(f"one_body has shape {self.one_body.shape}, expected {(n, n)}")
        if self.two_body.shape != (n,) * 4:
            raise IntegralError(f"two_body has shape {self.two_body.shape}, expected {(n,) * 4}")
        if self.convention not in (CHEMIST, PHYSICIST):
            raise IntegralError(f"unknown convention {self.convention!r}")
        self.two_body[np.abs(self.two_body) < TWO_BODY_THRESHOLD] = 0.0

    @property
    def n_spin_orbitals(self):
        if not self.spin_resolved:
            raise AttributeError("spatial table has no spin-orbital count; convert first")
        return self.n_orbitals

    def two_body_items(self):
        """Sparse iteration over nonzero ``((p, q, r, s), value)``."""
        for idx in zip(*np.nonzero(self.two_body)):
            yield tuple(int(i) for i in idx), float(self.two_body[idx])

    def symmetry_error(self):
        """Largest violation of the real-orbital permutational symmetries."""
        h, g = self.one_body, self.two_body
        err = np.max(np.abs(h - h.T), initial=0.0)
        if self.convention == PHYSICIST:
            perms = [(1, 0, 3, 2), (3, 2, 1, 0)]
        else:
            perms = [(1, 0, 2, 3), (2, 3, 0, 1)]
        for perm in perms:
            err = max(err, np.max(np.abs(g - g.transpose(perm)), initial=0.0))
        return float(err)

    def symmetrized(self):
        h = 0.5 * (self.one_body + self.one_body.T)
        g = self.two_body
        if self.convention == PHYSICIST:
            perms = [(0, 1, 2, 3), (1, 0, 3, 2), (3, 2, 1, 0), (2, 3, 0, 1)]
        else:
            perms = [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2)]
            perms += [(2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0)]
        g = sum(g.transpose(p) for p in perms) / len(perms)
        return IntegralTable(self.n_orbitals, h, g, self.constant, self.convention,
                             self.spin_resolved, dict(self.metadata))


def to_spin_orbitals(spatial, layout=None, convention=None):
    """Expand a spatial table onto ``2 * n_spatial`` spin-orbitals.

    Spin-forbidden entries are zero.  ``convention`` overrides the table's
    declared convention when given.
    """
    if spatial.spin_resolved:
        raise IntegralError("table is already spin-resolved")
    n = spatial.n_orbitals
    layout = layout or OrbitalLayout.blocked(n)
    if layout.n_spatial != n:
        raise IntegralError(f"layout covers {layout.n_spatial} spatial orbitals, table has {n}")
    convention = convention or spatial.convention
    g = spatial.two_body
    if convention == CHEMIST:
        # h_pqrs = (ps|qr)
        g = g.transpose(0, 2, 3, 1)
    elif convention != PHYSICIST:
        raise IntegralError(f"unknown convention {convention!r}")

    nso = 2 * n
    bits = np.array(layout.spin_order)
    h = np.zeros((nso, nso))
    two = np.zeros((nso,) * 4)
    for s in range(2):
        b = bits[s * n:(s + 1) * n]
        h[np.ix_(b, b)] = spatial.one_body
    for s1 in range(2):
        b1 = bits[s1 * n:(s1 + 1) * n]
        for s2 in range(2):
            b2 = bits[s2 * n:(s2 + 1) * n]
            # electron 1 carries p and s, electron 2 carries q and r
            two[np.ix_(b1, b2, b2, b1)] = g
    meta = dict(spatial.metadata)
    meta["layout"] = layout.to_dict()
    return IntegralTable(nso, h, two, spatial.constant, PHYSICIST, True, meta)


# -- FCIDUMP ---------------------------------------------------------------

_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _namelist(text):
    keys = list(_HEADER_KEY.finditer(text))
    out = {}
    for a, b in zip(keys, keys[1:] + [None]):
        end = b.start() if b is not None else len(text)
        out[a.group(1).upper()] = text[a.end():end].strip().strip(",").strip()
    return out


def parse_fcidump(text):
    """Read an FCIDUMP stream into a spatial chemist-notation table.

    Returns ``(table, metadata)`` where metadata carries ``NORB``, ``NELEC``,
    ``MS2`` and ``convention``.
    """
    lines = text.splitlines()
    header = []
    body_start = None
    for i, line in enumerate(lines):
        header.append(line)
        if re.search(r"(&END|/)\s*$", line.strip(), re.IGNORECASE):
            body_start = i + 1
            break
    if body_start is None or not header[0].lstrip().upper().startswith("&FCI"):
        raise IntegralError("missing &FCI ... &END namelist header", line=1)

    joined = " ".join(header)
    joined = re.sub(r"^\s*&FCI(DUMP)?", "", joined, flags=re.IGNORECASE)
    joined = re.sub(r"(&END|/)\s*$", "", joined.strip(), flags=re.IGNORECASE)
    meta = _namelist(joined)
    for key in ("NORB", "NELEC"):
        if key not in meta:
            raise IntegralError(f"header lacks {key}", line=1)
    try:
        norb = int(meta["NORB"])
        nelec = int(meta["NELEC"])
        ms2 = int(meta.get("MS2", "0"))
    except ValueError as exc:
        raise IntegralError(f"non-integer header value: {exc}", line=1) from None
    if norb < 1:
        raise IntegralError("NORB must be positive", line=1)

    h = np.zeros((norb, norb))
    g = np.zeros((norb,) * 4)
    constant = 0.0
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 5:
            raise IntegralError(f"expected 'value i j k l', got {line.strip()!r}", line=lineno)
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
        except ValueError:
            raise IntegralError(f"non-numeric value {fields[0]!r}", line=lineno) from None
        try:
            i, j, k, l = (int(f) for f in fields[1:])
        except ValueError:
            raise IntegralError(f"non-integer index in {line.strip()!r}", line=lineno) from None
        if any(x < 0 or x > norb for x in (i, j, k, l)):
            raise IntegralError(f"index out of range 0..{norb} in {line.strip()!r}", line=lineno)
        if i == j == k == l == 0:
            constant = value
        elif k == l == 0:
            if i == 0 or j == 0:
                raise IntegralError(f"malformed one-body index in {line.strip()!r}", line=lineno)
            h[i - 1, j - 1] = h[j - 1, i - 1] = value
        elif 0 in (i, j, k, l):
            # orbital energies and other partial-index records are ignored
            continue
        else:
            i, j, k, l = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k)):
                g[a, b, c, d] = value
                g[c, d, a, b] = value

    metadata = {"NORB": norb, "NELEC": nelec, "MS2": ms2, "convention": CHEMIST}
    table = IntegralTable(norb, h, g, constant, CHEMIST, False, {"n_electrons": nelec, "ms2": ms2})
    return table, metadata


def emit_fcidump(table, n_electrons, ms2=0, tol=TWO_BODY_THRESHOLD):
    """Write a spatial chemist table in FCIDUMP form (8-fold unique entries)."""
    if table.spin_resolved or table.convention != CHEMIST:
        raise IntegralError("FCIDUMP output needs a spatial chemist-notation table")
    n = table.n_orbitals
    out = [f" &FCI NORB={n},NELEC={n_electrons},MS2={ms2},", " &END"]
    g, h = table.two_body, table.one_body
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    if abs(g[i, j, k, l]) > tol:
                        out.append(f"{float(g[i, j, k, l])!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            if abs(h[i, j]) > tol:
                out.append(f"{float(h[i, j])!r} {i + 1} {j + 1} 0 0")
    out.append(f"{float(table.constant)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


# -- JSON schema -----------------------------------------------------------

def load_json_integrals(text):
    """Parse the repository JSON integral schema."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IntegralError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise IntegralError("top level must be an object")
    if "convention" not in doc:
        raise IntegralError("missing 'convention' field")
    convention = doc["convention"]
    if convention not in (CHEMIST, PHYSICIST):
        raise IntegralError(f"unknown convention {convention!r}")
    if ("n_spin_orbitals" in doc) == ("n_spatial" in doc):
        raise IntegralError("exactly one of 'n_spin_orbitals' / 'n_spatial' is required")
    spin_resolved = "n_spin_orbitals" in doc
    n = doc["n_spin_orbitals"] if spin_resolved else doc["n_spatial"]
    if not isinstance(n, int) or n < 1:
        raise IntegralError("orbital count must be a positive integer")
    for key in ("constant", "one_body", "two_body"):
        if key not in doc:
            raise IntegralError(f"missing {key!r} field")

    h = np.zeros((n, n))
    g = np.zeros((n,) * 4)
    for entry in doc["one_body"]:
        if len(entry) != 3:
            raise IntegralError(f"one_body entry {entry!r} is not [p, q, v]")
        p, q, v = entry
        _check_indices((p, q), n)
        h[p, q] = v
    for entry in doc["two_body"]:
        if len(entry) != 5:
            raise IntegralError(f"two_body entry {entry!r} is not [p, q, r, s, v]")
        *idx, v = entry
        _check_indices(idx, n)
        g[tuple(idx)] = v
    metadata = doc.get("metadata", {})
    extra = {k: v for k, v in doc.items()
             if k not in ("n_spin_orbitals", "n_spatial", "convention", "constant",
                          "one_body", "two_body", "metadata")}
    if extra:
        metadata = dict(metadata, _extra=extra)
    return IntegralTable(n, h, g, float(doc["constant"]), convention, spin_resolved, metadata)


def _check_indices(idx, n):
    for i in idx:
        if not isinstance(i, int) or not 0 <= i < n:
            raise IntegralError(f"index {i!r} outside [0, {n})")


def emit_json_integrals(table):
    """Serialize to the JSON schema; exact inverse of :func:`load_json_integrals`."""
    n = table.n_orbitals
    doc = {"n_spin_orbitals" if table.spin_resolved else "n_spatial": n,
           "convention": table.convention,
           "constant": float(table.constant)}
    meta = dict(table.metadata)
    extra = meta.pop("_extra", {})
    doc.update(extra)
    if meta:
        doc["metadata"] = meta
    doc["one_body"] = [[int(p), int(q), float(table.one_body[p, q])]
                       for p, q in zip(*np.nonzero(table.one_body))]
    doc["two_body"] = [[*idx, v] for idx, v in table.two_body_items()]
    return _dump_compact(doc)


def _dump_compact(doc):
    # one entry per line keeps fixture diffs readable
    lines = ["{"]
    items = list(doc.items())
    for i, (key, val) in enumerate(items):
        sep = "," if i < len(items) - 1 else ""
        if key in ("one_body", "two_body"):
            if not val:
                lines.append(f' "{key}": []{sep}')
                continue
            lines.append(f' "{key}": [')
            for j, row in enumerate(val):
                tail = "," if j < len(val) - 1 else ""
                lines.append("  " + json.dumps(row) + tail)
            lines.append(f" ]{sep}")
        else:
            lines.append(f" {json.dumps(key)}: {json.dumps(val, sort_keys=True)}{sep}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def random_spatial_table(n_spatial, seed=None, scale=1.0):
    """Random chemist-notation table with the real-orbital 8-fold symmetry."""
    rng = np.random.default_rng(seed)
    n = n_spatial
    h = rng.normal(scale=scale, size=(n, n))
    g = rng.normal(scale=0.5 * scale, size=(n,) * 4)
    raw = IntegralTable(n, h, g, float(rng.normal()), CHEMIST, False)
    return raw.symmetrized()
