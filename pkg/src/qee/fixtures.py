"""Checksummed integral fixtures shipped with the package.

``MANIFEST.json`` in the fixture root lists every file with its sha256, the
orbital layout and filter used to encode it, and reference energies from the
generating electronic-structure run.  Set ``QEE_FIXTURES`` to point at a
different root.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .configspace import enumerate_space, parse_filter
from .integrals import OrbitalLayout, load_json_integrals, parse_fcidump, to_spin_orbitals

ENV_VAR = "QEE_FIXTURES"
DEFAULT_ROOT = Path(__file__).parent / "data" / "fixtures"
MANIFEST = "MANIFEST.json"


class FixtureError(RuntimeError):
    pass


def sha256_of(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fixture_root(root=None):
    if root is not None:
        return Path(root)
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else DEFAULT_ROOT


@dataclass(frozen=True)
class Fixture:
    name: str
    root: Path
    record: dict

    @property
    def path(self):
        return self.root / self.record["file"]

    @property
    def distance(self):
        return self.record.get("distance")

    @property
    def reference(self):
        return self.record.get("reference", {})

    def text(self):
        data = self.path.read_bytes()
        digest = hashlib.sha256(data).hexdigest()
        if digest != self.record["sha256"]:
            raise FixtureError(f"checksum mismatch for {self.path.name}: {digest[:12]} != {self.record['sha256'][:12]}")
        return data.decode()

    def spatial(self):
        """Spatial chemist-notation table (frozen-core shift in the constant)."""
        text = self.text()
        if self.record["format"] == "fcidump":
            table, _ = parse_fcidump(text)
            return table
        return load_json_integrals(text)

    def layout(self):
        return OrbitalLayout.from_dict(self.record["layout"])

    def spin_table(self):
        return to_spin_orbitals(self.spatial(), self.layout())

    def symmetry_filter(self):
        layout = self.layout()
        return parse_filter(self.record["filter"], layout.n_spin_orbitals, layout)

    def space(self):
        return enumerate_space(self.symmetry_filter())


class FixtureStore:
    def __init__(self, root=None):
        self.root = fixture_root(root)
        path = self.root / MANIFEST
        if not path.is_file():
            raise FixtureError(f"no {MANIFEST} under {self.root}")
        self.manifest = json.loads(path.read_text())
        self.records = self.manifest["fixtures"]

    def names(self):
        return sorted(self.records)

    def get(self, name):
        try:
            return Fixture(name, self.root, self.records[name])
        except KeyError:
            raise FixtureError(f"unknown fixture {name!r}") from None

    def group(self, group):
        """Fixtures tagged with ``group``, ordered by distance then name."""
        members = [self.get(n) for n, r in self.records.items() if group in r.get("groups", ())]
        if not members:
            raise FixtureError(f"no fixtures in group {group!r}")
        return sorted(members, key=lambda f: (f.distance or 0.0, f.name))

    def verify(self):
        """Names whose file checksum does not match the manifest."""
        return [n for n, r in self.records.items() if sha256_of(self.root / r["file"]) != r["sha256"]]
