import shutil

import pytest

from qee.cli import EXIT_INPUT, main
from qee.fixtures import DEFAULT_ROOT, ENV_VAR, FixtureError, FixtureStore


@pytest.fixture
def corrupted(tmp_path):
    root = tmp_path / "fixtures"
    shutil.copytree(DEFAULT_ROOT, root)
    target = root / FixtureStore(root).get("h2_sto3g_restricted").record["file"]
    target.write_text(target.read_text().replace("0.", "1.", 1))
    return root


def test_shipped_corpus_is_intact(store):
    assert store.verify() == []
    assert len(store.group("survey")) == 12
    assert [f.distance for f in store.group("h2_631g")][:2] == [0.3, 0.4]


def test_checksum_mismatch_is_refused(corrupted):
    store = FixtureStore(corrupted)
    assert store.verify() == ["h2_sto3g_restricted"]
    with pytest.raises(FixtureError, match="checksum"):
        store.get("h2_sto3g_restricted").spin_table()
    store.get("h2_sto3g_unrestricted").spin_table()


def test_env_var_selects_root(corrupted, monkeypatch, capsys):
    monkeypatch.setenv(ENV_VAR, str(corrupted))
    assert FixtureStore().root == corrupted
    assert main(["fixtures", "verify"]) == EXIT_INPUT
    assert main(["encode", "--fixture", "h2_sto3g_restricted"]) == EXIT_INPUT
    assert "checksum" in capsys.readouterr().err


def test_unknown_names(store):
    with pytest.raises(FixtureError):
        store.get("nope")
    with pytest.raises(FixtureError):
        store.group("nope")
    with pytest.raises(FixtureError):
        FixtureStore("/nonexistent/path")
