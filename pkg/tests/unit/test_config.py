"""Tests for application settings."""

from pathlib import Path

import pytest

from efrit_mpc.config import (
    DEFAULTS,
    Config,
    get_dotted,
    read_yaml_mapping,
    set_dotted,
    update_nested_dict,
)
from efrit_mpc.core.errors import ConfigError


def test_nested_helpers() -> None:
    """Test dotted lookups and nested merges."""
    d = {"mpc": {"q": 1.0, "r": 0.0}}
    update_nested_dict(d, {"mpc": {"q": 5.0}, "seed": 3})
    assert d == {"mpc": {"q": 5.0, "r": 0.0}, "seed": 3}
    assert get_dotted(d, "mpc.q") == 5.0
    assert get_dotted(d, "mpc.hp", 5) == 5
    assert get_dotted(d, "seed.x") is None
    set_dotted(d, "bode.amp", 2.0)
    assert d["bode"] == {"amp": 2.0}


def test_defaults(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    """Test the built-in settings when no file exists."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("HOME", str(tmp_path))
    cfg = Config()
    assert cfg.source is None
    assert cfg.get("logging.level") == "INFO"
    assert cfg.get("archive.enabled") is False
    assert cfg.get("missing.key", 7) == 7
    # Defaults are copied, not shared
    cfg.set("output.dir", "elsewhere")
    assert DEFAULTS["output"]["dir"] == "results"


def test_file_and_local_override(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """Test the settings file and the local override."""
    monkeypatch.chdir(tmp_path)
    (tmp_path / "settings.yaml").write_text(
        "logging:\n  level: DEBUG\narchive:\n  enabled: true\n", encoding="utf-8"
    )
    (tmp_path / "config.local.yaml").write_text(
        "archive:\n  path: local.db\n", encoding="utf-8"
    )
    cfg = Config(tmp_path / "settings.yaml")
    assert cfg.source == tmp_path / "settings.yaml"
    assert cfg.get("logging.level") == "DEBUG"
    assert cfg.get("archive.enabled") is True
    assert cfg.get("archive.path") == "local.db"
    assert cfg.get("archive.echo") is False


def test_invalid_files(tmp_path: Path) -> None:
    """Test missing and malformed settings files."""
    with pytest.raises(ConfigError):
        Config(tmp_path / "absent.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- a\n- b\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_yaml_mapping(bad)
    bad.write_text("key: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_yaml_mapping(bad)
    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert read_yaml_mapping(empty) == {}
