"""Application settings for efrit-mpc (logging, output, archive)."""

import copy
import os
from pathlib import Path
from typing import Any

import yaml

from efrit_mpc.core.errors import ConfigError

DEFAULTS: dict[str, Any] = {
    "logging": {
        "level": "INFO",
        "file": None,
    },
    "output": {
        "dir": "results",
    },
    "archive": {
        "enabled": False,
        "path": "results/archive.db",
        "echo": False,
    },
}


def update_nested_dict(d: dict[str, Any], u: dict[str, Any]) -> None:
    """Update a nested dictionary in place with another nested dictionary.

    Args:
        d: Dictionary to update
        u: Dictionary with updates; leaves replace leaves, mappings merge
    """
    for k, v in u.items():
        if isinstance(v, dict) and k in d and isinstance(d[k], dict):
            update_nested_dict(d[k], v)
        else:
            d[k] = v


def get_dotted(d: dict[str, Any], key: str, default: Any = None) -> Any:
    """Look up a dot-separated path such as `mpc.q` in a nested mapping."""
    value: Any = d
    for k in key.split("."):
        if isinstance(value, dict) and k in value:
            value = value[k]
        else:
            return default
    return value


def set_dotted(d: dict[str, Any], key: str, value: Any) -> None:
    """Set a dot-separated path, creating intermediate mappings."""
    *parents, leaf = key.split(".")
    target = d
    for k in parents:
        child = target.get(k)
        if not isinstance(child, dict):
            child = {}
            target[k] = child
        target = child
    target[leaf] = value


def read_yaml_mapping(path: Path) -> dict[str, Any]:
    """Read a YAML file that must hold a mapping (an empty file gives {})."""
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot read configuration {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Configuration {path} must hold a mapping")
    return data


class Config:
    """Configuration manager for the application."""

    def __init__(self, config_path: Path | str | None = None) -> None:
        """Initialize the configuration manager.

        Args:
            config_path: Path to the configuration file. If None, uses default
                locations.
        """
        self.config: dict[str, Any] = {}
        self.source: Path | None = None
        self._load_config(config_path)

    def load(self, config_path: Path | str | None = None) -> None:
        """Reload settings, e.g. from a file named on the command line."""
        self._load_config(config_path)

    def _load_config(self, config_path: Path | str | None = None) -> None:
        """Load defaults, then the first settings file found, then the local override.

        Args:
            config_path: Path to the configuration file. If None, uses default
                locations.
        """
        self.config = copy.deepcopy(DEFAULTS)

        if config_path is not None and not Path(config_path).exists():
            raise ConfigError(f"Configuration file {config_path} does not exist")

        paths_to_try = [
            Path(config_path) if config_path is not None else None,
            Path("config.yaml"),
            Path("config.yml"),
            Path(os.path.expanduser("~/.efrit_mpc/config.yaml")),
        ]
        for path in paths_to_try:
            if path is not None and path.exists():
                update_nested_dict(self.config, read_yaml_mapping(path))
                self.source = path
                break

        local_config = Path("config.local.yaml")
        if local_config.exists():
            update_nested_dict(self.config, read_yaml_mapping(local_config))

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value.

        Args:
            key: Dot-separated path to the configuration value
            default: Default value to return if the key is not found

        Returns:
            The configuration value or the default
        """
        return get_dotted(self.config, key, default)

    def set(self, key: str, value: Any) -> None:
        """Override a value for the rest of the process."""
        set_dotted(self.config, key, value)


# Global configuration instance
config = Config()
