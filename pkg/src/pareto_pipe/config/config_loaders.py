"""Loading of run configurations and command-line overrides."""

import copy
from pathlib import Path
from typing import Any

import yaml
from loguru import logger
from pydantic import ValidationError

from pareto_pipe.config.config_schema import CURRENT_SCHEMA_VERSION, RunConfig
from pareto_pipe.errors import ConfigError

#: Config keys holding input paths, resolved against the config file folder.
INPUT_PATH_KEYS = (
    "sites.path",
    "data.path",
    "lift.episodes_path",
    "diagnose.fit_path",
)


def read_settings(settings_path: str | Path | None) -> dict[str, Any]:
    """Reads the raw YAML mapping of a config file.

    Relative input paths are made relative to the folder of the file.

    Args:
        settings_path: Path to the YAML file, or ``None`` for an empty
            configuration.

    Returns:
        The settings dictionary.

    Raises:
        ConfigError: If the file is missing or does not hold a mapping.
    """
    if settings_path is None:
        return {}
    settings_path = Path(settings_path)
    if not settings_path.is_file():
        raise ConfigError(f"Config file '{settings_path}' does not exist.")
    with open(settings_path) as file:
        settings = yaml.safe_load(file) or {}
    if not isinstance(settings, dict):
        raise ConfigError(f"Config '{settings_path}' is not a YAML mapping.")

    base = settings_path.parent
    for key in INPUT_PATH_KEYS:
        value = get_dotted(settings, key)
        if isinstance(value, str) and not Path(value).is_absolute():
            set_dotted(settings, key, str(base / value))
    return settings


def get_dotted(settings: dict[str, Any], key: str) -> Any:
    """Value at ``a.b.c``, ``None`` when any level is absent."""
    node: Any = settings
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


def set_dotted(settings: dict[str, Any], key: str, value: Any) -> None:
    """Sets ``a.b.c = value``, creating intermediate sections."""
    *parents, leaf = key.split(".")
    node = settings
    for part in parents:
        child = node.get(part)
        if not isinstance(child, dict):
            child = {}
            node[part] = child
        node = child
    node[leaf] = value


def check_schema_version(settings: dict[str, Any]) -> None:
    """Rejects configs written for a newer schema.

    Raises:
        ConfigError: If ``schema_version`` is newer than this build.
    """
    version = settings.get("schema_version", CURRENT_SCHEMA_VERSION)
    if not isinstance(version, int) or version > CURRENT_SCHEMA_VERSION:
        msg = (
            f"Config schema version {version!r} is not supported; this build "
            f"reads versions up to {CURRENT_SCHEMA_VERSION}."
        )
        logger.error(msg)
        raise ConfigError(msg)


def load_config(
    settings_path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """Loads a run configuration and applies command-line overrides.

    Args:
        settings_path: Path to the YAML settings file, or ``None``.
        overrides: Values keyed by dotted path (``general.seed``); they
            replace the file's values. ``None`` values are ignored.

    Returns:
        The validated RunConfig.

    Raises:
        ConfigError: If the config is a newer schema than this build
            understands, or if it fails validation (with a readable
            message).
    """
    settings = copy.deepcopy(read_settings(settings_path))
    check_schema_version(settings)

    for key, value in (overrides or {}).items():
        if value is not None:
            set_dotted(settings, key, value)

    try:
        config = RunConfig.model_validate(settings)
    except ValidationError as exc:
        msg = _format_validation_error(settings_path, exc)
        logger.error(msg)
        raise ConfigError(msg) from exc
    return config


def prepare_directories(config: RunConfig) -> None:
    """Creates the run and log folders."""
    config.run_dir.mkdir(parents=True, exist_ok=True)
    config.log_dir_path.mkdir(parents=True, exist_ok=True)


def _format_validation_error(
    settings_path: str | Path | None, exc: ValidationError
) -> str:
    """Turn a Pydantic ValidationError into a short, human-readable message.

    Args:
        settings_path: The config file that failed, for context.
        exc: The Pydantic validation error.

    Returns:
        A plain-text summary listing each problem as ``section.field: message``.
    """
    source = f"Config '{settings_path}'" if settings_path else "Configuration"
    lines = [f"{source} is not valid for schema v{CURRENT_SCHEMA_VERSION}:"]
    for err in exc.errors():
        location = ".".join(str(part) for part in err["loc"]) or "<root>"
        lines.append(f"  - {location}: {err['msg']}")
    return "\n".join(lines)
