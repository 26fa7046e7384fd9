"""Run configuration files (TOML) and dotted-key overrides."""
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

import tomli_w
from pydantic import ValidationError

from app.core.errors import ConfigurationError
from app.schemas.base import describe_validation_error
from app.schemas.run import RunConfig


def parse_override(item: str) -> tuple[list[str], Any]:
    """`train.actor_lr=1e-3` -> (["train", "actor_lr"], 0.001); bare words stay strings."""
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigurationError(f"override {item!r} is not of the form key=value")
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(data: dict, overrides: list[str] | None) -> dict:
    data = dict(data)
    for item in overrides or []:
        path, value = parse_override(item)
        node = data
        for part in path[:-1]:
            child = node.get(part)
            child = dict(child) if isinstance(child, dict) else {}
            node[part] = child
            node = child
        node[path[-1]] = value
    return data


def build_run_config(data: dict, overrides: list[str] | None = None, source: str = "config") -> RunConfig:
    try:
        return RunConfig.model_validate(apply_overrides(data, overrides))
    except ValidationError as exc:
        raise ConfigurationError(f"{source}: {describe_validation_error(exc)}") from exc


def read_config_data(path: Path | str) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc


def load_run_config(path: Path | str | None, overrides: list[str] | None = None) -> RunConfig:
    data = read_config_data(path) if path is not None else {}
    return build_run_config(data, overrides, source=str(path) if path else "defaults")


def config_to_dict(config: RunConfig) -> dict:
    return config.model_dump(mode="json", exclude_none=True)


def dump_run_config(config: RunConfig, path: Path | str) -> None:
    """Write the fully resolved config so the run can be reproduced from it alone."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        tomli_w.dump(config_to_dict(config), fh)


def dumps_run_config(config: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(config))
