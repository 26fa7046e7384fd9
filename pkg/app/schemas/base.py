"""Shared pydantic plumbing: strict config models and validation-error translation."""
from typing import TypeVar

from pydantic import BaseModel, ConfigDict, ValidationError

from app.core.errors import ConfigurationError

ModelT = TypeVar("ModelT", bound=BaseModel)


class ConfigModel(BaseModel):
    """Immutable, closed config section: unknown keys are rejected by name."""

    model_config = ConfigDict(extra="forbid", frozen=True)


def describe_validation_error(exc: ValidationError, prefix: str = "") -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        key = f"{prefix}.{loc}" if prefix and loc else (loc or prefix)
        parts.append(f"{key}: {err['msg']}")
    return "; ".join(parts)


def ensure_valid(model: ModelT, prefix: str = "") -> ModelT:
    """Re-validate a model (it may have been built with model_construct)."""
    try:
        return type(model).model_validate(model.model_dump())
    except ValidationError as exc:
        raise ConfigurationError(describe_validation_error(exc, prefix)) from exc
