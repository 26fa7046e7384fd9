"""CSV tables with a versioned schema line: metrics, results and force statistics."""
import csv
from pathlib import Path
from typing import TypeVar

from pydantic import BaseModel, ValidationError

from app.core.errors import IntegrityError

METRICS_SCHEMA = "coopgrasp.metrics/1.0"
RESULTS_SCHEMA = "coopgrasp.results/1.0"
FORCE_STATS_SCHEMA = "coopgrasp.forcestats/1.0"
CURVES_SCHEMA = "coopgrasp.curves/1.0"

SCHEMA_PREFIX = "# schema: "

RowT = TypeVar("RowT", bound=BaseModel)


def _schema_parts(schema: str) -> tuple[str, int]:
    name, _, version = schema.partition("/")
    try:
        return name, int(version.split(".")[0])
    except ValueError as exc:
        raise IntegrityError(f"malformed schema tag {schema!r}") from exc


def _columns(model: type[BaseModel]) -> list[str]:
    return list(model.model_fields)


class TableWriter:
    """Incremental CSV writer; every row is flushed so a crash keeps what was written."""

    def __init__(self, path: Path | str, schema: str, model: type[BaseModel], columns: list[str] | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.columns = columns or _columns(model)
        self._fh = self.path.open("w", newline="", encoding="utf-8")
        self._fh.write(f"{SCHEMA_PREFIX}{schema}\n")
        self._writer = csv.DictWriter(self._fh, fieldnames=self.columns)
        self._writer.writeheader()
        self._fh.flush()

    def write(self, row: BaseModel | dict) -> None:
        data = row.model_dump() if isinstance(row, BaseModel) else row
        self._writer.writerow({k: data[k] for k in self.columns})
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TableWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_table(path: Path | str, schema: str, model: type[BaseModel], rows) -> Path:
    with TableWriter(path, schema, model) as writer:
        for row in rows:
            writer.write(row)
    return Path(path)


def read_schema(path: Path | str) -> str:
    with Path(path).open(encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first.startswith(SCHEMA_PREFIX):
        raise IntegrityError(f"{path}: missing schema line")
    return first[len(SCHEMA_PREFIX):]


def read_table(path: Path | str, schema: str, model: type[RowT]) -> list[RowT]:
    """Rows of a table whose schema name matches and whose major version is supported."""
    path = Path(path)
    found = read_schema(path)
    want_name, want_major = _schema_parts(schema)
    name, major = _schema_parts(found)
    if name != want_name or major != want_major:
        raise IntegrityError(f"{path}: schema {found!r} is not readable as {schema!r}")
    with path.open(newline="", encoding="utf-8") as fh:
        fh.readline()
        reader = csv.DictReader(fh)
        try:
            return [model.model_validate(row) for row in reader]
        except ValidationError as exc:
            raise IntegrityError(f"{path}: malformed row: {exc.errors()[0]['msg']}") from exc
