"""Line-delimited JSON episode traces."""
import json
from pathlib import Path

from app.core.errors import IntegrityError

TRACE_SCHEMA = "coopgrasp.trace/1.0"


class TraceWriter:
    def __init__(self, path: Path | str, header: dict):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8")
        self.write({"schema": TRACE_SCHEMA, **header})

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_trace(path: Path | str) -> tuple[dict, list[dict]]:
    """(header, step records)."""
    with Path(path).open(encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("schema", "").split("/")[0] != TRACE_SCHEMA.split("/")[0]:
        raise IntegrityError(f"{path}: not an episode trace")
    return lines[0], lines[1:]
