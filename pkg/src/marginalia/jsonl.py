"""Line-delimited JSON manifests with an optional provenance header.

Every pipeline stage reads and writes files in this shape: one JSON object
per line. The first line may be a header object marked by the reserved
``"_meta"`` key; readers hand it back separately and never confuse it with
a record. Records are serialized with sorted keys so identical data always
produces identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

META_KEY = "_meta"


class ManifestError(ValueError):
    """Raised for malformed manifest content; carries per-line messages."""

    def __init__(self, message: str, errors: list[str] | None = None):
        super().__init__(message)
        self.errors = errors or [message]

    def __str__(self) -> str:
        if len(self.errors) > 1:
            return "\n".join([super().__str__()] + [f"  - {e}" for e in self.errors])
        return super().__str__()


def dump_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_jsonl(path, records, header: dict | None = None) -> None:
    """Write records as JSON lines, preceded by a header line if given."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(dump_line({META_KEY: header}) + "\n")
        for record in records:
            fh.write(dump_line(record) + "\n")


def read_jsonl(path) -> tuple[dict | None, list[dict]]:
    """Read a JSON-lines file; returns ``(header_or_None, records)``.

    Malformed lines raise :class:`ManifestError` naming the line number.
    """
    path = Path(path)
    header = None
    records: list[dict] = []
    errors: list[str] = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(f"{path.name}:{lineno}: invalid JSON ({exc.msg})")
                continue
            if not isinstance(obj, dict):
                errors.append(f"{path.name}:{lineno}: expected a JSON object")
                continue
            if META_KEY in obj:
                if lineno == 1 and header is None:
                    header = obj[META_KEY]
                else:
                    errors.append(f"{path.name}:{lineno}: stray header line")
                continue
            records.append(obj)
    if errors:
        raise ManifestError(f"{len(errors)} malformed line(s) in {path}", errors)
    return header, records
