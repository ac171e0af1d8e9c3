"""CSV reports with a commented header carrying the effective configuration."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence], header: dict[str, str] | str = "") -> str:
    buf = io.StringIO()
    if isinstance(header, dict):
        header = "".join(f"{k} = {v}\n" for k, v in header.items())
    for line in header.splitlines():
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, header="") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(columns, rows, header), encoding="utf-8")
    return path


def read_csv(path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Parse a report back into (header settings, rows)."""
    settings, body = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(" = ")
            settings[key] = value
        else:
            body.append(line)
    return settings, list(csv.DictReader(body))
