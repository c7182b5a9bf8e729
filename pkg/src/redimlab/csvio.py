"""Deterministic CSV output with a comment metadata header.

Numbers are written in scientific notation with 17 significant digits and a
'.' decimal separator, so identical runs produce byte-identical files.
Metadata lines ('# key: value') precede the RFC-4180-style header row.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        return f"{value:.16e}"
    return str(value)


def write_csv(path: Path | str, columns: list[str], rows: Iterable[Iterable],
              metadata: Mapping[str, object]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {key}: {fmt(val)}" for key, val in metadata.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_text(path: Path | str, content: str,
               metadata: Mapping[str, object] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    head = ""
    if metadata:
        head = "".join(f"# {key}: {fmt(val)}\n" for key, val in metadata.items())
    path.write_text(head + content, encoding="utf-8")
    return path
