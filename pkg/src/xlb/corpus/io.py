"""JSONL reading and writing with line-numbered errors."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Union

from ..fsutil import atomic_write_text


class MalformedJsonl(ValueError):
    def __init__(self, path: Union[str, Path], line: int, reason: str) -> None:
        super().__init__(f"{path}:{line}: {reason}")
        self.path = str(path)
        self.line = line


def read_jsonl(path: Union[str, Path]) -> list[dict]:
    """Objects from a JSONL file; blank lines are skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedJsonl(path, 0, f"not UTF-8 ({exc})") from exc
    rows = []
    for no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except ValueError as exc:
            raise MalformedJsonl(path, no, str(exc)) from exc
        if not isinstance(row, dict):
            raise MalformedJsonl(path, no, "expected a JSON object")
        rows.append(row)
    return rows


def dumps_jsonl(rows: Iterable[Any]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)


def write_jsonl(path: Union[str, Path], rows: Iterable[Any]) -> None:
    atomic_write_text(path, dumps_jsonl(rows))


def write_json(path: Union[str, Path], data: Any) -> None:
    atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n")
