"""Front ends producing a uniform :class:`SourceUnit` for Python and Java."""

from __future__ import annotations

from pathlib import Path
from typing import Union

from .java_frontend import parse_java
from .model import (
    CallExpr,
    FunctionSpan,
    ImportDecl,
    Language,
    SourceError,
    SourceUnit,
    Statement,
    StatementKind,
    TypeDecl,
    UnreadableSource,
    UnsupportedLanguage,
    VarDecl,
    function_at,
    slice_lines,
    split_lines,
)
from .python_frontend import parse_python


def _coerce_language(language: Union[str, Language]) -> Language:
    try:
        return Language(language)
    except ValueError:
        raise UnsupportedLanguage(f"unsupported language: {language!r}") from None


def parse_unit(path: str, source: Union[str, bytes], language: Union[str, Language]) -> SourceUnit:
    """Parse one file into a :class:`SourceUnit`.

    Parsing is best-effort: syntax errors degrade the result instead of
    raising. Only non-text input and unknown languages are errors.
    """
    lang = _coerce_language(language)
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise UnreadableSource(f"{path}: not UTF-8 text ({exc})") from exc
    if "\x00" in source:
        raise UnreadableSource(f"{path}: contains NUL bytes")
    if source.startswith("﻿"):
        source = source[1:]
    if lang is Language.PYTHON:
        return parse_python(path, source)
    return parse_java(path, source)


def read_unit(path: Union[str, Path], root: Union[str, Path, None] = None) -> SourceUnit:
    """Read and parse a ``.py`` / ``.java`` file, recording it relative to ``root``."""
    path = Path(path)
    lang = Language.from_path(path.name)
    if lang is None:
        raise UnsupportedLanguage(f"{path}: not a .py or .java file")
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UnreadableSource(f"{path}: {exc}") from exc
    rel = path.relative_to(root).as_posix() if root is not None else path.as_posix()
    return parse_unit(rel, data, lang)


__all__ = [
    "CallExpr",
    "FunctionSpan",
    "ImportDecl",
    "Language",
    "SourceError",
    "SourceUnit",
    "Statement",
    "StatementKind",
    "TypeDecl",
    "UnreadableSource",
    "UnsupportedLanguage",
    "VarDecl",
    "function_at",
    "parse_unit",
    "read_unit",
    "slice_lines",
    "split_lines",
]
