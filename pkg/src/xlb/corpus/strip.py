"""Comment and blank-line removal for Python and Java function text.

Both scanners are lexical, so they work on fragments that do not parse
(function bodies cut out of a file, historical code). String literals are
copied through untouched, including blank or trailing-space lines inside
multi-line literals.
"""

from __future__ import annotations

import logging
from typing import Union

from ..source import Language

log = logging.getLogger(__name__)


def _normalise_newlines(code: str) -> str:
    return code.replace("\r\n", "\n").replace("\r", "\n")


class _Out:
    """Output buffer that remembers which newlines sit inside string literals."""

    def __init__(self) -> None:
        self.chars: list[str] = []
        self.protected: set[int] = set()  # indexes (in chars) of in-string newlines

    def add(self, text: str, in_string: bool = False) -> None:
        for ch in text:
            if ch == "\n" and in_string:
                self.protected.add(len(self.chars))
            self.chars.append(ch)

    def finish(self) -> str:
        lines: list[str] = []
        current: list[str] = []
        start_protected = False
        for i, ch in enumerate(self.chars + ["\n"]):
            if ch != "\n":
                current.append(ch)
                continue
            end_protected = i in self.protected
            text = "".join(current)
            if not end_protected:
                text = text.rstrip()
            if text.strip() or start_protected:
                lines.append(text)
            elif end_protected:
                lines.append(text)
            current = []
            start_protected = end_protected
        return "\n".join(lines)


def _scan_string(code: str, i: int, out: _Out, quote: str) -> int:
    """Copy a literal opening at ``i`` with delimiter ``quote``; return index after it."""
    n = len(code)
    out.add(quote)
    j = i + len(quote)
    triple = len(quote) == 3
    while j < n:
        ch = code[j]
        if ch == "\\" and j + 1 < n:
            out.add(code[j:j + 2], in_string=True)
            j += 2
            continue
        if code.startswith(quote, j):
            out.add(quote)
            return j + len(quote)
        if ch == "\n" and not triple:
            # unterminated single-line literal: stop at end of line
            return j
        out.add(ch, in_string=True)
        j += 1
    return j


def _strip_python(code: str) -> str:
    out = _Out()
    n = len(code)
    i = 0
    depth = 0
    header = False  # inside a def/class header
    expect_doc = True  # next token may be a documentation string
    line_start = True  # only whitespace seen since the last logical line ended

    while i < n:
        ch = code[i]
        if ch in " \t\f":
            out.add(ch)
            i += 1
            continue
        if ch == "\\" and i + 1 < n and code[i + 1] == "\n":
            out.add("\\\n")
            i += 2
            continue
        if ch == "#":
            while i < n and code[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            out.add(ch)
            i += 1
            if depth == 0:
                line_start = True
            continue

        if ch in "\"'":
            quote = code[i:i + 3] if code[i:i + 3] in ('"""', "'''") else ch
            if expect_doc and line_start and depth == 0 and _is_standalone(code, i, quote):
                end = _skip_string(code, i, quote)
                # keep the newlines so later line structure is unchanged
                out.add("\n" * code.count("\n", i, end))
                i = end
                # a run of standalone strings is dropped as a whole so that
                # stripping stays idempotent
                continue
            i = _scan_string(code, i, out, quote)
            expect_doc = False
            line_start = False
            continue

        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (code[j].isalnum() or code[j] == "_"):
                j += 1
            word = code[i:j]
            if j < n and code[j] in "\"'" and word.lower() in _PREFIXES:
                quote = code[j:j + 3] if code[j:j + 3] in ('"""', "'''") else code[j]
                if expect_doc and line_start and depth == 0 and word.lower() in ("r", "u") \
                        and _is_standalone(code, j, quote):
                    end = _skip_string(code, j, quote)
                    out.add("\n" * code.count("\n", j, end))
                    i = end
                    continue
                out.add(word)
                i = _scan_string(code, j, out, quote)
                expect_doc = False
                line_start = False
                continue
            out.add(word)
            if line_start and depth == 0 and word in ("def", "class"):
                header = True
            elif line_start and word not in ("async",) and not header:
                expect_doc = False
            line_start = line_start and word == "async"
            i = j
            continue

        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth = max(0, depth - 1)
        elif ch == ":" and depth == 0 and header:
            header = False
            expect_doc = True
            line_start = True
            out.add(ch)
            i += 1
            continue
        elif ch == ";" and depth == 0:
            out.add(ch)
            i += 1
            line_start = True
            continue
        if ch == "@" and line_start:
            # decorators do not open a body; keep any pending doc expectation off
            expect_doc = False
        out.add(ch)
        if not header:
            expect_doc = False
        line_start = False
        i += 1
    return out.finish()


_PREFIXES = frozenset({"r", "u", "b", "f", "br", "rb", "fr", "rf"})


def _skip_string(code: str, i: int, quote: str) -> int:
    n = len(code)
    j = i + len(quote)
    while j < n:
        if code[j] == "\\":
            j += 2
            continue
        if code.startswith(quote, j):
            return j + len(quote)
        if code[j] == "\n" and len(quote) == 1:
            return j
        j += 1
    return n


def _is_standalone(code: str, i: int, quote: str) -> bool:
    """True if the literal at ``i`` is followed only by a comment or line end."""
    j = _skip_string(code, i, quote)
    n = len(code)
    while j < n and code[j] in " \t\f":
        j += 1
    return j >= n or code[j] in "\n#"


def _word_char(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def _strip_java(code: str) -> str:
    out = _Out()
    n = len(code)
    i = 0
    while i < n:
        ch = code[i]
        if code.startswith("//", i):
            while i < n and code[i] != "\n":
                i += 1
            continue
        if code.startswith("/*", i):
            end = code.find("*/", i + 2)
            if end < 0:
                log.info("unterminated block comment; stripped to end of text")
                end = n
            else:
                end += 2
            newlines = code.count("\n", i, end)
            if newlines:
                out.add("\n" * newlines)
            elif out.chars and _word_char(out.chars[-1]) and end < n and _word_char(code[end]):
                out.add(" ")  # keep ``int/**/x`` two tokens
            i = end
            continue
        if code.startswith('"""', i):
            i = _scan_string(code, i, out, '"""')
            continue
        if ch in "\"'":
            i = _scan_string(code, i, out, ch)
            continue
        out.add(ch)
        i += 1
    return out.finish()


def strip_comments(code: str, language: Union[str, Language]) -> str:
    """Remove comments, standalone documentation strings and blank lines."""
    lang = Language(language)
    code = _normalise_newlines(code)
    if lang is Language.PYTHON:
        return _strip_python(code)
    return _strip_java(code)
