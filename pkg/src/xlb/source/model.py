"""Uniform syntactic view of Python and Java source files."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Optional


class Language(str, enum.Enum):
    PYTHON = "python"
    JAVA = "java"

    @classmethod
    def from_path(cls, path: str) -> Optional["Language"]:
        lowered = path.lower()
        if lowered.endswith(".py"):
            return cls.PYTHON
        if lowered.endswith(".java"):
            return cls.JAVA
        return None


class StatementKind(str, enum.Enum):
    ASSIGNMENT = "assignment"
    EXPRESSION = "expression"
    LOAD_DECL = "load_decl"
    OTHER = "other"


class SourceError(Exception):
    """Base class for front-end errors."""


class UnreadableSource(SourceError):
    """Input is not decodable text."""


class UnsupportedLanguage(SourceError):
    """Language is neither python nor java."""


@dataclass(frozen=True)
class CallExpr:
    callee: str
    line: int
    receiver: Optional[str] = None
    arg_vars: frozenset[str] = frozenset()

    @property
    def dotted(self) -> str:
        return f"{self.receiver}.{self.callee}" if self.receiver else self.callee

    def to_dict(self) -> dict:
        return {
            "receiver": self.receiver,
            "callee": self.callee,
            "arg_vars": sorted(self.arg_vars),
            "line": self.line,
        }


@dataclass(frozen=True)
class Statement:
    """One simple statement, or the header of a compound one.

    ``block_depth`` counts enclosing control-flow constructs inside the
    housing function; ``target_chains`` holds dotted assignment targets
    (``self.lib``) that are not plain identifiers, and ``value_chain`` is the
    right-hand side when it is a bare name or attribute chain.
    """

    line: int
    col: int
    end_line: int
    kind: StatementKind
    defined_vars: frozenset[str] = frozenset()
    used_vars: frozenset[str] = frozenset()
    calls: tuple[CallExpr, ...] = ()
    block_depth: int = 0
    is_return: bool = False
    target_chains: frozenset[str] = frozenset()
    value_chain: Optional[str] = None

    @property
    def defines(self) -> bool:
        return bool(self.defined_vars)

    def spans(self, line: int) -> bool:
        return self.line <= line <= self.end_line


@dataclass(frozen=True)
class FunctionSpan:
    name: str
    qualified_name: str
    start_line: int
    end_line: int
    body_text: str
    is_native_decl: bool = False
    owner: Optional[str] = None  # innermost enclosing class, if any

    def contains(self, line: int) -> bool:
        return self.start_line <= line <= self.end_line

    def contains_span(self, other: "FunctionSpan") -> bool:
        return self.start_line <= other.start_line and other.end_line <= self.end_line

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "qualified_name": self.qualified_name,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "is_native_decl": self.is_native_decl,
        }


@dataclass(frozen=True)
class ImportDecl:
    module_or_type: str
    line: int
    alias: Optional[str] = None
    names: tuple[str, ...] = ()  # ``from x import a, b`` members


@dataclass(frozen=True)
class TypeDecl:
    name: str
    qualified_name: str
    kind: str  # class | interface | enum | record
    bases: tuple[str, ...]
    line: int
    end_line: int


@dataclass(frozen=True)
class VarDecl:
    name: str
    type_name: str
    line: int
    is_field: bool = False


@dataclass(frozen=True)
class SourceUnit:
    path: str
    language: Language
    source: str
    functions: tuple[FunctionSpan, ...] = ()
    statements: tuple[Statement, ...] = ()
    imports: tuple[ImportDecl, ...] = ()
    types: tuple[TypeDecl, ...] = ()
    var_decls: tuple[VarDecl, ...] = ()
    degraded: bool = False

    @property
    def line_count(self) -> int:
        return len(split_lines(self.source))

    def lines(self) -> list[str]:
        return split_lines(self.source)

    def statements_on(self, line: int) -> list[Statement]:
        return [s for s in self.statements if s.spans(line)]

    def native_methods(self) -> dict[str, set[str]]:
        """Map owning class name -> names of its ``native`` methods."""
        out: dict[str, set[str]] = {}
        for fn in self.functions:
            if fn.is_native_decl and fn.owner:
                out.setdefault(fn.owner, set()).add(fn.name)
        return out

    def declared_type(self, name: str, line: int) -> Optional[str]:
        """Best lexical guess at the declared type of ``name`` used at ``line``.

        Locals declared earlier in the same function win over fields.
        """
        housing = function_at(self, line)
        best: Optional[VarDecl] = None
        for decl in self.var_decls:
            if decl.name != name or decl.is_field:
                continue
            if decl.line > line:
                continue
            if housing is not None and not housing.contains(decl.line):
                continue
            if best is None or decl.line > best.line:
                best = decl
        if best is not None:
            return best.type_name
        for decl in self.var_decls:
            if decl.name == name and decl.is_field:
                return decl.type_name
        return None


def function_at(unit: SourceUnit, line: int) -> Optional[FunctionSpan]:
    """Innermost function span containing ``line``, or None."""
    best: Optional[FunctionSpan] = None
    for fn in unit.functions:
        if fn.contains(line):
            if best is None or best.contains_span(fn):
                best = fn
    return best


_NEWLINE = re.compile(r"\r\n|\r|\n")


def split_lines(source: str, keepends: bool = False) -> list[str]:
    """Split on the line terminators both parsers count (not form feeds)."""
    if not source:
        return []
    out = []
    pos = 0
    for m in _NEWLINE.finditer(source):
        out.append(source[pos : m.end() if keepends else m.start()])
        pos = m.end()
    if pos < len(source):
        out.append(source[pos:])
    return out


def slice_lines(source: str, start_line: int, end_line: int) -> str:
    """Verbatim text of lines ``start_line..end_line`` without the final terminator."""
    text = "".join(split_lines(source, keepends=True)[start_line - 1 : end_line])
    return _strip_final_newline(text)


def _strip_final_newline(text: str) -> str:
    if text.endswith("\r\n"):
        return text[:-2]
    if text.endswith(("\n", "\r")):
        return text[:-1]
    return text


def dedupe_qualified_names(names: list[str]) -> list[str]:
    """Suffix repeated names with ``#2``, ``#3``... in order of appearance."""
    seen: dict[str, int] = {}
    out = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        out.append(name if seen[name] == 1 else f"{name}#{seen[name]}")
    return out


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
    "dedupe_qualified_names",
    "function_at",
    "slice_lines",
    "split_lines",
]
