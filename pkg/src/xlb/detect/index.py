"""Project-wide binding index: which names are implemented natively, and how."""

from __future__ import annotations

import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Optional, Union

from ..source import Language, SourceUnit
from ..source.java_frontend import clean_type
from .mechanisms import EXTENSION_PRECEDENCE, Mechanism, PatternConfig

log = logging.getLogger(__name__)

NATIVE_SUFFIXES = frozenset({".c", ".cc", ".cpp", ".cxx", ".c++", ".h", ".hh", ".hpp", ".hxx", ".i", ".swg", ".inl"})
_MAX_NATIVE_BYTES = 4 * 1024 * 1024
_SKIP_DIRS = frozenset({".git", ".hg", ".svn", "node_modules", "__pycache__"})

_EXT_MACROS: tuple[tuple[Mechanism, re.Pattern], ...] = (
    (Mechanism.PYBIND11, re.compile(r"\bPYBIND11_MODULE\s*\(\s*([A-Za-z_]\w*)")),
    (Mechanism.BOOST_PYTHON, re.compile(r"\bBOOST_PYTHON_MODULE\s*\(\s*([A-Za-z_]\w*)")),
    (
        Mechanism.PYTHON_C_API,
        re.compile(r"(?:PyMODINIT_FUNC|PyObject\s*\*)\s*(?:\n\s*)?PyInit_([A-Za-z_]\w*)\s*\("),
    ),
    (Mechanism.PYTHON_C_API, re.compile(r"PyMODINIT_FUNC\s*(?:\n\s*)?init([A-Za-z_]\w*)\s*\(")),
)
_SWIG_MODULE = re.compile(r'^\s*%module\s*(?:\([^)]*\))?\s*"?([A-Za-z_]\w*)', re.M)


@dataclass(frozen=True)
class Evidence:
    file: str
    line: int
    text: str

    def to_dict(self) -> dict:
        return {"file": self.file, "line": self.line, "text": self.text}


@dataclass(frozen=True)
class IndexEntry:
    """One indexed identifier.

    ``kind`` says what the key names: ``class`` (JNI class with native
    methods), ``interface`` (JNA library interface), ``value`` (JNA handle held
    in a field, keyed ``Owner.field``), ``type`` (Jython type) or ``module``
    (Python extension module).
    """

    key: str
    mechanism: Mechanism
    kind: str
    evidence: tuple[Evidence, ...]
    members: frozenset[str] = frozenset()

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "mechanism": self.mechanism.value,
            "kind": self.kind,
            "members": sorted(self.members),
            "evidence": [e.to_dict() for e in self.evidence],
        }


@dataclass(frozen=True)
class NativeBindingIndex:
    entries: Mapping[tuple[str, str], IndexEntry] = field(default_factory=dict)
    patterns: PatternConfig = field(default_factory=PatternConfig)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[IndexEntry]:
        return iter(self.entries[k] for k in sorted(self.entries))

    def get(self, kind: str, key: str) -> Optional[IndexEntry]:
        return self.entries.get((kind, key))

    def of_kind(self, kind: str) -> list[IndexEntry]:
        return [e for (k, _), e in sorted(self.entries.items()) if k == kind]

    def module(self, name: str) -> Optional[IndexEntry]:
        return self.entries.get(("module", name))

    def jni_classes_declaring(self, method: str) -> list[IndexEntry]:
        return [e for e in self.of_kind("class") if method in e.members]

    def merged(self, other: "NativeBindingIndex") -> "NativeBindingIndex":
        """Union of two indexes; evidence accumulates on shared keys."""
        combined = dict(self.entries)
        for key, entry in other.entries.items():
            if key in combined:
                combined[key] = _merge_entries(combined[key], entry)
            else:
                combined[key] = entry
        return NativeBindingIndex(combined, self.patterns)

    def to_dict(self) -> list[dict]:
        return [e.to_dict() for e in self]


def _merge_entries(a: IndexEntry, b: IndexEntry) -> IndexEntry:
    mech = a.mechanism
    if a.kind == "module" and EXTENSION_PRECEDENCE.index(b.mechanism) < EXTENSION_PRECEDENCE.index(a.mechanism):
        mech = b.mechanism
    evidence = tuple(sorted(set(a.evidence) | set(b.evidence), key=lambda e: (e.file, e.line, e.text)))
    return IndexEntry(a.key, mech, a.kind, evidence, a.members | b.members)


class _Collector:
    def __init__(self) -> None:
        self.entries: dict[tuple[str, str], IndexEntry] = {}

    def add(self, kind: str, key: str, mechanism: Mechanism, evidence: Evidence, members: Iterable[str] = ()) -> None:
        entry = IndexEntry(key, mechanism, kind, (evidence,), frozenset(members))
        existing = self.entries.get((kind, key))
        self.entries[(kind, key)] = _merge_entries(existing, entry) if existing else entry


def _line_text(unit: SourceUnit, line: int) -> str:
    lines = unit.lines()
    return lines[line - 1].strip() if 0 < line <= len(lines) else ""


def _matches_call(dotted: str, pattern: str) -> bool:
    return dotted == pattern or dotted.endswith("." + pattern)


def _index_java(unit: SourceUnit, patterns: PatternConfig, project_loads: bool, out: _Collector) -> None:
    jna = patterns[Mechanism.JNA]
    jython = patterns[Mechanism.JYTHON]

    if project_loads:
        for owner, methods in unit.native_methods().items():
            decl = next(f for f in unit.functions if f.is_native_decl and f.owner == owner)
            out.add("class", owner, Mechanism.JNI, Evidence(unit.path, decl.start_line, _line_text(unit, decl.start_line)),
                    members=methods)

    jna_bases = set(jna.bases)
    for t in unit.types:
        if t.kind == "interface" and any(b in jna_bases or b.split(".")[-1] in jna_bases for b in t.bases):
            out.add("interface", t.name, Mechanism.JNA, Evidence(unit.path, t.line, _line_text(unit, t.line)))

    for stmt in unit.statements:
        for call in stmt.calls:
            if any(_matches_call(call.dotted, p) for p in jna.loaders):
                owner = _enclosing_type(unit, stmt.line)
                for var in stmt.defined_vars:
                    decl = next((d for d in unit.var_decls if d.name == var and d.line == stmt.line), None)
                    if decl is not None and decl.is_field and owner:
                        out.add("value", f"{owner}.{var}", Mechanism.JNA,
                                Evidence(unit.path, stmt.line, _line_text(unit, stmt.line)))

    for imp in unit.imports:
        name = imp.module_or_type
        if any(name == p or name.startswith(p + ".") for p in jython.imports):
            ev = Evidence(unit.path, imp.line, _line_text(unit, imp.line))
            simple = name.split(".")[-1]
            if simple == "*":
                for default in jython.bases:
                    out.add("type", default, Mechanism.JYTHON, ev)
            else:
                out.add("type", simple, Mechanism.JYTHON, ev)
    for decl in unit.var_decls:
        if any(decl.type_name.startswith(p + ".") for p in jython.imports):
            out.add("type", declared_class(decl.type_name), Mechanism.JYTHON, Evidence(unit.path, decl.line, _line_text(unit, decl.line)))


def _close_jna_interfaces(units: list[SourceUnit], out: _Collector) -> None:
    """Interfaces extending an indexed JNA interface are JNA interfaces too."""
    changed = True
    while changed:
        changed = False
        known = {k for (kind, k) in out.entries if kind == "interface"}
        for unit in units:
            if unit.language is not Language.JAVA:
                continue
            for t in unit.types:
                if t.kind == "interface" and t.name not in known and any(b.split(".")[-1] in known for b in t.bases):
                    out.add("interface", t.name, Mechanism.JNA, Evidence(unit.path, t.line, _line_text(unit, t.line)))
                    changed = True


def _enclosing_type(unit: SourceUnit, line: int) -> Optional[str]:
    best = None
    for t in unit.types:
        if t.line <= line <= t.end_line and (best is None or best.line <= t.line):
            best = t
    return best.name if best else None


def _has_jni_load(unit: SourceUnit, patterns: PatternConfig) -> bool:
    loaders = patterns[Mechanism.JNI].loaders
    return any(_matches_call(c.dotted, p) for s in unit.statements for c in s.calls for p in loaders)


def scan_native_text(path: str, text: str) -> list[tuple[Mechanism, str, Evidence]]:
    """Extension-module declarations found in one C/C++ or SWIG interface file."""
    found = []
    lines = text.splitlines()

    def ev(pos: int) -> Evidence:
        line = text.count("\n", 0, pos) + 1
        return Evidence(path, line, lines[line - 1].strip() if line <= len(lines) else "")

    for mech, pattern in _EXT_MACROS:
        for m in pattern.finditer(text):
            found.append((mech, m.group(1), ev(m.start(1))))
    if path.endswith((".i", ".swg")):
        for m in _SWIG_MODULE.finditer(text):
            found.append((Mechanism.SWIG, m.group(1), ev(m.start(1))))
            found.append((Mechanism.SWIG, "_" + m.group(1), ev(m.start(1))))
    return found


def iter_native_files(root: Union[str, Path]) -> Iterator[Path]:
    root = Path(root)
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in _SKIP_DIRS)
        for name in sorted(filenames):
            if Path(name).suffix.lower() in NATIVE_SUFFIXES:
                yield Path(dirpath) / name


def _read_native(path: Path, root: Path) -> tuple[str, str]:
    rel = path.relative_to(root).as_posix()
    try:
        if path.stat().st_size > _MAX_NATIVE_BYTES:
            return rel, ""
        return rel, path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        log.warning("skipping unreadable native file %s: %s", path, exc)
        return rel, ""


def build_binding_index(
    project_root: Union[str, Path, None],
    units: Iterable[SourceUnit],
    patterns: Optional[PatternConfig] = None,
    *,
    native_sources: Optional[Mapping[str, str]] = None,
    jobs: Optional[int] = None,
) -> NativeBindingIndex:
    """Index native bindings declared anywhere in a project.

    Java evidence comes from the parsed units; Python extension-module
    evidence from C/C++/SWIG files under ``project_root`` (or from
    ``native_sources``, a path -> text mapping, when the tree is not on disk).
    """
    patterns = patterns or PatternConfig()
    units = list(units)
    out = _Collector()

    java_units = [u for u in units if u.language is Language.JAVA]
    project_loads = any(_has_jni_load(u, patterns) for u in java_units)
    for unit in java_units:
        _index_java(unit, patterns, project_loads, out)
    _close_jna_interfaces(java_units, out)

    texts: list[tuple[str, str]] = []
    if native_sources is not None:
        texts.extend(sorted(native_sources.items()))
    if project_root is not None and Path(project_root).is_dir():
        root = Path(project_root)
        files = list(iter_native_files(root))
        with ThreadPoolExecutor(max_workers=jobs or min(8, (os.cpu_count() or 1))) as pool:
            texts.extend(pool.map(lambda p: _read_native(p, root), files))
    for rel, text in texts:
        if not text:
            continue
        for mech, name, ev in scan_native_text(rel, text):
            out.add("module", name, mech, ev)

    for mech in EXTENSION_PRECEDENCE:
        for name in patterns[mech].modules:
            out.add("module", name, mech, Evidence("<config>", 0, f"{mech.value} module {name}"))

    return NativeBindingIndex(dict(sorted(out.entries.items())), patterns)


def declared_class(type_name: Optional[str]) -> Optional[str]:
    if not type_name:
        return None
    return clean_type(type_name).rstrip("[]").split(".")[-1] or None
