"""Whole-project scanning: parse, index, detect, propagate, report."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Union

from .detect import CrossLangSite, Mechanism, NativeBindingIndex, PatternConfig, build_binding_index, detect_sites
from .source import FunctionSpan, Language, SourceUnit, UnreadableSource, read_unit
from .taint import DEFAULT_MAX_TRANSFERS, TaintMark, cross_language_functions, propagate

log = logging.getLogger(__name__)

_SKIP_DIRS = frozenset({".git", ".hg", ".svn", "node_modules", "__pycache__", ".tox", ".venv"})


@dataclass
class FileReport:
    unit: SourceUnit
    sites: list[CrossLangSite]
    marks: list[TaintMark]
    functions: list[FunctionSpan]

    def to_dict(self) -> dict:
        return {
            "file": self.unit.path,
            "language": self.unit.language.value,
            "degraded": self.unit.degraded,
            "sites": [s.to_dict() for s in self.sites],
            "marks": [m.to_dict() for m in self.marks],
            "functions": [
                {"name": f.name, "qualified_name": f.qualified_name,
                 "start_line": f.start_line, "end_line": f.end_line}
                for f in self.functions
            ],
        }


@dataclass
class ScanReport:
    files: list[FileReport] = field(default_factory=list)

    @property
    def site_count(self) -> int:
        return sum(len(f.sites) for f in self.files)

    def sites(self) -> list[CrossLangSite]:
        return [s for f in self.files for s in f.sites]

    def to_dict(self) -> dict:
        by_mech: dict[str, int] = {}
        for site in self.sites():
            by_mech[site.mechanism.value] = by_mech.get(site.mechanism.value, 0) + 1
        return {
            "files": [f.to_dict() for f in self.files],
            "summary": {
                "files": len(self.files),
                "sites": self.site_count,
                "marks": sum(len(f.marks) for f in self.files),
                "functions": sum(len(f.functions) for f in self.files),
                "by_mechanism": dict(sorted(by_mech.items())),
            },
        }


def iter_source_files(root: Union[str, Path]) -> Iterator[Path]:
    """.py and .java files under ``root`` in a stable order."""
    root = Path(root)
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if d not in _SKIP_DIRS)
        for name in sorted(filenames):
            if Language.from_path(name) is not None:
                yield Path(dirpath) / name


def analyze_units(
    units: Sequence[SourceUnit],
    index: NativeBindingIndex,
    *,
    mechanisms: Optional[Iterable[Mechanism]] = None,
    max_transfers: int = DEFAULT_MAX_TRANSFERS,
) -> list[FileReport]:
    wanted = frozenset(mechanisms) if mechanisms is not None else None
    reports = []
    for unit in units:
        sites = detect_sites(unit, index, wanted)
        marks = propagate(unit, sites, max_transfers)
        reports.append(FileReport(unit, sites, marks, cross_language_functions(unit, marks)))
    return reports


def scan_project(
    root: Union[str, Path],
    *,
    patterns: Optional[PatternConfig] = None,
    mechanisms: Optional[Iterable[Mechanism]] = None,
    max_transfers: int = DEFAULT_MAX_TRANSFERS,
    jobs: Optional[int] = None,
) -> ScanReport:
    """Scan a directory (a project) or a single source file.

    A single file is analysed on its own, with native build evidence taken
    from its directory. Raises :class:`UnreadableSource` for a missing path.
    """
    root = Path(root)
    if root.is_file():
        files, base = [root], root.parent
    elif root.is_dir():
        files, base = list(iter_source_files(root)), root
    else:
        raise UnreadableSource(f"{root}: no such file or directory")
    workers = jobs or os.cpu_count() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        units = list(pool.map(lambda p: read_unit(p, base), files))
    for unit in units:
        if unit.degraded:
            log.warning("%s: parsed in degraded mode", unit.path)
    index = build_binding_index(base, units, patterns, jobs=jobs)
    return ScanReport(analyze_units(units, index, mechanisms=mechanisms, max_transfers=max_transfers))
