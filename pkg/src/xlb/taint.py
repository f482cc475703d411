"""Transfer-bounded propagation of cross-language provenance.

A value received from a cross-language call may be handed on through at most
``max_transfers`` variables (three by default). Every line that performs the
call, defines one of those variables, or reads one of them is a
cross-language code line; a definition fed only by a last-hop variable is not.

The scan is forward, intraprocedural and flow-sensitive over straight-line
code. Inside branches and loops updates are weak (taint can only get
shallower), which amounts to a minimum-depth merge at the join.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from .detect import CrossLangSite, Mechanism
from .source import FunctionSpan, SourceUnit, Statement, function_at

log = logging.getLogger(__name__)

MODULE_SPAN_NAME = "<module>"
DEFAULT_MAX_TRANSFERS = 3
_SELF_RECEIVERS = (None, "self", "this", "cls")


class SiteNotInUnit(ValueError):
    """A site passed to :func:`propagate` does not belong to the unit."""


@dataclass(frozen=True)
class TaintMark:
    file: str
    line: int
    depth: int
    origin: CrossLangSite
    var: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "line": self.line,
            "depth": self.depth,
            "var": self.var,
            "origin": {"line": self.origin.line, "mechanism": self.origin.mechanism.value,
                       "callee": self.origin.call.dotted},
        }


@dataclass(frozen=True)
class _Taint:
    depth: int
    origin: CrossLangSite


def _site_key(site: CrossLangSite) -> tuple:
    return site.sort_key()


def _check_sites(unit: SourceUnit, sites: list[CrossLangSite]) -> dict[int, list[CrossLangSite]]:
    """Map statement index -> sites whose call it contains."""
    by_stmt: dict[int, list[CrossLangSite]] = {}
    for site in sites:
        if site.file != unit.path:
            raise SiteNotInUnit(f"site at {site.file}:{site.line} is not in {unit.path}")
        owner = None
        for i, stmt in enumerate(unit.statements):
            if stmt.spans(site.line) and site.call in stmt.calls:
                owner = i
                break
        if owner is None:
            raise SiteNotInUnit(f"no statement of {unit.path} holds the call at line {site.line}")
        by_stmt.setdefault(owner, []).append(site)
    for group in by_stmt.values():
        group.sort(key=_site_key)
    return by_stmt


def _group_by_function(unit: SourceUnit) -> list[list[int]]:
    groups: dict[Optional[tuple[int, int, str]], list[int]] = {}
    for i, stmt in enumerate(unit.statements):
        fn = function_at(unit, stmt.line)
        key = (fn.start_line, fn.end_line, fn.qualified_name) if fn else None
        groups.setdefault(key, []).append(i)
    return [groups[k] for k in sorted(groups, key=lambda k: (-1, 0, "") if k is None else k)]


class _Propagator:
    def __init__(self, unit: SourceUnit, sites: list[CrossLangSite], max_transfers: int) -> None:
        self.unit = unit
        self.max = max_transfers
        self.sites_at = _check_sites(unit, sites)
        self.summaries: dict[str, _Taint] = {}
        self.local_functions = {fn.name for fn in unit.functions if not fn.is_native_decl}

    def call_reads(self, stmt: Statement) -> list[tuple[int, CrossLangSite, str]]:
        reads = []
        for call in stmt.calls:
            if call.receiver in _SELF_RECEIVERS and call.callee in self.summaries:
                t = self.summaries[call.callee]
                reads.append((t.depth, t.origin, call.callee))
        return reads

    def run(self) -> tuple[list[TaintMark], dict[str, _Taint]]:
        marks: dict[tuple[int, int], TaintMark] = {}
        returns: dict[str, _Taint] = {}
        for group in _group_by_function(self.unit):
            state: dict[str, _Taint] = {}
            for i in group:
                stmt = self.unit.statements[i]
                here = self.sites_at.get(i, [])
                for site in here:
                    self._mark(marks, site.line, 0, site, None)
                reads = [(state[v].depth, state[v].origin, v) for v in sorted(stmt.used_vars) if v in state]
                reads += self.call_reads(stmt)
                reads.sort(key=lambda r: (r[0], _site_key(r[1]), r[2]))

                if stmt.defined_vars:
                    candidates = []
                    if here:
                        candidates.append((1, here[0], sorted(stmt.defined_vars)[0]))
                    candidates += [(d + 1, o, v) for d, o, v in reads if d < self.max]
                    candidates.sort(key=lambda c: (c[0], _site_key(c[1])))
                    if candidates:
                        depth, origin, _ = candidates[0]
                        for var in stmt.defined_vars:
                            old = state.get(var)
                            if stmt.block_depth == 0 or old is None or old.depth > depth:
                                state[var] = _Taint(depth, origin)
                        self._mark(marks, stmt.line, depth, origin, sorted(stmt.defined_vars)[0])
                    elif stmt.block_depth == 0:
                        for var in stmt.defined_vars:
                            state.pop(var, None)
                elif reads:
                    depth, origin, var = reads[0]
                    self._mark(marks, stmt.line, depth, origin, var)

                if stmt.is_return:
                    value: Optional[_Taint] = None
                    if here:
                        value = _Taint(1, here[0])
                    elif reads:
                        value = _Taint(reads[0][0], reads[0][1])
                    fn = function_at(self.unit, stmt.line)
                    if value is not None and fn is not None:
                        prev = returns.get(fn.name)
                        if prev is None or value.depth < prev.depth:
                            returns[fn.name] = value
        ordered = sorted(marks.values(), key=lambda m: (m.line, m.depth, _site_key(m.origin)))
        return ordered, returns

    def _mark(self, marks: dict, line: int, depth: int, origin: CrossLangSite, var: Optional[str]) -> None:
        key = (line, depth)
        if key not in marks:
            marks[key] = TaintMark(self.unit.path, line, depth, origin, var)


def propagate(
    unit: SourceUnit,
    sites: Iterable[CrossLangSite],
    max_transfers: int = DEFAULT_MAX_TRANSFERS,
) -> list[TaintMark]:
    """Mark the cross-language code lines of ``unit`` seeded by ``sites``."""
    if max_transfers < 1:
        raise ValueError("max_transfers must be >= 1")
    sites = list(sites)
    if not sites:
        return []
    prop = _Propagator(unit, sites, max_transfers)
    marks, returns = prop.run()
    # Functions returning tainted values act like tainted variables at their
    # call sites; iterate until the summaries stop improving.
    for _ in range(len(prop.local_functions) + 1):
        summaries = {name: t for name, t in returns.items() if name in prop.local_functions}
        if summaries == prop.summaries:
            break
        prop.summaries = summaries
        marks, returns = prop.run()
    return marks


def _module_span(unit: SourceUnit) -> FunctionSpan:
    return FunctionSpan(
        name=MODULE_SPAN_NAME,
        qualified_name=MODULE_SPAN_NAME,
        start_line=1,
        end_line=max(unit.line_count, 1),
        body_text=unit.source,
    )


def cross_language_functions(unit: SourceUnit, marks: Iterable[TaintMark]) -> list[FunctionSpan]:
    """Innermost functions holding at least one mark, ordered by start line.

    Marks outside every function fall under a synthetic ``<module>`` span.
    """
    found: dict[str, FunctionSpan] = {}
    for mark in marks:
        fn = function_at(unit, mark.line) or _module_span(unit)
        found.setdefault(fn.qualified_name, fn)
    return sorted(found.values(), key=lambda f: (f.start_line, f.qualified_name))


def function_mechanisms(unit: SourceUnit, marks: Iterable[TaintMark]) -> dict[str, frozenset[Mechanism]]:
    """qualified name -> mechanisms of the sites whose marks land in it."""
    out: dict[str, set[Mechanism]] = {}
    for mark in marks:
        fn = function_at(unit, mark.line)
        name = fn.qualified_name if fn else MODULE_SPAN_NAME
        out.setdefault(name, set()).add(mark.origin.mechanism)
    return {k: frozenset(v) for k, v in out.items()}


__all__ = [
    "DEFAULT_MAX_TRANSFERS",
    "MODULE_SPAN_NAME",
    "SiteNotInUnit",
    "TaintMark",
    "cross_language_functions",
    "function_mechanisms",
    "propagate",
]
