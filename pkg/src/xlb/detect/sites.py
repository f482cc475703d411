"""Per-unit detection of cross-language call and load sites."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from ..source import CallExpr, Language, SourceUnit, Statement
from .index import NativeBindingIndex, declared_class
from .mechanisms import Mechanism

CALL = "call"
LOAD_DECL = "load_decl"


@dataclass(frozen=True)
class CrossLangSite:
    mechanism: Mechanism
    file: str
    line: int
    call: CallExpr
    evidence_kind: str = CALL
    handle_var: Optional[str] = None
    evidence: str = ""

    @property
    def language_pair(self):
        return self.mechanism.language_pair

    def sort_key(self) -> tuple:
        return (self.file, self.line, self.call.dotted, self.evidence_kind, self.mechanism.value)

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism.value,
            "language_pair": self.mechanism.language_pair.value,
            "file": self.file,
            "line": self.line,
            "kind": self.evidence_kind,
            "call": self.call.to_dict(),
            "handle_var": self.handle_var,
            "evidence": self.evidence,
        }


def _matches(dotted: str, pattern: str) -> bool:
    return dotted == pattern or dotted.endswith("." + pattern)


def _prefixes(chain: str) -> list[str]:
    """``a.b.c`` -> ``['a', 'a.b', 'a.b.c']``."""
    parts = chain.split(".")
    return [".".join(parts[: i + 1]) for i in range(len(parts))]


class _Detector:
    def __init__(self, unit: SourceUnit, index: NativeBindingIndex) -> None:
        self.unit = unit
        self.index = index
        self.patterns = index.patterns
        self.lines = unit.lines()
        self.sites: dict[tuple, CrossLangSite] = {}

    def text(self, line: int) -> str:
        return self.lines[line - 1].strip() if 0 < line <= len(self.lines) else ""

    def emit(self, mech: Mechanism, call: CallExpr, reason: str, *, kind: str = CALL,
             handle: Optional[str] = None) -> None:
        key = (call.line, call.dotted, call.arg_vars)
        if key in self.sites:
            return
        self.sites[key] = CrossLangSite(
            mechanism=mech,
            file=self.unit.path,
            line=call.line,
            call=call,
            evidence_kind=kind,
            handle_var=handle,
            evidence=f"{reason}: {self.text(call.line)}",
        )

    def imports_any(self, prefixes: Iterable[str]) -> bool:
        prefixes = tuple(prefixes)
        return any(
            imp.module_or_type == p or imp.module_or_type.startswith(p + ".")
            for imp in self.unit.imports
            for p in prefixes
        )

    # -- python -------------------------------------------------------------

    def python(self) -> None:
        ctypes_pat = self.patterns[Mechanism.CTYPES]
        cffi_pat = self.patterns[Mechanism.CFFI]
        uses_ctypes = self.imports_any(ctypes_pat.imports)
        uses_cffi = self.imports_any(cffi_pat.imports)

        def ctypes_loader(call: CallExpr) -> bool:
            if not any(_matches(call.dotted, p) for p in ctypes_pat.loaders):
                return False
            return uses_ctypes or "ctypes" in call.dotted

        def ctypes_attr_lib(chain: Optional[str]) -> bool:
            # ctypes.cdll.<lib> / cdll.<lib>
            if not chain or not uses_ctypes:
                return False
            parts = chain.split(".")
            for i, part in enumerate(parts[:-1]):
                if part in ctypes_pat.modules and (i == 0 or parts[i - 1] == "ctypes"):
                    return parts[i + 1] != "LoadLibrary"
            return False

        handles: dict[str, Mechanism] = {}
        factories: set[str] = set()
        for _ in range(3):
            before = (dict(handles), set(factories))
            for stmt in self.unit.statements:
                targets = set(stmt.defined_vars) | set(stmt.target_chains)
                if not targets:
                    continue
                for call in stmt.calls:
                    if uses_cffi and call.callee in cffi_pat.factories:
                        factories.update(targets)
                    if ctypes_loader(call):
                        for t in targets:
                            handles[t] = Mechanism.CTYPES
                    elif call.callee in cffi_pat.loaders and (call.receiver in factories or uses_cffi):
                        for t in targets:
                            handles[t] = Mechanism.CFFI
                chain = stmt.value_chain
                if chain:
                    if ctypes_attr_lib(chain):
                        for t in targets:
                            handles[t] = Mechanism.CTYPES
                    else:
                        mech = next((handles[p] for p in _prefixes(chain) if p in handles), None)
                        if mech is not None:
                            for t in targets:
                                handles[t] = mech
            if (handles, factories) == before:
                break

        aliases = self.python_import_aliases()
        for stmt in self.unit.statements:
            for call in stmt.calls:
                handle = self.first_defined(stmt)
                if ctypes_loader(call):
                    self.emit(Mechanism.CTYPES, call, "ctypes library load", kind=LOAD_DECL, handle=handle)
                    continue
                if call.callee in cffi_pat.loaders and (call.receiver in factories or (uses_cffi and call.receiver)):
                    self.emit(Mechanism.CFFI, call, "cffi dlopen", kind=LOAD_DECL, handle=handle)
                    continue
                recv = call.receiver
                if recv:
                    hit = next((p for p in _prefixes(recv) if p in handles), None)
                    if hit is not None:
                        self.emit(handles[hit], call, f"call through {handles[hit].value} handle '{hit}'", handle=hit)
                        continue
                    if ctypes_attr_lib(recv):
                        self.emit(Mechanism.CTYPES, call, "call into ctypes attribute-loaded library")
                        continue
                    if recv.endswith("()") and any(_matches(recv[:-2], p) for p in ctypes_pat.loaders) and (
                        uses_ctypes or "ctypes" in recv
                    ):
                        self.emit(Mechanism.CTYPES, call, "call on freshly loaded ctypes library")
                        continue
                elif call.callee in handles:
                    self.emit(handles[call.callee], call, f"call of native function pointer '{call.callee}'",
                              handle=call.callee)
                    continue
                entry = self.resolve_python_module(call, aliases)
                if entry is not None:
                    self.emit(entry.mechanism, call, f"call into {entry.mechanism.value} extension module '{entry.key}'")

    @staticmethod
    def first_defined(stmt: Statement) -> Optional[str]:
        names = sorted(stmt.defined_vars) or sorted(stmt.target_chains)
        return names[0] if names else None

    def python_import_aliases(self) -> dict[str, str]:
        """Local name -> dotted module path bound by the unit's imports."""
        aliases: dict[str, str] = {}
        for imp in self.unit.imports:
            path = imp.module_or_type
            if imp.names:  # from-import
                if imp.names == ("*",):
                    continue
                aliases[imp.alias or imp.names[0]] = path
            elif imp.alias:
                aliases[imp.alias] = path
            else:
                head = path.split(".")[0]
                aliases.setdefault(head, head)
        return aliases

    def resolve_python_module(self, call: CallExpr, aliases: dict[str, str]):
        if call.receiver:
            head, _, rest = call.receiver.partition(".")
            if head not in aliases:
                return None
            full = aliases[head] + ("." + rest if rest else "")
        else:
            if call.callee not in aliases:
                return None
            full = aliases[call.callee]
            # the callee itself is the imported object; its module is the parent path
            full = full.rsplit(".", 1)[0] if "." in full else full
        for part in full.split("."):
            entry = self.index.module(part.lstrip("."))
            if entry is not None:
                return entry
        return None

    # -- java ---------------------------------------------------------------

    def enclosing_type(self, line: int) -> Optional[str]:
        best = None
        for t in self.unit.types:
            if t.line <= line <= t.end_line and (best is None or best.line <= t.line):
                best = t
        return best.name if best else None

    def receiver_class(self, recv: str, line: int) -> tuple[Optional[str], bool]:
        """(class name, known) for a Java receiver expression."""
        if recv in ("this", "super"):
            return self.enclosing_type(line), True
        if recv.startswith("new ") and recv.endswith("()"):
            return declared_class(recv[4:-2]), True
        name = recv[5:] if recv.startswith("this.") else recv
        if "." not in name and "(" not in name:
            declared = self.unit.declared_type(name, line)
            if declared:
                return declared_class(declared), True
            # a capitalised bare receiver is most likely a static call on a class
            if name[:1].isupper():
                return name, True
        return None, False

    def java(self) -> None:
        jni_loaders = self.patterns[Mechanism.JNI].loaders
        jna_pat = self.patterns[Mechanism.JNA]
        jython_pat = self.patterns[Mechanism.JYTHON]

        handles: dict[str, Mechanism] = {}
        for stmt in self.unit.statements:
            for call in stmt.calls:
                if any(_matches(call.dotted, p) for p in jna_pat.loaders):
                    for t in set(stmt.defined_vars) | set(stmt.target_chains):
                        handles[t] = Mechanism.JNA
            if stmt.value_chain and stmt.value_chain in handles:
                for t in stmt.defined_vars:
                    handles[t] = handles[stmt.value_chain]

        for stmt in self.unit.statements:
            for call in stmt.calls:
                if any(_matches(call.dotted, p) for p in jni_loaders):
                    self.emit(Mechanism.JNI, call, "JNI library load", kind=LOAD_DECL)
                    continue
                if any(_matches(call.dotted, p) for p in jna_pat.loaders):
                    self.emit(Mechanism.JNA, call, "JNA library binding", kind=LOAD_DECL,
                              handle=self.first_defined(stmt))
                    continue
                self.java_call(stmt, call, handles, jython_pat.invokers)

    def java_call(self, stmt: Statement, call: CallExpr, handles: dict[str, Mechanism],
                  jython_invokers: tuple[str, ...]) -> None:
        recv = call.receiver
        line = call.line

        # JNA: handles, typed receivers, static INSTANCE fields
        if recv:
            stripped = recv[5:] if recv.startswith("this.") else recv
            for cand in (recv, stripped):
                if cand in handles:
                    self.emit(Mechanism.JNA, call, f"call through JNA handle '{cand}'", handle=cand)
                    return
            if self.index.get("value", stripped) is not None:
                self.emit(Mechanism.JNA, call, f"call through JNA library value '{stripped}'", handle=stripped)
                return
            cls, known = self.receiver_class(recv, line)
            head = stripped.split(".")[0]
            if (cls and self.index.get("interface", cls)) or (
                "." in stripped and self.index.get("interface", head)
            ):
                iface = cls if cls and self.index.get("interface", cls) else head
                self.emit(Mechanism.JNA, call, f"call on JNA interface '{iface}'", handle=stripped)
                return
            # Jython
            if call.callee in jython_invokers and cls and self.index.get("type", cls) is not None:
                self.emit(Mechanism.JYTHON, call, f"Jython '{cls}.{call.callee}'", handle=stripped)
                return
        else:
            cls, known = self.enclosing_type(line), True

        # JNI
        if cls and known:
            entry = self.index.get("class", cls)
            if entry is not None and call.callee in entry.members:
                self.emit(Mechanism.JNI, call, f"native method {cls}.{call.callee}", handle=recv)
            return
        candidates = self.index.jni_classes_declaring(call.callee)
        if candidates:
            owners = ", ".join(e.key for e in candidates)
            self.emit(Mechanism.JNI, call, f"native method {call.callee} declared by {owners}", handle=recv)


def detect_sites(
    unit: SourceUnit,
    index: NativeBindingIndex,
    mechanisms: Optional[Iterable[Mechanism]] = None,
) -> list[CrossLangSite]:
    """All cross-language sites in ``unit``, ordered by (file, line)."""
    detector = _Detector(unit, index)
    if unit.language is Language.PYTHON:
        detector.python()
    else:
        detector.java()
    sites = sorted(detector.sites.values(), key=CrossLangSite.sort_key)
    if mechanisms is not None:
        wanted = set(mechanisms)
        sites = [s for s in sites if s.mechanism in wanted]
    return sites
