"""Python front end built on the stdlib ``ast`` module.

Files that do not parse degrade to a line-based reading so mined historical
code is never dropped.
"""

from __future__ import annotations

import ast
import dataclasses
import keyword
import logging
import re
from typing import Iterable, Optional

from .model import (
    CallExpr,
    FunctionSpan,
    ImportDecl,
    Language,
    SourceUnit,
    Statement,
    StatementKind,
    TypeDecl,
    dedupe_qualified_names,
    slice_lines,
    split_lines,
)

log = logging.getLogger(__name__)

# Callees that bind a native library handle; a statement calling one is a load_decl.
PY_LOAD_CALLEES = frozenset({"CDLL", "WinDLL", "OleDLL", "PyDLL", "LoadLibrary", "dlopen"})

_CONTROL = (ast.If, ast.For, ast.AsyncFor, ast.While, ast.Try, ast.With, ast.AsyncWith)
if hasattr(ast, "TryStar"):
    _CONTROL = _CONTROL + (ast.TryStar,)
if hasattr(ast, "Match"):
    _CONTROL = _CONTROL + (ast.Match,)


def chain_of(node: ast.AST) -> Optional[str]:
    """Dotted text for a Name/Attribute chain, ``None`` for anything else."""
    parts = []
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if isinstance(node, ast.Name):
        parts.append(node.id)
        return ".".join(reversed(parts))
    return None


def _receiver_text(node: ast.AST) -> str:
    chain = chain_of(node)
    if chain is not None:
        return chain
    if isinstance(node, ast.Attribute):
        inner = _receiver_text(node.value)
        return f"{inner}.{node.attr}"
    if isinstance(node, ast.Call):
        return f"{_receiver_text(node.func)}()"
    if isinstance(node, ast.Subscript):
        return f"{_receiver_text(node.value)}[]"
    return "<expr>"


class _ExprScan(ast.NodeVisitor):
    """Collects loaded names, walrus targets and calls of one expression tree."""

    def __init__(self) -> None:
        self.used: set[str] = set()
        self.walrus: set[str] = set()
        self.calls: list[CallExpr] = []
        self._bound: list[set[str]] = []

    def _is_bound(self, name: str) -> bool:
        return any(name in scope for scope in self._bound)

    def visit_Name(self, node: ast.Name) -> None:
        if isinstance(node.ctx, ast.Load) and not self._is_bound(node.id):
            self.used.add(node.id)

    def visit_NamedExpr(self, node: ast.NamedExpr) -> None:
        if isinstance(node.target, ast.Name):
            self.walrus.add(node.target.id)
        self.visit(node.value)

    def visit_Lambda(self, node: ast.Lambda) -> None:
        for default in node.args.defaults + [d for d in node.args.kw_defaults if d]:
            self.visit(default)
        params = {a.arg for a in node.args.args + node.args.kwonlyargs + node.args.posonlyargs}
        if node.args.vararg:
            params.add(node.args.vararg.arg)
        if node.args.kwarg:
            params.add(node.args.kwarg.arg)
        self._bound.append(params)
        self.visit(node.body)
        self._bound.pop()

    def _comprehension(self, node, elts: list[ast.AST]) -> None:
        bound: set[str] = set()
        self._bound.append(bound)
        for gen in node.generators:
            self.visit(gen.iter)
            bound.update(_target_names(gen.target))
            for cond in gen.ifs:
                self.visit(cond)
        for elt in elts:
            self.visit(elt)
        self._bound.pop()

    def visit_ListComp(self, node: ast.ListComp) -> None:
        self._comprehension(node, [node.elt])

    visit_SetComp = visit_ListComp
    visit_GeneratorExp = visit_ListComp

    def visit_DictComp(self, node: ast.DictComp) -> None:
        self._comprehension(node, [node.key, node.value])

    def visit_Call(self, node: ast.Call) -> None:
        func = node.func
        callee = None
        receiver = None
        line = node.lineno
        if isinstance(func, ast.Name):
            callee = func.id
        elif isinstance(func, ast.Attribute):
            callee = func.attr
            receiver = _receiver_text(func.value)
            line = func.end_lineno or node.lineno
        if callee:
            arg_scan = _ExprScan()
            arg_scan._bound = list(self._bound)
            for arg in node.args:
                arg_scan.visit(arg)
            for kw in node.keywords:
                arg_scan.visit(kw.value)
            self.calls.append(
                CallExpr(callee=callee, line=line, receiver=receiver, arg_vars=frozenset(arg_scan.used))
            )
        self.generic_visit(node)


def _scan(nodes: Iterable[Optional[ast.AST]]) -> _ExprScan:
    scan = _ExprScan()
    for node in nodes:
        if node is not None:
            scan.visit(node)
    return scan


def _target_names(target: ast.AST) -> set[str]:
    if isinstance(target, ast.Name):
        return {target.id}
    if isinstance(target, (ast.Tuple, ast.List)):
        out: set[str] = set()
        for elt in target.elts:
            out |= _target_names(elt)
        return out
    if isinstance(target, ast.Starred):
        return _target_names(target.value)
    return set()


def _target_side(targets: list[ast.AST]) -> tuple[set[str], set[str], list[ast.AST]]:
    """Split assignment targets into (names, dotted chains, sub-expressions read)."""
    names: set[str] = set()
    chains: set[str] = set()
    reads: list[ast.AST] = []
    stack = list(targets)
    while stack:
        t = stack.pop()
        if isinstance(t, ast.Name):
            names.add(t.id)
        elif isinstance(t, (ast.Tuple, ast.List)):
            stack.extend(t.elts)
        elif isinstance(t, ast.Starred):
            stack.append(t.value)
        elif isinstance(t, ast.Attribute):
            chain = chain_of(t)
            if chain:
                chains.add(chain)
            reads.append(t.value)
        elif isinstance(t, ast.Subscript):
            reads.extend([t.value, t.slice])
    return names, chains, reads


class _Builder:
    def __init__(self, path: str, source: str) -> None:
        self.path = path
        self.source = source
        self.functions: list[tuple[str, str, int, int, Optional[str]]] = []
        self.statements: list[Statement] = []
        self.imports: list[ImportDecl] = []
        self.types: list[TypeDecl] = []

    def stmt(
        self,
        node: ast.AST,
        depth: int,
        *,
        line: Optional[int] = None,
        col: Optional[int] = None,
        end_line: Optional[int] = None,
        exprs: Iterable[Optional[ast.AST]] = (),
        defined: Iterable[str] = (),
        chains: Iterable[str] = (),
        value_chain: Optional[str] = None,
        is_return: bool = False,
        kind: Optional[StatementKind] = None,
        extra_used: Iterable[str] = (),
    ) -> None:
        scan = _scan(exprs)
        defined_set = frozenset(set(defined) | scan.walrus)
        calls = tuple(scan.calls)
        if kind is None:
            if any(c.callee in PY_LOAD_CALLEES for c in calls):
                kind = StatementKind.LOAD_DECL
            elif defined_set:
                kind = StatementKind.ASSIGNMENT
            else:
                kind = StatementKind.EXPRESSION
        elif kind is StatementKind.ASSIGNMENT and not defined_set:
            kind = StatementKind.EXPRESSION
        start = line if line is not None else node.lineno
        self.statements.append(
            Statement(
                line=start,
                col=col if col is not None else node.col_offset,
                end_line=max(start, end_line if end_line is not None else (node.end_lineno or start)),
                kind=kind,
                defined_vars=defined_set,
                used_vars=frozenset(scan.used | set(extra_used)),
                calls=calls,
                block_depth=depth,
                is_return=is_return,
                target_chains=frozenset(chains),
                value_chain=value_chain,
            )
        )

    def body(self, nodes: list[ast.stmt], depth: int, scope: list[str], owner: Optional[str]) -> None:
        for node in nodes:
            self.visit(node, depth, scope, owner)

    @staticmethod
    def _header_end(node: ast.AST) -> int:
        body = getattr(node, "body", None)
        if body:
            return max(node.lineno, body[0].lineno - 1)
        return node.lineno

    def visit(self, node: ast.stmt, depth: int, scope: list[str], owner: Optional[str]) -> None:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            start = node.lineno
            col = node.col_offset
            if node.decorator_list:
                first = min(node.decorator_list, key=lambda d: (d.lineno, d.col_offset))
                if first.lineno < start:
                    start, col = first.lineno, max(first.col_offset - 1, 0)
            args = node.args
            exprs = list(node.decorator_list) + list(args.defaults) + [d for d in args.kw_defaults if d]
            self.stmt(node, depth, line=start, col=col, end_line=self._header_end(node), exprs=exprs,
                      kind=StatementKind.OTHER)
            qual = ".".join(scope + [node.name])
            self.functions.append((node.name, qual, start, node.end_lineno or node.lineno, owner))
            self.body(node.body, 0, scope + [node.name], None)
        elif isinstance(node, ast.ClassDef):
            start = node.lineno
            col = node.col_offset
            if node.decorator_list:
                first = min(node.decorator_list, key=lambda d: (d.lineno, d.col_offset))
                if first.lineno < start:
                    start, col = first.lineno, max(first.col_offset - 1, 0)
            bases = tuple(filter(None, (chain_of(b) for b in node.bases)))
            qual = ".".join(scope + [node.name])
            self.types.append(TypeDecl(node.name, qual, "class", bases, start, node.end_lineno or start))
            self.stmt(node, depth, line=start, col=col, end_line=self._header_end(node),
                      exprs=list(node.decorator_list) + node.bases + [k.value for k in node.keywords],
                      kind=StatementKind.OTHER)
            self.body(node.body, depth, scope + [node.name], node.name)
        elif isinstance(node, (ast.Assign, ast.AnnAssign, ast.AugAssign)):
            targets = node.targets if isinstance(node, ast.Assign) else [node.target]
            names, chains, reads = _target_side(targets)
            value = node.value
            if isinstance(node, ast.AnnAssign) and value is None:
                self.stmt(node, depth, exprs=reads, kind=StatementKind.OTHER)
                return
            extra = set()
            if isinstance(node, ast.AugAssign):
                extra = set(names)
                if isinstance(node.target, ast.Attribute):
                    reads.append(node.target)
            self.stmt(node, depth, exprs=reads + [value], defined=names, chains=chains,
                      value_chain=chain_of(value) if value is not None else None, extra_used=extra)
        elif isinstance(node, (ast.For, ast.AsyncFor)):
            names, chains, reads = _target_side([node.target])
            self.stmt(node, depth, end_line=self._header_end(node), exprs=reads + [node.iter],
                      defined=names, chains=chains)
            self.body(node.body, depth + 1, scope, owner)
            self.body(node.orelse, depth + 1, scope, owner)
        elif isinstance(node, (ast.If, ast.While)):
            self.stmt(node, depth, end_line=self._header_end(node), exprs=[node.test])
            self.body(node.body, depth + 1, scope, owner)
            self.body(node.orelse, depth + 1, scope, owner)
        elif isinstance(node, (ast.With, ast.AsyncWith)):
            defined: set[str] = set()
            chains: set[str] = set()
            exprs: list[ast.AST] = []
            for item in node.items:
                exprs.append(item.context_expr)
                if item.optional_vars is not None:
                    n, c, r = _target_side([item.optional_vars])
                    defined |= n
                    chains |= c
                    exprs.extend(r)
            self.stmt(node, depth, end_line=self._header_end(node), exprs=exprs, defined=defined, chains=chains)
            self.body(node.body, depth, scope, owner)
        elif isinstance(node, _CONTROL):  # Try / TryStar / Match
            if hasattr(node, "subject"):
                self.stmt(node, depth, end_line=node.subject.end_lineno, exprs=[node.subject])
                for case in node.cases:
                    self.body(case.body, depth + 1, scope, owner)
                return
            self.stmt(node, depth, end_line=node.lineno, kind=StatementKind.OTHER)
            self.body(node.body, depth + 1, scope, owner)
            for handler in node.handlers:
                self.stmt(handler, depth, end_line=self._header_end(handler), exprs=[handler.type],
                          defined=[handler.name] if handler.name else [])
                self.body(handler.body, depth + 1, scope, owner)
            self.body(node.orelse, depth + 1, scope, owner)
            self.body(node.finalbody, depth + 1, scope, owner)
        elif isinstance(node, ast.Return):
            self.stmt(node, depth, exprs=[node.value], is_return=True, kind=StatementKind.EXPRESSION)
        elif isinstance(node, ast.Expr):
            self.stmt(node, depth, exprs=[node.value])
        elif isinstance(node, ast.Delete):
            names, _, reads = _target_side(node.targets)
            self.stmt(node, depth, exprs=reads, defined=names)
        elif isinstance(node, ast.Import):
            for alias in node.names:
                self.imports.append(ImportDecl(alias.name, node.lineno, alias.asname))
            self.stmt(node, depth, kind=StatementKind.OTHER)
        elif isinstance(node, ast.ImportFrom):
            base = "." * node.level + (node.module or "")
            for alias in node.names:
                full = f"{base}.{alias.name}" if base and not base.endswith(".") else f"{base}{alias.name}"
                self.imports.append(ImportDecl(full, node.lineno, alias.asname, names=(alias.name,)))
            self.stmt(node, depth, kind=StatementKind.OTHER)
        elif isinstance(node, (ast.Raise, ast.Assert)):
            exprs = [getattr(node, f, None) for f in ("exc", "cause", "test", "msg")]
            self.stmt(node, depth, exprs=exprs, kind=StatementKind.EXPRESSION)
        else:
            self.stmt(node, depth, kind=StatementKind.OTHER)

    def build(self, degraded: bool = False) -> SourceUnit:
        quals = dedupe_qualified_names([f[1] for f in self.functions])
        spans = tuple(
            sorted(
                (
                    FunctionSpan(
                        name=name,
                        qualified_name=qual,
                        start_line=start,
                        end_line=end,
                        body_text=slice_lines(self.source, start, end),
                        owner=owner,
                    )
                    for (name, _, start, end, owner), qual in zip(self.functions, quals)
                ),
                key=lambda f: (f.start_line, -f.end_line),
            )
        )
        statements = _order_statements(self.statements)
        return SourceUnit(
            path=self.path,
            language=Language.PYTHON,
            source=self.source,
            functions=spans,
            statements=statements,
            imports=tuple(self.imports),
            types=tuple(self.types),
            degraded=degraded,
        )


def _order_statements(statements: list[Statement]) -> tuple[Statement, ...]:
    ordered = sorted(statements, key=lambda s: (s.line, s.col))
    out: list[Statement] = []
    for s in ordered:
        if out and (out[-1].line, out[-1].col) >= (s.line, s.col):
            # ties only arise from malformed positions; nudge to keep order strict
            s = dataclasses.replace(s, col=out[-1].col + 1)
        out.append(s)
    return tuple(out)


def parse_python(path: str, source: str) -> SourceUnit:
    try:
        tree = ast.parse(source, filename=path)
    except (SyntaxError, ValueError) as exc:
        log.warning("%s: python parse failed (%s); using line heuristics", path, exc)
        return parse_python_lines(path, source)
    builder = _Builder(path, source)
    builder.body(tree.body, 0, [], None)
    return builder.build()


# --- degraded mode -----------------------------------------------------------

_STRING_RE = re.compile(r"""(?:[rbuf]{0,2})("{3}|'{3}|"|')(?:\\.|(?!\1).)*?\1""", re.S | re.I)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_DEF_RE = re.compile(r"^(\s*)(?:async\s+)?def\s+([A-Za-z_]\w*)")
_CLASS_RE = re.compile(r"^(\s*)class\s+([A-Za-z_]\w*)")
_ASSIGN_RE = re.compile(
    r"^\s*([A-Za-z_]\w*(?:\s*,\s*[A-Za-z_]\w*)*)\s*(?:[-+*/%&|^@]|//|\*\*|>>|<<)?=(?!=)"
)
_CALL_RE = re.compile(r"((?:[A-Za-z_]\w*\.)*)([A-Za-z_]\w*)\s*\(")
_IMPORT_RE = re.compile(r"^\s*import\s+([\w.]+)(?:\s+as\s+(\w+))?")
_FROM_RE = re.compile(r"^\s*from\s+([\w.]+)\s+import\s+(.+)")
_KEYWORDS = frozenset(keyword.kwlist) | {"self", "print", "True", "False", "None"}


_ATTR_RE = re.compile(r"\.\s*[A-Za-z_]\w*")


def _idents(text: str) -> set[str]:
    text = _ATTR_RE.sub("", text)
    return {m.group(0) for m in _IDENT_RE.finditer(text)} - _KEYWORDS


def parse_python_lines(path: str, source: str) -> SourceUnit:
    """Line-level reading of a Python file that ``ast`` rejected."""
    lines = split_lines(source)
    builder = _Builder(path, source)
    blocks: list[tuple[int, str, str]] = []  # (indent, kind, name)
    open_defs: list[tuple[int, str, int, Optional[str], str]] = []  # indent, name, start, owner, qual
    body_indent: dict[int, Optional[int]] = {}

    def indent_of(text: str) -> int:
        return len(text) - len(text.lstrip(" \t"))

    def close_until(indent: int, lineno: int) -> None:
        while blocks and blocks[-1][0] >= indent:
            ind, kind, name = blocks.pop()
            if kind == "def":
                d_ind, d_name, d_start, d_owner, d_qual = open_defs.pop()
                body_indent.pop(d_ind, None)
                end = _last_code_line(lines, d_start, lineno - 1)
                builder.functions.append((d_name, d_qual, d_start, end, d_owner))

    for i, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        ind = indent_of(raw)
        close_until(ind, i)
        code = _STRING_RE.sub('""', stripped.split(" #")[0])
        scope = [b[2] for b in blocks]
        m_def = _DEF_RE.match(raw)
        m_cls = _CLASS_RE.match(raw)
        if m_def:
            start = i
            j = i - 1
            while j >= 1 and lines[j - 1].strip().startswith("@") and indent_of(lines[j - 1]) == ind:
                start = j
                j -= 1
            owner = blocks[-1][2] if blocks and blocks[-1][1] == "class" else None
            qual = ".".join(scope + [m_def.group(2)])
            blocks.append((ind, "def", m_def.group(2)))
            open_defs.append((ind, m_def.group(2), start, owner, qual))
            kind = StatementKind.OTHER
            defined: set[str] = set()
        elif m_cls:
            blocks.append((ind, "class", m_cls.group(2)))
            kind = StatementKind.OTHER
            defined = set()
        else:
            m_as = _ASSIGN_RE.match(code)
            defined = {n.strip() for n in m_as.group(1).split(",")} if m_as else set()
            kind = StatementKind.ASSIGNMENT if defined else StatementKind.OTHER
        rhs = code[_ASSIGN_RE.match(code).end():] if defined and _ASSIGN_RE.match(code) else code
        calls = tuple(
            CallExpr(callee=m.group(2), line=i, receiver=m.group(1).rstrip(".") or None)
            for m in _CALL_RE.finditer(code)
            if m.group(2) not in _KEYWORDS
        )
        m_imp, m_from = _IMPORT_RE.match(raw), _FROM_RE.match(raw)
        if m_imp:
            builder.imports.append(ImportDecl(m_imp.group(1), i, m_imp.group(2)))
        elif m_from:
            for part in m_from.group(2).strip("() ").split(","):
                bits = part.split(" as ")
                name = bits[0].strip()
                if name:
                    alias = bits[1].strip() if len(bits) > 1 else None
                    builder.imports.append(ImportDecl(f"{m_from.group(1)}.{name}", i, alias, names=(name,)))
        if kind is StatementKind.OTHER and calls and any(c.callee in PY_LOAD_CALLEES for c in calls):
            kind = StatementKind.LOAD_DECL
        depth = 0
        if open_defs and not m_def:
            d_ind = open_defs[-1][0]
            if body_indent.get(d_ind) is None:
                body_indent[d_ind] = ind
            depth = 1 if ind > body_indent[d_ind] else 0
        builder.statements.append(
            Statement(
                line=i,
                col=ind,
                end_line=i,
                kind=kind,
                defined_vars=frozenset(defined),
                used_vars=frozenset(_idents(rhs) - {c.callee for c in calls if not c.receiver}),
                calls=calls,
                block_depth=depth,
                is_return=stripped.startswith("return"),
            )
        )
    close_until(-1, len(lines) + 1)
    return builder.build(degraded=True)


def _last_code_line(lines: list[str], start: int, stop: int) -> int:
    end = stop
    while end > start and not lines[end - 1].strip():
        end -= 1
    return max(start, end)
