"""Java front end on top of tree-sitter's error-tolerant Java grammar."""

from __future__ import annotations

import logging
import re
from functools import lru_cache
from typing import Iterable, Optional

import tree_sitter_java
from tree_sitter import Language as TSLanguage
from tree_sitter import Node, Parser

from .model import (
    CallExpr,
    FunctionSpan,
    ImportDecl,
    Language,
    SourceUnit,
    Statement,
    StatementKind,
    TypeDecl,
    VarDecl,
    dedupe_qualified_names,
    slice_lines,
)

log = logging.getLogger(__name__)

JAVA_LOAD_CALLS = frozenset(
    {"System.loadLibrary", "System.load", "Native.load", "Native.loadLibrary", "Runtime.getRuntime().loadLibrary"}
)

_TYPE_DECLS = {
    "class_declaration": "class",
    "interface_declaration": "interface",
    "enum_declaration": "enum",
    "record_declaration": "record",
    "annotation_type_declaration": "interface",
}
_CALLABLE_DECLS = ("method_declaration", "constructor_declaration", "compact_constructor_declaration")
_GENERIC_RE = re.compile(r"<[^<>]*>")


@lru_cache(maxsize=1)
def _language() -> TSLanguage:
    return TSLanguage(tree_sitter_java.language())


def _parser() -> Parser:
    # Parser objects are not thread-safe; the compiled language is.
    return Parser(_language())


def _text(node: Optional[Node]) -> str:
    if node is None or node.text is None:
        return ""
    return node.text.decode("utf-8", errors="replace")


def _line(node: Node) -> int:
    return node.start_point[0] + 1


def _end_line(node: Node) -> int:
    row, col = node.end_point
    # a node ending at column 0 stops on the previous line
    return row if col == 0 and row > node.start_point[0] else row + 1


def clean_type(text: str) -> str:
    prev = None
    while prev != text:
        prev, text = text, _GENERIC_RE.sub("", text)
    return re.sub(r"\s+", "", text)


def _chain(node: Optional[Node]) -> Optional[str]:
    """Dotted text for identifier / field_access / this chains."""
    if node is None:
        return None
    if node.type in ("identifier", "this", "super", "type_identifier"):
        return _text(node)
    if node.type == "field_access":
        obj = _chain(node.child_by_field_name("object"))
        field = node.child_by_field_name("field")
        if obj is not None and field is not None:
            return f"{obj}.{_text(field)}"
    if node.type in ("scoped_identifier", "scoped_type_identifier"):
        return _text(node).replace(" ", "")
    return None


def _receiver_text(node: Node) -> str:
    chain = _chain(node)
    if chain is not None:
        return chain
    if node.type == "method_invocation":
        obj = node.child_by_field_name("object")
        name = _text(node.child_by_field_name("name"))
        head = f"{_receiver_text(obj)}." if obj is not None else ""
        return f"{head}{name}()"
    if node.type == "field_access":
        return f"{_receiver_text(node.child_by_field_name('object'))}.{_text(node.child_by_field_name('field'))}"
    if node.type == "parenthesized_expression" and node.named_child_count == 1:
        return _receiver_text(node.named_children[0])
    if node.type == "object_creation_expression":
        return f"new {clean_type(_text(node.child_by_field_name('type')))}()"
    if node.type == "array_access":
        return f"{_receiver_text(node.child_by_field_name('array'))}[]"
    return "<expr>"


class _ExprScan:
    def __init__(self) -> None:
        self.used: set[str] = set()
        self.calls: list[CallExpr] = []
        self.nested_bodies: list[Node] = []
        self._bound: list[set[str]] = []

    def scan(self, node: Optional[Node]) -> None:
        if node is None:
            return
        t = node.type
        if t == "identifier":
            name = _text(node)
            if not any(name in b for b in self._bound):
                self.used.add(name)
            return
        if t == "method_invocation":
            obj = node.child_by_field_name("object")
            name = node.child_by_field_name("name")
            args = node.child_by_field_name("arguments")
            if name is not None:
                arg_scan = _ExprScan()
                arg_scan._bound = list(self._bound)
                arg_scan.scan(args)
                self.calls.append(
                    CallExpr(
                        callee=_text(name),
                        line=_line(name),
                        receiver=_receiver_text(obj) if obj is not None else None,
                        arg_vars=frozenset(arg_scan.used),
                    )
                )
            self.scan(obj)
            self.scan(args)
            return
        if t == "object_creation_expression":
            type_node = node.child_by_field_name("type")
            args = node.child_by_field_name("arguments")
            arg_scan = _ExprScan()
            arg_scan._bound = list(self._bound)
            arg_scan.scan(args)
            type_name = clean_type(_text(type_node)).split(".")[-1]
            if type_name:
                self.calls.append(
                    CallExpr(callee=type_name, line=_line(node), receiver=None, arg_vars=frozenset(arg_scan.used))
                )
            self.scan(args)
            for child in node.named_children:
                if child.type == "class_body":
                    self.nested_bodies.append(child)
            return
        if t == "field_access":
            self.scan(node.child_by_field_name("object"))
            return
        if t == "lambda_expression":
            params = node.child_by_field_name("parameters")
            bound: set[str] = set()
            if params is not None:
                if params.type == "identifier":
                    bound.add(_text(params))
                for p in params.named_children:
                    if p.type == "identifier":
                        bound.add(_text(p))
                    else:
                        nm = p.child_by_field_name("name")
                        if nm is not None:
                            bound.add(_text(nm))
            self._bound.append(bound)
            self.scan(node.child_by_field_name("body"))
            self._bound.pop()
            return
        if t in ("method_reference",):
            first = node.named_children[0] if node.named_child_count else None
            self.scan(first)
            return
        if t in ("class_body", "type_identifier", "generic_type", "scoped_type_identifier", "annotation",
                 "marker_annotation", "line_comment", "block_comment"):
            if t == "class_body":
                self.nested_bodies.append(node)
            return
        for child in node.named_children:
            self.scan(child)


class _Builder:
    def __init__(self, path: str, source: str) -> None:
        self.path = path
        self.source = source
        self.functions: list[tuple[str, str, int, int, bool, Optional[str]]] = []
        self.statements: list[Statement] = []
        self.imports: list[ImportDecl] = []
        self.types: list[TypeDecl] = []
        self.var_decls: list[VarDecl] = []

    # -- statements ---------------------------------------------------------

    def stmt(
        self,
        node: Node,
        depth: int,
        scope: list[str],
        owner: Optional[str],
        *,
        exprs: Iterable[Optional[Node]] = (),
        defined: Iterable[str] = (),
        chains: Iterable[str] = (),
        extra_used: Iterable[str] = (),
        value_chain: Optional[str] = None,
        is_return: bool = False,
        kind: Optional[StatementKind] = None,
        end_node: Optional[Node] = None,
    ) -> None:
        scan = _ExprScan()
        for e in exprs:
            scan.scan(e)
        defined_set = frozenset(defined)
        calls = tuple(scan.calls)
        if kind is None:
            if any(_is_load(c) for c in calls):
                kind = StatementKind.LOAD_DECL
            elif defined_set:
                kind = StatementKind.ASSIGNMENT
            else:
                kind = StatementKind.EXPRESSION
        self.statements.append(
            Statement(
                line=_line(node),
                col=node.start_point[1],
                end_line=max(_line(node), _end_line(end_node or node)),
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
        for body in scan.nested_bodies:
            self.members(body, scope, None, depth=depth)

    def block(self, node: Optional[Node], depth: int, scope: list[str], owner: Optional[str]) -> None:
        if node is None:
            return
        if node.type == "block" or node.type == "constructor_body" or node.type == "switch_block":
            for child in node.named_children:
                self.statement(child, depth, scope, owner)
        else:
            self.statement(node, depth, scope, owner)

    def declarators(self, node: Node, depth: int, scope: list[str], owner: Optional[str], is_field: bool) -> None:
        type_text = clean_type(_text(node.child_by_field_name("type")))
        for decl in node.named_children:
            if decl.type != "variable_declarator":
                continue
            name = _text(decl.child_by_field_name("name"))
            value = decl.child_by_field_name("value")
            resolved = type_text
            if type_text == "var" and value is not None and value.type == "object_creation_expression":
                resolved = clean_type(_text(value.child_by_field_name("type")))
            self.var_decls.append(VarDecl(name, resolved, _line(decl), is_field=is_field))
            if value is None and is_field:
                continue
            self.stmt(decl, depth, scope, owner, exprs=[value], defined=[name],
                      value_chain=_chain(value) if value is not None else None)

    def statement(self, node: Node, depth: int, scope: list[str], owner: Optional[str]) -> None:
        t = node.type
        if t in ("line_comment", "block_comment", ";"):
            return
        if t == "local_variable_declaration":
            self.declarators(node, depth, scope, owner, is_field=False)
        elif t == "expression_statement":
            expr = node.named_children[0] if node.named_child_count else None
            self.expression_statement(node, expr, depth, scope, owner)
        elif t == "return_statement":
            self.stmt(node, depth, scope, owner, exprs=node.named_children, is_return=True,
                      kind=StatementKind.EXPRESSION)
        elif t == "if_statement":
            cond = node.child_by_field_name("condition")
            self.stmt(node, depth, scope, owner, exprs=[cond], end_node=cond)
            self.block(node.child_by_field_name("consequence"), depth + 1, scope, owner)
            self.block(node.child_by_field_name("alternative"), depth + 1, scope, owner)
        elif t in ("while_statement", "do_statement"):
            cond = node.child_by_field_name("condition")
            self.stmt(node, depth, scope, owner, exprs=[cond], end_node=cond if t == "while_statement" else None,
                      kind=StatementKind.EXPRESSION)
            self.block(node.child_by_field_name("body"), depth + 1, scope, owner)
        elif t == "for_statement":
            defined: list[str] = []
            exprs: list[Node] = []
            for init in node.children_by_field_name("init"):
                if init.type == "local_variable_declaration":
                    type_text = clean_type(_text(init.child_by_field_name("type")))
                    for decl in init.named_children:
                        if decl.type == "variable_declarator":
                            nm = _text(decl.child_by_field_name("name"))
                            defined.append(nm)
                            self.var_decls.append(VarDecl(nm, type_text, _line(decl)))
                            exprs.append(decl.child_by_field_name("value"))
                else:
                    exprs.append(init)
            exprs.append(node.child_by_field_name("condition"))
            exprs.extend(node.children_by_field_name("update"))
            body = node.child_by_field_name("body")
            self.stmt(node, depth, scope, owner, exprs=exprs, defined=defined,
                      end_node=body.prev_sibling if body is not None else None)
            self.block(body, depth + 1, scope, owner)
        elif t == "enhanced_for_statement":
            name = _text(node.child_by_field_name("name"))
            value = node.child_by_field_name("value")
            self.var_decls.append(VarDecl(name, clean_type(_text(node.child_by_field_name("type"))), _line(node)))
            self.stmt(node, depth, scope, owner, exprs=[value], defined=[name], end_node=value)
            self.block(node.child_by_field_name("body"), depth + 1, scope, owner)
        elif t in ("try_statement", "try_with_resources_statement"):
            resources = node.child_by_field_name("resources")
            defined = []
            exprs = []
            if resources is not None:
                for res in resources.named_children:
                    nm = res.child_by_field_name("name")
                    if nm is not None:
                        defined.append(_text(nm))
                        self.var_decls.append(
                            VarDecl(_text(nm), clean_type(_text(res.child_by_field_name("type"))), _line(res))
                        )
                    exprs.append(res.child_by_field_name("value") or res)
            self.stmt(node, depth, scope, owner, exprs=exprs, defined=defined,
                      end_node=resources if resources is not None else None,
                      kind=None if defined or exprs else StatementKind.OTHER)
            self.block(node.child_by_field_name("body"), depth + 1, scope, owner)
            for child in node.named_children:
                if child.type == "catch_clause":
                    param = next((c for c in child.named_children if c.type == "catch_formal_parameter"), None)
                    nm = param.child_by_field_name("name") if param is not None else None
                    self.stmt(child, depth, scope, owner, defined=[_text(nm)] if nm is not None else [],
                              end_node=param, kind=StatementKind.OTHER if nm is None else None)
                    self.block(child.child_by_field_name("body"), depth + 1, scope, owner)
                elif child.type == "finally_clause":
                    for blk in child.named_children:
                        self.block(blk, depth + 1, scope, owner)
        elif t in ("switch_expression", "switch_statement"):
            cond = node.child_by_field_name("condition")
            self.stmt(node, depth, scope, owner, exprs=[cond], end_node=cond)
            body = node.child_by_field_name("body")
            if body is not None:
                for group in body.named_children:
                    for child in group.named_children:
                        if child.type not in ("switch_label",):
                            self.statement(child, depth + 1, scope, owner)
        elif t == "synchronized_statement":
            lock = next((c for c in node.named_children if c.type == "parenthesized_expression"), None)
            self.stmt(node, depth, scope, owner, exprs=[lock], end_node=lock)
            self.block(node.child_by_field_name("body"), depth, scope, owner)
        elif t == "labeled_statement":
            for child in node.named_children:
                if child.type != "identifier":
                    self.statement(child, depth, scope, owner)
        elif t == "block":
            self.block(node, depth, scope, owner)
        elif t in ("throw_statement", "assert_statement", "yield_statement", "explicit_constructor_invocation"):
            self.stmt(node, depth, scope, owner, exprs=node.named_children, kind=StatementKind.EXPRESSION)
        elif t in _TYPE_DECLS or t == "local_class_declaration":
            self.type_decl(node, scope, depth)
        elif t == "ERROR":
            loose: list[Node] = []
            for child in node.named_children:
                if child.type in _STATEMENT_TYPES or child.type in _TYPE_DECLS or child.type in _CALLABLE_DECLS:
                    self.member_or_statement(child, depth, scope, owner)
                else:
                    loose.append(child)
            if loose:
                self.stmt(node, depth, scope, owner, exprs=loose, kind=StatementKind.OTHER)
        else:
            self.stmt(node, depth, scope, owner, exprs=[node], kind=StatementKind.OTHER)

    def member_or_statement(self, node: Node, depth: int, scope: list[str], owner: Optional[str]) -> None:
        if node.type in _CALLABLE_DECLS or node.type == "field_declaration" or node.type == "static_initializer":
            self.member(node, scope, owner, depth)
        else:
            self.statement(node, depth, scope, owner)

    def expression_statement(self, node: Node, expr: Optional[Node], depth: int, scope: list[str],
                             owner: Optional[str]) -> None:
        if expr is not None and expr.type == "assignment_expression":
            left = expr.child_by_field_name("left")
            right = expr.child_by_field_name("right")
            op = _text(expr.child_by_field_name("operator"))
            defined: list[str] = []
            chains: list[str] = []
            exprs: list[Optional[Node]] = [right]
            if left is not None and left.type == "identifier":
                defined.append(_text(left))
                if op != "=":
                    exprs.append(left)
            elif left is not None and left.type == "field_access":
                chain = _chain(left)
                if chain:
                    chains.append(chain)
                exprs.append(left.child_by_field_name("object"))
            else:
                exprs.append(left)
            self.stmt(node, depth, scope, owner, exprs=exprs, defined=defined, chains=chains,
                      value_chain=_chain(right))
        elif expr is not None and expr.type == "update_expression":
            target = next((c for c in expr.named_children), None)
            if target is not None and target.type == "identifier":
                self.stmt(node, depth, scope, owner, exprs=[target], defined=[_text(target)])
            else:
                self.stmt(node, depth, scope, owner, exprs=[expr])
        else:
            self.stmt(node, depth, scope, owner, exprs=[expr])

    # -- declarations -------------------------------------------------------

    def type_decl(self, node: Node, scope: list[str], depth: int = 0) -> None:
        name = _text(node.child_by_field_name("name"))
        kind = _TYPE_DECLS.get(node.type, "class")
        bases: list[str] = []
        for child in node.named_children:
            if child.type in ("superclass", "super_interfaces", "extends_interfaces"):
                for t in _walk(child):
                    if t.type in ("type_identifier", "scoped_type_identifier", "generic_type"):
                        if t.parent is not None and t.parent.type in ("generic_type", "scoped_type_identifier"):
                            continue
                        bases.append(clean_type(_text(t)))
        qual = ".".join(scope + [name])
        self.types.append(TypeDecl(name, qual, kind, tuple(bases), _line(node), _end_line(node)))
        body = node.child_by_field_name("body")
        if body is not None:
            self.members(body, scope + [name], name, depth=depth)

    def members(self, body: Node, scope: list[str], owner: Optional[str], depth: int = 0) -> None:
        for child in body.named_children:
            self.member(child, scope, owner, depth)

    def member(self, child: Node, scope: list[str], owner: Optional[str], depth: int = 0) -> None:
        t = child.type
        if t in _CALLABLE_DECLS:
            name = _text(child.child_by_field_name("name")) or (owner or "<init>")
            body = child.child_by_field_name("body")
            modifiers = next((c for c in child.children if c.type == "modifiers"), None)
            is_native = modifiers is not None and any(m.type == "native" for m in modifiers.children)
            is_native = is_native and body is None
            qual = ".".join(scope + [name])
            self.functions.append((name, qual, _line(child), _end_line(child), is_native, owner))
            params = child.child_by_field_name("parameters")
            if params is not None:
                for p in params.named_children:
                    nm = p.child_by_field_name("name")
                    if nm is not None:
                        self.var_decls.append(
                            VarDecl(_text(nm), clean_type(_text(p.child_by_field_name("type"))), _line(child))
                        )
            if body is not None:
                self.block(body, 0, scope + [name], owner)
        elif t == "static_initializer":
            qual = ".".join(scope + ["<static_init>"])
            self.functions.append(("<static_init>", qual, _line(child), _end_line(child), False, owner))
            for blk in child.named_children:
                self.block(blk, 0, scope + ["<static_init>"], owner)
        elif t == "block":  # instance initializer
            self.block(child, depth, scope, owner)
        elif t in ("field_declaration", "constant_declaration"):
            self.declarators(child, depth, scope, owner, is_field=True)
        elif t in _TYPE_DECLS:
            self.type_decl(child, scope, depth)
        elif t == "enum_body_declarations":
            self.members(child, scope, owner, depth)
        elif t == "enum_constant":
            for sub in child.named_children:
                if sub.type == "class_body":
                    self.members(sub, scope, owner, depth)
                elif sub.type == "argument_list":
                    self.stmt(child, depth, scope, owner, exprs=[sub], kind=StatementKind.OTHER)
        elif t == "ERROR":
            self.statement(child, depth, scope, owner)

    def program(self, root: Node) -> None:
        for child in root.named_children:
            t = child.type
            if t == "import_declaration":
                text = _text(child)
                text = re.sub(r"^\s*import\s+(static\s+)?", "", text).rstrip(";").strip()
                self.imports.append(ImportDecl(re.sub(r"\s+", "", text), _line(child)))
            elif t in _TYPE_DECLS:
                self.type_decl(child, [])
            elif t in ("package_declaration", "line_comment", "block_comment"):
                continue
            else:
                self.member_or_statement(child, 0, [], None)

    def build(self, degraded: bool) -> SourceUnit:
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
                        is_native_decl=native,
                        owner=owner,
                    )
                    for (name, _, start, end, native, owner), qual in zip(self.functions, quals)
                ),
                key=lambda f: (f.start_line, -f.end_line),
            )
        )
        ordered = sorted(self.statements, key=lambda s: (s.line, s.col))
        unique: list[Statement] = []
        for s in ordered:
            if unique and (unique[-1].line, unique[-1].col) == (s.line, s.col):
                continue
            unique.append(s)
        return SourceUnit(
            path=self.path,
            language=Language.JAVA,
            source=self.source,
            functions=spans,
            statements=tuple(unique),
            imports=tuple(self.imports),
            types=tuple(self.types),
            var_decls=tuple(self.var_decls),
            degraded=degraded,
        )


_STATEMENT_TYPES = frozenset(
    {
        "local_variable_declaration",
        "expression_statement",
        "return_statement",
        "if_statement",
        "while_statement",
        "do_statement",
        "for_statement",
        "enhanced_for_statement",
        "try_statement",
        "try_with_resources_statement",
        "switch_expression",
        "synchronized_statement",
        "labeled_statement",
        "block",
        "throw_statement",
        "assert_statement",
        "static_initializer",
        "field_declaration",
    }
)


def _walk(node: Node) -> Iterable[Node]:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.named_children))


def _is_load(call: CallExpr) -> bool:
    return call.dotted in JAVA_LOAD_CALLS


def parse_java(path: str, source: str) -> SourceUnit:
    tree = _parser().parse(source.encode("utf-8"))
    root = tree.root_node
    degraded = root.has_error
    if degraded:
        log.warning("%s: java source has syntax errors; parsing best-effort", path)
    builder = _Builder(path, source)
    builder.program(root)
    return builder.build(degraded)
