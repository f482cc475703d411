from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xlb.source import (
    Language,
    StatementKind,
    UnreadableSource,
    UnsupportedLanguage,
    function_at,
    parse_unit,
    slice_lines,
    split_lines,
)

from conftest import LISTINGS

NESTED = """\
import os


def outer(a):
    b = a + 1

    def inner(c):
        return c * b

    return inner(b)


class Box:
    @staticmethod
    @property
    def size(self):
        return 3
"""


def listing(name: str) -> str:
    return (LISTINGS / name).read_text(encoding="utf-8")


def test_listing1_native_decl_and_load():
    unit = parse_unit("NativeMethod.java", listing("listing12/NativeMethod.java"), "java")
    natives = [f for f in unit.functions if f.is_native_decl]
    assert [f.name for f in natives] == ["sayHello"]
    loads = [s for s in unit.statements if s.kind is StatementKind.LOAD_DECL]
    assert len(loads) == 1
    assert loads[0].calls[0].dotted == "System.loadLibrary"
    assert function_at(unit, loads[0].line).name == "<static_init>"


def test_empty_source():
    for lang in ("python", "java"):
        unit = parse_unit("x", "", lang)
        assert unit.functions == () or list(unit.functions) == []
        assert list(unit.statements) == []


def test_nested_python_functions():
    unit = parse_unit("n.py", NESTED, "python")
    names = {f.qualified_name: f for f in unit.functions}
    assert {"outer", "outer.inner", "Box.size"} <= set(names)
    outer, inner = names["outer"], names["outer.inner"]
    assert outer.contains_span(inner)
    assert function_at(unit, inner.start_line + 1).qualified_name == "outer.inner"
    assert function_at(unit, outer.start_line + 1).qualified_name == "outer"


def test_decorated_span_starts_at_first_decorator():
    unit = parse_unit("n.py", NESTED, "python")
    size = next(f for f in unit.functions if f.name == "size")
    assert size.body_text.splitlines()[0].strip() == "@staticmethod"


def test_function_at_listing2_main():
    src = listing("listing12/NativeCaller.java")
    unit = parse_unit("NativeCaller.java", src, "java")
    line = next(i for i, l in enumerate(src.splitlines(), 1) if "sayHello" in l)
    assert function_at(unit, line).name == "main"
    assert function_at(unit, 10_000) is None


def test_errors():
    with pytest.raises(UnsupportedLanguage):
        parse_unit("a.rb", "puts 1", "ruby")
    with pytest.raises(UnreadableSource):
        parse_unit("a.py", b"\xff\xfe\x00bad", "python")
    with pytest.raises(UnreadableSource):
        parse_unit("a.py", "x = 1\x00", "python")


def test_broken_python_degrades():
    src = "def f(x):\n    y = g(x\n    return y\n\nz = 1\n"
    unit = parse_unit("b.py", src, "python")
    assert unit.degraded
    assert any(f.name == "f" for f in unit.functions)


def test_broken_java_degrades_but_keeps_methods():
    src = "class A {\n  void f() {\n    int x = g(;\n  }\n  native void h();\n}\n"
    unit = parse_unit("A.java", src, "java")
    assert unit.degraded
    assert {f.name for f in unit.functions} >= {"f", "h"}


def test_assignment_kind_has_defs():
    unit = parse_unit("c.py", "var_c = var_c + var_b\n", "python")
    (stmt,) = unit.statements
    assert stmt.kind is StatementKind.ASSIGNMENT
    assert stmt.defined_vars == {"var_c"} or set(stmt.defined_vars) == {"var_c"}
    assert {"var_c", "var_b"} <= set(stmt.used_vars)


def test_language_from_path():
    assert Language.from_path("a/b.py") is Language.PYTHON
    assert Language.from_path("B.java") is Language.JAVA
    assert Language.from_path("c.c") is None


def _check_invariants(unit):
    n = unit.line_count
    for f in unit.functions:
        assert 1 <= f.start_line <= f.end_line <= max(n, 1)
        assert f.body_text == slice_lines(unit.source, f.start_line, f.end_line)
        if f.is_native_decl:
            assert unit.language is Language.JAVA
    keys = [(s.line, s.col) for s in unit.statements]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    for s in unit.statements:
        if s.kind is StatementKind.ASSIGNMENT:
            assert s.defined_vars
        for c in s.calls:
            assert c.callee
    for a in unit.functions:
        for b in unit.functions:
            if a is not b and a.start_line < b.start_line <= a.end_line:
                assert b.end_line <= a.end_line


_py_snippets = st.lists(
    st.sampled_from([
        "x = 1", "def f(a):", "    return a", "class C:", "    def m(self):", "        self.v = g(1)",
        "        return h(self.v)", "if x:", "    y = x", "for i in r:", "    print(i)", "import os",
        "# comment", "", "z = (", "    1)", "'''doc'''", "@dec", "async def k():", "    await q()",
    ]),
    max_size=25,
)


@settings(max_examples=150, deadline=None)
@given(_py_snippets)
def test_python_invariants_property(lines):
    src = "\n".join(lines) + "\n"
    a = parse_unit("p.py", src, "python")
    _check_invariants(a)
    assert parse_unit("p.py", src, "python") == a


_java_snippets = st.lists(
    st.sampled_from([
        "class A {", "}", "  native int f();", "  void g() {", "    int x = f();", "    y = x + 1;",
        "    if (x > 0) {", "    System.out.println(x);", "  static {", "    System.loadLibrary(\"a\");",
        "  // note", "  /* block */", "import java.util.List;", "    for (int i = 0; i < 3; i++) {",
        "  int field = 3;", "  A() {", "    new Thread(() -> run()).start();",
    ]),
    max_size=25,
)


@settings(max_examples=150, deadline=None)
@given(_java_snippets)
def test_java_invariants_property(lines):
    src = "\n".join(lines) + "\n"
    a = parse_unit("A.java", src, "java")
    _check_invariants(a)
    assert parse_unit("A.java", src, "java") == a


@given(st.integers(min_value=1, max_value=40))
def test_function_at_containment(line):
    unit = parse_unit("n.py", NESTED, "python")
    fn = function_at(unit, line)
    assert fn is None or fn.start_line <= line <= fn.end_line


def test_split_lines_handles_all_terminators():
    assert split_lines("a\r\nb\rc\nd") == ["a", "b", "c", "d"]
