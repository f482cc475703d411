from __future__ import annotations

import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xlb.detect import CrossLangSite, Mechanism
from xlb.scan import scan_project
from xlb.source import parse_unit
from xlb.taint import SiteNotInUnit, cross_language_functions, propagate

from conftest import LISTINGS
from oracles import NATIVE, chain_oracle, random_program


def native_sites(unit):
    """Treat every call to ``native`` as a cross-language site."""
    return [
        CrossLangSite(Mechanism.CTYPES, unit.path, call.line, call)
        for stmt in unit.statements
        for call in stmt.calls
        if call.callee == NATIVE and call.receiver is None
    ]


def run(src, max_transfers=3):
    unit = parse_unit("p.py", src, "python")
    return unit, propagate(unit, native_sites(unit), max_transfers)


def test_listing4_marks():
    report = scan_project(LISTINGS / "listing34")
    caller = next(f for f in report.files if f.unit.path == "NativeCaller.java")
    lines = caller.unit.source.splitlines()
    marked = {m.line for m in caller.marks}

    def line_of(prefix):
        return next(i for i, l in enumerate(lines, 1) if l.strip().startswith(prefix))

    assert marked == {line_of("var_a ="), line_of("var_b ="), line_of("var_c =")}
    assert line_of("var_d =") not in marked
    depths = {(m.line, m.depth) for m in caller.marks}
    assert {(line_of("var_a ="), 1), (line_of("var_b ="), 2), (line_of("var_c ="), 3)} <= depths
    assert [f.name for f in caller.functions] == ["main"]


def test_listing2_function():
    report = scan_project(LISTINGS / "listing12")
    caller = next(f for f in report.files if f.unit.path == "NativeCaller.java")
    assert [f.name for f in caller.functions] == ["main"]


def test_no_sites_no_marks():
    unit = parse_unit("p.py", "x = 1\n", "python")
    assert propagate(unit, []) == []
    assert cross_language_functions(unit, []) == []


def test_site_not_in_unit():
    unit, _ = run("a = native()\n")
    other = parse_unit("q.py", "b = native()\n", "python")
    with pytest.raises(SiteNotInUnit):
        propagate(unit, native_sites(other))
    with pytest.raises(ValueError):
        propagate(unit, native_sites(unit), max_transfers=0)


def test_kill():
    _, marks = run("a = native()\na = 5\nb = a\nprint(a)\n")
    assert {m.line for m in marks} == {1}


def test_pure_use_marked_at_var_depth():
    _, marks = run("a = native()\nb = a\nprint(b)\n")
    assert (3, 2) in {(m.line, m.depth) for m in marks}


def test_min_depth_wins():
    _, marks = run("a = native()\nb = a\nc = b\nd = c + a\n")
    assert (4, 2) in {(m.line, m.depth) for m in marks}


def test_depth0_exactly_on_site_lines():
    unit, marks = run("a = native()\nb = a\nnative(b)\n")
    site_lines = {s.line for s in native_sites(unit)}
    assert {m.line for m in marks if m.depth == 0} == site_lines
    for m in marks:
        if m.depth == 0:
            assert m.origin.line == m.line


@pytest.mark.parametrize("length", range(1, 7))
def test_chain_depth_bound(length):
    lines = ["v1 = native()"] + [f"v{i + 1} = v{i} + 1" for i in range(1, length)]
    _, marks = run("\n".join(lines) + "\n")
    assert max(m.depth for m in marks) <= 3
    assert {m.line for m in marks if m.depth > 0} == set(range(1, min(length, 3) + 1))


def test_branch_weak_update():
    src = "def f(c):\n    a = native()\n    if c:\n        a = 0\n    b = a\n"
    _, marks = run(src)
    assert (5, 2) in {(m.line, m.depth) for m in marks}


def test_function_summary():
    src = (
        "def get():\n    return native()\n\n"
        "def use():\n    v = get()\n    w = v\n    print(w)\n\n"
        "def clean():\n    z = 1\n    return z\n"
    )
    unit, marks = run(src)
    assert {(m.line, m.depth) for m in marks} >= {(2, 0), (5, 2), (6, 3), (7, 3)}
    assert [f.name for f in cross_language_functions(unit, marks)] == ["get", "use"]


def test_two_of_three_functions():
    src = "def a():\n    x = native()\n\ndef b():\n    y = 2\n\ndef c():\n    native()\n"
    unit, marks = run(src)
    spans = cross_language_functions(unit, marks)
    assert [f.name for f in spans] == ["a", "c"]


def test_module_level_marks():
    unit, marks = run("x = native()\nprint(x)\n")
    spans = cross_language_functions(unit, marks)
    assert [f.name for f in spans] == ["<module>"]


def test_oracle_equivalence_1000_programs():
    rng = random.Random(20240611)
    start = time.perf_counter()
    mismatches = []
    for _ in range(1000):
        program = random_program(rng)
        _, marks = run(program)
        got = {(m.line, m.depth) for m in marks}
        if got != chain_oracle(program):
            mismatches.append(program)
    assert not mismatches, mismatches[0]
    assert time.perf_counter() - start < 30


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=1, max_value=5))
def test_oracle_equivalence_any_bound(seed, bound):
    program = random_program(random.Random(seed))
    _, marks = run(program, bound)
    assert {(m.line, m.depth) for m in marks} == chain_oracle(program, bound)
    assert all(0 <= m.depth <= bound for m in marks)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_containment(seed):
    src = "def f(v0, v1, v2):\n" + "".join(
        "    " + line + "\n" for line in random_program(random.Random(seed), n_vars=3).splitlines()
    )
    unit, marks = run(src)
    spans = cross_language_functions(unit, marks)
    for span in spans:
        assert any(span.start_line <= m.line <= span.end_line for m in marks)
    for m in marks:
        assert sum(1 for s in spans if s.start_line <= m.line <= s.end_line) == 1
