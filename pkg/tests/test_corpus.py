from __future__ import annotations

import ast
import io
import json
import random
import textwrap
import tokenize
import warnings
from pathlib import Path

import pytest
import tree_sitter
import tree_sitter_java
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import roc_auc_score

from conftest import FIXTURES
from oracles import brute_force_auc
from xlb.corpus import (
    AlreadySplit,
    DatasetRecord,
    EmptyDataset,
    InvalidDataset,
    MalformedJsonl,
    SingleClassAUC,
    build_dataset,
    check_dataset,
    compute_stats,
    dumps_jsonl,
    format_stats,
    rank_auc,
    read_records,
    score,
    split_dataset,
    split_sizes,
    strip_comments,
    write_records,
)
from xlb.corpus.stats import line_bucket, token_bucket
from xlb.mining import FunctionPair
from xlb.mining.records import make_pair_id

ROOT = Path(__file__).resolve().parents[1]
_JAVA = tree_sitter.Parser(tree_sitter.Language(tree_sitter_java.language()))


def make_pair(i: int, language: str = "python", buggy: str | None = None, clean: str | None = None,
              security: bool = False, repo: str = "o/r") -> FunctionPair:
    sha = f"{i:040x}"
    file = f"m{i}.py" if language == "python" else f"M{i}.java"
    if buggy is None:
        buggy = f"def f{i}(x):\n    return lib.f(x)\n" if language == "python" else f"int f{i}() {{ return n.f(); }}"
    if clean is None:
        clean = buggy.replace("x", "y") if language == "python" else buggy.replace("return", "return 1 +")
    return FunctionPair(
        pair_id=make_pair_id(repo, sha, file, f"f{i}"),
        repo=repo, sha=sha, parent_sha=f"{i + 1:040x}", file=file, language=language,
        qualified_name=f"f{i}", mechanisms=("ctypes",) if language == "python" else ("jni",),
        buggy_code=buggy, clean_code=clean, is_security=security, issue_numbers=(i + 1,),
    )


def python_comment_tokens(code: str) -> list[str]:
    toks = tokenize.generate_tokens(io.StringIO(textwrap.dedent(code) + "\n").readline)
    return [t.string for t in toks if t.type == tokenize.COMMENT]


def java_comment_nodes(code: str) -> list[str]:
    out, stack = [], [_JAVA.parse(code.encode("utf-8")).root_node]
    while stack:
        node = stack.pop()
        if node.type in ("line_comment", "block_comment"):
            out.append(node.text.decode("utf-8"))
        stack.extend(node.children)
    return out


def fixture_corpus() -> list[tuple[str, str]]:
    files = sorted(ROOT.glob("examples/**/*.py")) + sorted(ROOT.glob("src/**/*.py"))
    files += sorted(FIXTURES.rglob("*.py")) + sorted(FIXTURES.rglob("*.java"))
    return [(p.read_text(encoding="utf-8"), "java" if p.suffix == ".java" else "python") for p in files]


# -- strip_comments -----------------------------------------------------------

def test_strip_python_example():
    assert strip_comments("# c\nx = 1\n\n", "python") == "x = 1"


def test_strip_java_example():
    assert strip_comments("int a; /* k */ int b; // t", "java") == "int a;  int b;"


def test_strip_docstring_keeps_assigned_literal():
    code = (
        "def f(a):\n"
        '    """Doc string.\n'
        "\n"
        '    More."""\n'
        "    # note\n"
        '    sql = """select #1\n'
        "\n"
        '    from t"""\n'
        "    return sql  # done\n"
    )
    expected = (
        "def f(a):\n"
        '    sql = """select #1\n'
        "\n"
        '    from t"""\n'
        "    return sql"
    )
    assert strip_comments(code, "python") == expected


def test_strip_keeps_hash_and_slashes_inside_strings():
    assert strip_comments("s = '# not'  # yes\n", "python") == "s = '# not'"
    assert strip_comments('String u = "http://x/*y*/"; // c\n', "java") == 'String u = "http://x/*y*/";'


def test_strip_class_and_module_docstrings():
    code = '"""Module."""\nclass A:\n    """Class."""\n    x = 1\n'
    assert strip_comments(code, "python") == "class A:\n    x = 1"


def test_strip_unterminated_block_comment(caplog):
    with caplog.at_level("WARNING"):
        assert strip_comments("int a;\n/* never closed\nint b;", "java") == "int a;"


def test_strip_java_javadoc_and_multiline():
    code = "/** Doc.\n * more\n */\npublic int f() {\n    return 1; /* a\n b */\n}\n"
    assert strip_comments(code, "java") == "public int f() {\n    return 1;\n}"


def test_strip_rejects_unknown_language():
    with pytest.raises(ValueError):
        strip_comments("x", "rust")


def test_strip_idempotent_and_comment_free_on_corpus():
    corpus = fixture_corpus()
    assert len(corpus) > 100
    for text, lang in corpus:
        once = strip_comments(text, lang)
        assert strip_comments(once, lang) == once
        if lang == "python":
            assert python_comment_tokens(once) == []
        else:
            assert java_comment_nodes(once) == []


def test_strip_leaves_no_docstrings_on_corpus():
    checked = 0
    for text, lang in fixture_corpus():
        if lang != "python":
            continue
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                tree = ast.parse(strip_comments(text, lang))
        except SyntaxError:
            continue  # a body that held only a doc string is left empty
        checked += 1
        for node in ast.walk(tree):
            if isinstance(node, (ast.Module, ast.ClassDef, ast.FunctionDef, ast.AsyncFunctionDef)):
                assert ast.get_docstring(node, clean=False) is None
    assert checked > 100


def test_strip_blank_lines_only_inside_strings():
    for text, lang in fixture_corpus():
        if lang != "python":
            continue
        out = strip_comments(text, lang)
        inside = set()
        for tok in tokenize.generate_tokens(io.StringIO(out).readline):
            if tok.type == tokenize.STRING or tok.type == getattr(tokenize, "FSTRING_MIDDLE", -1):
                inside.update(range(tok.start[0] + 1, tok.end[0] + 1))
        for no, line in enumerate(out.split("\n"), 1):
            assert line.strip() or no in inside


_PY_PIECES = ["x = 1", "y = f(x)", "# c", "  # indented", "s = '#no'", 's = "a // b"', '"""doc"""',
              "def g():", "    return 2", '    """d"""', "class K:", "    pass", "", "   ", "t = '''a\n\nb'''",
              "z = x  # tail", "u = r'\\d+'  # re"]
_JAVA_PIECES = ["int a = 1;", "// c", "/* b */", "/** d\n * e */", "String s = \"//no\";", "a = b /* i */ + c;",
                "char q = '\"';", "", "  ", "x/*y*/z;", "return a; // t", "String t = \"/*\";"]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(_PY_PIECES), max_size=20))
def test_strip_python_idempotent_property(lines):
    text = "\n".join(lines)
    once = strip_comments(text, "python")
    assert strip_comments(once, "python") == once
    assert python_comment_tokens(once) == []


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from(_JAVA_PIECES), max_size=20))
def test_strip_java_idempotent_property(lines):
    text = "\n".join(lines)
    once = strip_comments(text, "java")
    assert strip_comments(once, "java") == once
    assert java_comment_nodes(once) == []
    assert all(line.strip() for line in once.split("\n")) or once == ""


# -- build_dataset --------------------------------------------------------------

def test_build_one_pair_two_records():
    records = build_dataset([make_pair(0)])
    assert [r.label for r in records] == [1, 0]
    assert records[0].pair_id == records[1].pair_id
    assert records[0].code == make_pair(0).buggy_code


def test_build_dedups_identical_pairs():
    assert len(build_dataset([make_pair(0), make_pair(0)])) == 2


def test_build_dedups_line_ending_variants():
    a = make_pair(0)
    b = make_pair(1, buggy=a.buggy_code.replace("\n", "\r\n"), clean=a.clean_code)
    dropped: list = []
    assert len(build_dataset([a, b], dropped=dropped)) == 2
    assert [reason for _, reason in dropped] == ["duplicate"]


def test_build_without_comments_five_pairs():
    pairs = [
        make_pair(0, buggy="def a(x):\n    # c\n    return lib.a(x)\n", clean="def a(x):\n    return lib.a(x) + 1\n"),
        make_pair(1, buggy='def b():\n    """Doc."""\n    return lib.b()\n', clean="def b():\n    return lib.b(1)  # t\n"),
        make_pair(2, "java", buggy="int c() { /* k */ return n.c(); }", clean="int c() { return n.c() + 1; } // x"),
        make_pair(3, "java", buggy="/** d */\nint e() {\n    return n.e();\n}", clean="int e() {\n\n    return -n.e();\n}"),
        make_pair(4, buggy="def g():\n    s = '#x'\n    return s\n", clean="def g():\n    s = '#y'  # z\n    return s\n"),
    ]
    records = build_dataset(pairs, with_comments=False)
    assert len(records) == 10
    for r in records:
        if r.language == "python":
            assert python_comment_tokens(r.code) == []
        else:
            assert java_comment_nodes(r.code) == []
        assert "\n\n" not in r.code


def test_build_drops_pairs_empty_or_equal_after_stripping():
    only_comment = make_pair(0, buggy="# a\n", clean="# b\n")
    comment_diff = make_pair(1, buggy="x = 1  # a\n", clean="x = 1  # b\n")
    dropped: list = []
    assert build_dataset([only_comment, comment_diff], with_comments=False, dropped=dropped) == []
    assert len(dropped) == 2
    assert len(build_dataset([only_comment, comment_diff], with_comments=True)) == 4


def test_build_balance_and_order_independent():
    pairs = [make_pair(i, "python" if i % 3 else "java") for i in range(30)]
    a = build_dataset(pairs)
    b = build_dataset(list(reversed(pairs)))
    assert a == b
    assert sum(r.label for r in a) == len(a) // 2


def test_record_round_trip_and_key_check():
    r = build_dataset([make_pair(0)])[0]
    assert DatasetRecord.from_dict(json.loads(json.dumps(r.to_dict()))) == r
    bad = r.to_dict()
    bad["extra"] = 1
    with pytest.raises(ValueError):
        DatasetRecord.from_dict(bad)


# -- split ----------------------------------------------------------------------

def dataset(n: int) -> list[DatasetRecord]:
    return build_dataset([make_pair(i) for i in range(n)])


@pytest.mark.parametrize("seed", [0, 1, 7, 12345])
def test_split_ten_pairs(seed):
    out = split_dataset(dataset(10), seed)
    sizes = {s: len({r.pair_id for r in out if r.split == s}) for s in ("train", "valid", "test")}
    assert sizes == {"train": 8, "valid": 1, "test": 1}
    check_dataset(out)


def test_split_sizes_floor_arithmetic():
    assert split_sizes(10) == (8, 1, 1)
    assert split_sizes(5563) == (4450, 556, 557)
    assert split_sizes(0) == (0, 0, 0)
    assert split_sizes(3) == (2, 0, 1)


def test_split_large_dataset_sizes():
    pairs = [
        FunctionPair(pair_id=f"{i:040x}", repo="o/r", sha=f"{i:040x}", parent_sha="0" * 40, file="a.py",
                     language="python", qualified_name="f", mechanisms=("ctypes",), buggy_code=f"a{i}",
                     clean_code=f"b{i}")
        for i in range(5563)
    ]
    out = split_dataset(build_dataset(pairs), seed=3)
    counts = {s: sum(1 for r in out if r.split == s) // 2 for s in ("train", "valid", "test")}
    assert counts == {"train": 4450, "valid": 556, "test": 557}


def test_split_deterministic_and_seed_changes_only_assignment():
    records = dataset(50)
    a = dumps_jsonl(r.to_dict() for r in split_dataset(records, 11))
    b = dumps_jsonl(r.to_dict() for r in split_dataset(records, 11))
    assert a == b
    other = split_dataset(records, 12)
    assert a != dumps_jsonl(r.to_dict() for r in other)
    assert sorted(r.split for r in other) == sorted(json.loads(l)["split"] for l in a.splitlines())


def test_split_rejects_already_split_and_bad_ratios():
    out = split_dataset(dataset(4), 0)
    with pytest.raises(AlreadySplit):
        split_dataset(out, 0)
    with pytest.raises(ValueError):
        split_dataset(dataset(4), 0, (0.5, 0.2, 0.2))


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=60), st.integers(min_value=0, max_value=2**32))
def test_split_invariants_property(n, seed):
    out = split_dataset(dataset(n), seed)
    check_dataset(out)
    for s in ("train", "valid", "test"):
        labels = [r.label for r in out if r.split == s]
        assert labels.count(0) == labels.count(1)
    by_pair: dict[str, set] = {}
    for r in out:
        by_pair.setdefault(r.pair_id, set()).add(r.split)
    assert all(len(v) == 1 for v in by_pair.values())
    n_train, n_valid, n_test = split_sizes(n)
    assert sum(1 for r in out if r.split == "train") == 2 * n_train
    assert sum(1 for r in out if r.split == "valid") == 2 * n_valid


def test_check_dataset_flags_leakage():
    out = split_dataset(dataset(3), 0)
    leaked = [out[0], DatasetRecord(**{**out[1].to_dict(), "mechanisms": out[1].mechanisms,
                                       "split": "test" if out[0].split != "test" else "train"})]
    with pytest.raises(InvalidDataset):
        check_dataset(leaked)


def test_records_io_round_trip(tmp_path):
    records = split_dataset(dataset(5), 1)
    path = tmp_path / "d.jsonl"
    write_records(path, records)
    assert read_records(path) == records


def test_read_records_reports_line(tmp_path):
    path = tmp_path / "d.jsonl"
    good = json.dumps(dataset(1)[0].to_dict())
    path.write_text(good + "\n\n" + good.replace('"label": 1', '"label": 5') + "\n", encoding="utf-8")
    with pytest.raises(MalformedJsonl) as exc:
        read_records(path)
    assert exc.value.line == 3


# -- stats ----------------------------------------------------------------------

def test_stats_language_shares():
    pairs = [make_pair(i, "python") for i in range(8)] + [make_pair(8 + i, "java") for i in range(2)]
    stats = compute_stats(build_dataset(pairs))
    assert stats.pair_count == 10
    assert stats.record_count == 20
    assert stats.language_percent == {"java": 20.0, "python": 80.0}
    table = format_stats(stats)
    assert " 80.00%" in table and " 20.00%" in table


def test_stats_line_buckets():
    pairs = []
    for i, n in enumerate((10, 59, 60, 201)):
        body = "\n".join(f"v{k} = {k}" for k in range(n))
        pairs.append(make_pair(i, buggy=body + "\n# trailing\n\n", clean=body.replace("v0 = 0", "v0 = 1")))
    stats = compute_stats(build_dataset(pairs))
    assert stats.line_buckets["buggy"] == {"<60": 2, "60-200": 1, ">200": 1}
    assert stats.line_buckets["clean"] == {"<60": 2, "60-200": 1, ">200": 1}


def test_bucket_boundaries():
    assert [line_bucket(n) for n in (0, 59, 60, 200, 201)] == ["<60", "<60", "60-200", "60-200", ">200"]
    assert [token_bucket(n) for n in (127, 128, 255, 256, 511, 512, 1024, 1025)] == [
        "<128", "128-256", "128-256", "256-512", "256-512", "512-1024", "512-1024", ">1024"]


def test_stats_security_and_splits():
    pairs = [make_pair(i, security=i < 3) for i in range(10)]
    pairs[1] = FunctionPair(**{**pairs[1].to_dict(), "sha": pairs[0].sha, "mechanisms": ("ctypes",),
                               "issue_numbers": (1,)})
    stats = compute_stats(split_dataset(build_dataset(pairs), 0))
    assert stats.security_pairs == 3
    assert stats.security_commits == 2
    assert stats.split_pairs == {"train": 8, "valid": 1, "test": 1}


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["python", "java"]), st.integers(1, 300)), min_size=1, max_size=20))
def test_stats_invariants_property(spec):
    pairs = []
    for i, (lang, n) in enumerate(spec):
        body = "\n".join(f"v{k} = {k};" for k in range(n))
        pairs.append(make_pair(i, lang, buggy=body, clean=body + "\nq = 1;"))
    stats = compute_stats(build_dataset(pairs))
    assert abs(sum(stats.language_percent.values()) - 100.0) <= 0.01
    for side in ("buggy", "clean"):
        assert sum(stats.line_buckets[side].values()) == stats.pair_count
        assert sum(stats.token_buckets[side].values()) == stats.pair_count


def test_stats_empty():
    with pytest.raises(EmptyDataset):
        compute_stats([])


# -- metrics --------------------------------------------------------------------

def from_counts(tp: int, tn: int, fp: int, fn: int):
    labels = [1] * tp + [0] * tn + [0] * fp + [1] * fn
    scores = [0.9] * tp + [0.1] * tn + [0.8] * fp + [0.2] * fn
    return labels, scores


# (tp, tn, fp, fn) -> accuracy, precision, recall, f1, worked by hand
HAND_WORKED = [
    ((1, 0, 1, 0), (0.5, 0.5, 1.0, 2 / 3)),
    ((3, 4, 2, 1), (0.7, 0.6, 0.75, 2 / 3)),
    ((0, 5, 0, 3), (0.625, 0.0, 0.0, 0.0)),
]


@pytest.mark.parametrize("counts,expected", HAND_WORKED)
def test_score_hand_worked(counts, expected):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingleClassAUC)
        report = score(*from_counts(*counts))
    assert (report.tp, report.tn, report.fp, report.fn) == counts
    got = (report.accuracy, report.precision, report.recall, report.f1)
    assert all(abs(g - e) <= 1e-9 for g, e in zip(got, expected))


def test_score_perfect_separation():
    r = score([1, 0], [0.9, 0.1])
    assert (r.accuracy, r.precision, r.recall, r.f1, r.auc) == (1.0, 1.0, 1.0, 1.0, 1.0)


def test_score_single_class_warns():
    with pytest.warns(SingleClassAUC):
        r = score([1, 1], [0.2, 0.7])
    assert r.auc is None
    assert r.recall == 0.5


def test_score_rejects_bad_input():
    with pytest.raises(ValueError):
        score([1, 0], [0.5])
    with pytest.raises(ValueError):
        score([2, 0], [0.5, 0.5])
    with pytest.raises(ValueError):
        score([], [])


def random_auc_set(rng: random.Random, n: int = 200):
    labels = [rng.randint(0, 1) for _ in range(n)]
    labels[0], labels[1] = 0, 1
    # coarse grid so ties are common
    scores = [rng.randint(0, 40) / 40 for _ in range(n)]
    return labels, scores


def test_auc_matches_brute_force_exactly():
    rng = random.Random(2024)
    for _ in range(50):
        labels, scores = random_auc_set(rng)
        assert rank_auc(labels, scores) == brute_force_auc(labels, scores)
        assert abs(rank_auc(labels, scores) - roc_auc_score(labels, scores)) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 10)), min_size=2, max_size=60))
def test_score_self_consistent_property(rows):
    labels = [y for y, _ in rows]
    scores = [s / 10 for _, s in rows]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingleClassAUC)
        r = score(labels, scores)
    n = r.tp + r.tn + r.fp + r.fn
    assert n == len(rows)
    assert r.accuracy == (r.tp + r.tn) / n
    p = r.tp / (r.tp + r.fp) if r.tp + r.fp else 0.0
    q = r.tp / (r.tp + r.fn) if r.tp + r.fn else 0.0
    assert (r.precision, r.recall) == (p, q)
    assert r.f1 == (2 * p * q / (p + q) if p + q else 0.0)
    if r.auc is not None:
        assert 0.0 <= r.auc <= 1.0
        assert r.auc == brute_force_auc(labels, scores)
        negated = rank_auc(labels, [-s for s in scores])
        flipped = rank_auc([1 - y for y in labels], scores)
        assert abs(negated - (1 - r.auc)) <= 1e-12
        assert abs(flipped - (1 - r.auc)) <= 1e-12
        assert abs(rank_auc([1 - y for y in labels], [-s for s in scores]) - r.auc) <= 1e-12
