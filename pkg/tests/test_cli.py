from __future__ import annotations

import io
import json
import os
import subprocess
import sys
import tokenize
from pathlib import Path

import jsonschema
import pytest

from conftest import LISTINGS, MECHANISM_FIXTURES
from xlb.cli import main
from xlb.mining import EXPECTED_PAIRS, make_demo_universe
from xlb.schemas import NAMES, load_schema


def validate(doc, name: str) -> None:
    jsonschema.validate(doc, load_schema(name), cls=jsonschema.Draft202012Validator)


def jsonl(path: Path) -> list[dict]:
    return [json.loads(l) for l in path.read_text(encoding="utf-8").splitlines() if l.strip()]


def run(argv, capsys) -> tuple[int, str, str]:
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def universe(tmp_path_factory) -> Path:
    return make_demo_universe(tmp_path_factory.mktemp("u"))


@pytest.fixture
def mined(universe, tmp_path, capsys) -> Path:
    out = tmp_path / "pairs.jsonl"
    code, _, _ = run(["mine", "--offline-fixture", universe, "--state-dir", tmp_path / "st", "-o", out], capsys)
    assert code == 0
    return out


def test_schemas_are_valid():
    for name in NAMES:
        jsonschema.Draft202012Validator.check_schema(load_schema(name))


# -- scan -------------------------------------------------------------------------

def test_scan_listing_fixture(capsys):
    code, out, _ = run(["scan", LISTINGS / "listing12"], capsys)
    assert code == 0
    report = json.loads(out)
    validate(report, "scan_report")
    sites = [(f["file"], s["line"], s["mechanism"]) for f in report["files"] for s in f["sites"]
             if s["kind"] == "call"]
    assert sites == [("NativeCaller.java", 4, "jni")]
    names = {fn["qualified_name"] for f in report["files"] for fn in f["functions"]}
    assert "NativeCaller.main" in names


def test_scan_empty_directory(tmp_path, capsys):
    code, out, _ = run(["scan", tmp_path], capsys)
    report = json.loads(out)
    assert code == 0
    assert report["files"] == [] and report["summary"]["sites"] == 0
    validate(report, "scan_report")


def test_scan_mechanism_filter_on_mixed_tree(capsys):
    code, out, _ = run(["scan", MECHANISM_FIXTURES, "--mechanisms", "ctypes"], capsys)
    report = json.loads(out)
    assert code == 0
    mechs = {s["mechanism"] for f in report["files"] for s in f["sites"]}
    assert mechs == {"ctypes"}
    _, full, _ = run(["scan", MECHANISM_FIXTURES], capsys)
    assert len({s["mechanism"] for f in json.loads(full)["files"] for s in f["sites"]}) == 9


def test_scan_fail_on_found(tmp_path, capsys):
    assert run(["scan", LISTINGS / "listing12", "--fail-on-found"], capsys)[0] == 3
    assert run(["scan", MECHANISM_FIXTURES / "jni_control", "--fail-on-found"], capsys)[0] == 0


def test_scan_bad_path_exit_2(tmp_path, capsys):
    code, _, err = run(["scan", tmp_path / "nope"], capsys)
    assert code == 2 and "nope" in err


def test_scan_config_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_transfers": 1, "mechanisms": ["jna"]}), encoding="utf-8")
    _, out, _ = run(["scan", LISTINGS / "listing34", "--config", cfg], capsys)
    report = json.loads(out)
    assert report["max_transfers"] == 1 and report["mechanisms"] == ["jna"]
    assert report["summary"]["sites"] == 0
    _, out, _ = run(["scan", LISTINGS / "listing34", "--config", cfg, "--max-transfers", "3",
                     "--mechanisms", "jni"], capsys)
    report = json.loads(out)
    assert report["max_transfers"] == 3 and report["summary"]["sites"] == 2
    marks = {m["line"] for f in report["files"] if f["file"] == "NativeCaller.java" for m in f["marks"]}
    assert marks == {6, 8, 10}


def test_scan_degraded_file_is_warning(tmp_path, capsys, caplog):
    (tmp_path / "bad.py").write_text("import ctypes\nlib = ctypes.CDLL('a')\ndef f(:\n    lib.go()\n", encoding="utf-8")
    code, out, err = run(["scan", tmp_path], capsys)
    assert code == 0
    assert json.loads(out)["files"][0]["degraded"] is True
    assert any("degraded" in r.getMessage() and r.levelname == "WARNING" for r in caplog.records)


def test_scan_bad_mechanism_and_jobs(capsys):
    assert run(["scan", LISTINGS, "--mechanisms", "corba"], capsys)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["scan", str(LISTINGS), "--jobs", "0"])
    assert exc.value.code == 2


# -- mine -----------------------------------------------------------------------------

def test_mine_fixture(mined):
    rows = jsonl(mined)
    assert sorted((r["repo"], r["file"], r["qualified_name"]) for r in rows) == sorted(EXPECTED_PAIRS)
    for r in rows:
        validate(r, "function_pair")
    manifest = json.loads(Path(str(mined) + ".manifest.json").read_text(encoding="utf-8"))
    validate(manifest, "pairs_manifest")
    assert manifest["pair_count"] == 3


def test_mine_needs_token(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("XLB_GITHUB_TOKEN", raising=False)
    code, _, err = run(["mine", "--state-dir", tmp_path / "st", "-o", tmp_path / "p.jsonl"], capsys)
    assert code == 2 and "XLB_GITHUB_TOKEN" in err


def test_mine_no_matches_gives_empty_file(universe, tmp_path, capsys):
    out = tmp_path / "p.jsonl"
    code, _, _ = run(["mine", "--offline-fixture", universe, "--state-dir", tmp_path / "st", "-o", out,
                      "--min-stars", "100000"], capsys)
    assert code == 0 and out.read_text(encoding="utf-8") == ""


def test_mine_config_file(universe, tmp_path, capsys):
    cfg = tmp_path / "mine.json"
    cfg.write_text(json.dumps({"criteria": {"min_stars": 1000}, "offline_fixture": str(universe),
                               "state_dir": str(tmp_path / "st"), "output": str(tmp_path / "p.jsonl")}),
                   encoding="utf-8")
    assert run(["mine", "--config", cfg], capsys)[0] == 0
    assert {r["repo"] for r in jsonl(tmp_path / "p.jsonl")} == {"demo/pyfast"}
    manifest = json.loads((tmp_path / "p.jsonl.manifest.json").read_text(encoding="utf-8"))
    assert manifest["criteria"]["min_stars"] == 1000
    assert run(["mine", "--config", cfg, "--min-stars", "500"], capsys)[0] == 0
    assert len(jsonl(tmp_path / "p.jsonl")) == 3


def test_mine_bad_criteria(universe, tmp_path, capsys):
    cfg = tmp_path / "mine.json"
    cfg.write_text(json.dumps({"criteria": {"min_language_share": 2}}), encoding="utf-8")
    code, _, err = run(["mine", "--config", cfg, "--offline-fixture", universe, "--state-dir", tmp_path,
                        "-o", tmp_path / "p"], capsys)
    assert code == 2 and "criteria" in err


def test_mine_resume_flag(universe, mined, tmp_path, capsys):
    again = tmp_path / "again.jsonl"
    code, _, _ = run(["mine", "--offline-fixture", universe, "--state-dir", tmp_path / "st", "-o", again,
                      "--resume"], capsys)
    assert code == 0 and again.read_bytes() == mined.read_bytes()


# -- build / split / stats / score --------------------------------------------------------

def test_build_split_stats_round(mined, tmp_path, capsys):
    ds = tmp_path / "ds.jsonl"
    assert run(["build", mined, "-o", ds, "--no-comments"], capsys)[0] == 0
    records = jsonl(ds)
    assert len(records) == 6
    for r in records:
        validate(r, "dataset_record")
        if r["language"] == "python":
            toks = tokenize.generate_tokens(io.StringIO(r["code"] + "\n").readline)
            assert not [t for t in toks if t.type == tokenize.COMMENT]
        else:
            assert "//" not in r["code"] and "/*" not in r["code"]
    manifest = json.loads((tmp_path / "ds.jsonl.manifest.json").read_text(encoding="utf-8"))
    validate(manifest, "dataset_manifest")
    assert manifest["with_comments"] is False and manifest["criteria"]["min_stars"] == 500

    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(["split", ds, "-o", a, "--seed", "7"], capsys)[0] == 0
    assert run(["split", ds, "-o", b, "--seed", "7"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.jsonl.manifest.json").read_bytes() == (tmp_path / "b.jsonl.manifest.json").read_bytes()
    split_manifest = json.loads((tmp_path / "a.jsonl.manifest.json").read_text(encoding="utf-8"))
    validate(split_manifest, "dataset_manifest")
    assert split_manifest["seed"] == 7 and split_manifest["ratios"] == [0.8, 0.1, 0.1]
    assert split_manifest["with_comments"] is False

    code, _, err = run(["split", a, "-o", tmp_path / "c.jsonl"], capsys)
    assert code == 2 and "split" in err

    stats_json = tmp_path / "stats.json"
    code, out, _ = run(["stats", a, "--json", stats_json], capsys)
    assert code == 0 and "pairs" in out and "%" in out
    stats = json.loads(stats_json.read_text(encoding="utf-8"))
    validate(stats, "stats")
    assert stats["pair_count"] == 3
    code, out, _ = run(["stats", a, "--format", "json"], capsys)
    assert json.loads(out) == stats


def test_build_keeps_comments_by_default(mined, tmp_path, capsys):
    ds = tmp_path / "ds.jsonl"
    assert run(["build", mined, "-o", ds], capsys)[0] == 0
    manifest = json.loads((tmp_path / "ds.jsonl.manifest.json").read_text(encoding="utf-8"))
    assert manifest["with_comments"] is True


def test_malformed_jsonl_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"a": 1}\n{"a": 2}\nnot json\n', encoding="utf-8")
    for argv in (["stats", bad], ["build", bad, "-o", tmp_path / "o"], ["split", bad, "-o", tmp_path / "o"],
                 ["score", bad]):
        code, _, err = run(argv, capsys)
        assert code == 2
        assert "bad.jsonl:3:" in err


def test_wrong_record_shape_reports_line(tmp_path, capsys):
    bad = tmp_path / "shape.jsonl"
    bad.write_text('\n{"label": 1, "score": 0.5}\n{"label": 0}\n', encoding="utf-8")
    code, _, err = run(["score", bad], capsys)
    assert code == 2 and "shape.jsonl:3:" in err
    code, _, err = run(["stats", bad], capsys)
    assert code == 2 and "shape.jsonl:2:" in err
    code, _, err = run(["build", bad, "-o", tmp_path / "o"], capsys)
    assert code == 2 and "shape.jsonl:2:" in err


def test_score_perfect_separation(tmp_path, capsys):
    preds = tmp_path / "p.jsonl"
    preds.write_text('{"label": 1, "score": 0.9}\n{"label": 0, "score": 0.1}\n', encoding="utf-8")
    code, out, _ = run(["score", preds], capsys)
    report = json.loads(out)
    validate(report, "metric_report")
    assert code == 0
    assert [report[k] for k in ("accuracy", "precision", "recall", "f1", "auc")] == [1.0] * 5


def test_score_with_dataset_labels(mined, tmp_path, capsys):
    ds = tmp_path / "ds.jsonl"
    run(["build", mined, "-o", ds], capsys)
    preds = tmp_path / "p.jsonl"
    preds.write_text("".join(json.dumps({"id": r["id"], "score": 0.2 + 0.6 * r["label"]}) + "\n"
                             for r in jsonl(ds)), encoding="utf-8")
    code, out, _ = run(["score", preds, "--dataset", ds], capsys)
    assert code == 0 and json.loads(out)["auc"] == 1.0


def test_score_single_class(tmp_path, capsys):
    preds = tmp_path / "p.jsonl"
    preds.write_text('{"label": 1, "score": 0.9}\n{"label": 1, "score": 0.1}\n', encoding="utf-8")
    with pytest.warns(UserWarning):
        code, out, _ = run(["score", preds], capsys)
    assert code == 0 and json.loads(out)["auc"] is None


def test_stats_on_empty_dataset(tmp_path, capsys):
    empty = tmp_path / "e.jsonl"
    empty.write_text("", encoding="utf-8")
    assert run(["stats", empty], capsys)[0] == 2


def test_console_script_entry_point(tmp_path):
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "xlb.cli", "--version"], capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and proc.stdout.startswith("xlb ")
    proc = subprocess.run([sys.executable, "-m", "xlb.cli", "scan", str(LISTINGS / "listing12"), "--fail-on-found"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 3
