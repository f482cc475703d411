"""Command-line entry point: ``xlb scan|mine|build|split|stats|score|fixture``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .corpus import (
    AlreadySplit,
    DatasetRecord,
    EmptyDataset,
    MalformedJsonl,
    build_dataset,
    compute_stats,
    format_stats,
    read_jsonl,
    read_records,
    score,
    split_dataset,
    write_json,
    write_records,
)
from .detect import PatternConfig, parse_mechanisms
from .mining import (
    ApiAuthError,
    FixtureSource,
    FunctionPair,
    GitHubClient,
    GitHubSource,
    MiningCriteria,
    MiningError,
    make_demo_universe,
    read_exclusions,
    run_pipeline,
    write_pairs,
)
from .scan import scan_project
from .source import SourceError

log = logging.getLogger("xlb")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FOUND = 3


class UsageError(Exception):
    """Bad flags, bad config or an unusable environment (exit 2)."""


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _pick(flag: Any, config: dict, key: str, default: Any = None) -> Any:
    """Flag value if given, else config value, else default."""
    if flag is not None:
        return flag
    return config.get(key, default)


def _patterns(config: dict, pattern_file: Optional[str]) -> PatternConfig:
    try:
        patterns = PatternConfig().extended(config.get("patterns", {}))
        if pattern_file:
            patterns = patterns.extended(_load_config(pattern_file))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return patterns


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def _read_manifest(path: Path) -> dict:
    mp = _manifest_path(path)
    if mp.exists():
        try:
            return json.loads(mp.read_text(encoding="utf-8"))
        except ValueError:
            log.warning("ignoring unreadable manifest %s", mp)
    return {}


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


# -- scan ---------------------------------------------------------------------

def cmd_scan(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    try:
        mechanisms = parse_mechanisms(args.mechanisms or config.get("mechanisms"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    max_transfers = _pick(args.max_transfers, config, "max_transfers", 3)
    if not isinstance(max_transfers, int) or max_transfers < 1:
        raise UsageError("max_transfers must be a positive integer")
    patterns = _patterns(config, args.patterns)

    files = []
    for raw in args.paths:
        root = Path(raw)
        if not root.exists():
            raise UsageError(f"{raw}: no such file or directory")
        try:
            report = scan_project(root, patterns=patterns, mechanisms=mechanisms,
                                  max_transfers=max_transfers, jobs=args.jobs)
        except SourceError as exc:
            raise UsageError(str(exc)) from exc
        for entry in report.to_dict()["files"]:
            files.append({"root": raw, **entry})

    by_mech: dict[str, int] = {}
    for f in files:
        for s in f["sites"]:
            by_mech[s["mechanism"]] = by_mech.get(s["mechanism"], 0) + 1
    n_sites = sum(by_mech.values())
    doc = {
        "tool": "xlb",
        "version": __version__,
        "max_transfers": max_transfers,
        "mechanisms": sorted(m.value for m in mechanisms) if mechanisms else None,
        "files": files,
        "summary": {
            "files": len(files),
            "sites": n_sites,
            "marks": sum(len(f["marks"]) for f in files),
            "functions": sum(len(f["functions"]) for f in files),
            "by_mechanism": dict(sorted(by_mech.items())),
        },
    }
    _emit(json.dumps(doc, indent=2), args.output)
    if args.fail_on_found and n_sites:
        return EXIT_FOUND
    return EXIT_OK


# -- mine ---------------------------------------------------------------------

def cmd_mine(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    criteria_cfg = dict(config.get("criteria", {}))
    if args.min_stars is not None:
        criteria_cfg["min_stars"] = args.min_stars
    if args.min_share is not None:
        criteria_cfg["min_language_share"] = args.min_share
    try:
        criteria = MiningCriteria.from_dict(criteria_cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad criteria: {exc}") from exc
    state_dir = _pick(args.state_dir, config, "state_dir")
    output = _pick(args.output, config, "output")
    if not state_dir or not output:
        raise UsageError("--state-dir and --output are required (flag or config)")
    fixture = _pick(args.offline_fixture, config, "offline_fixture")
    exclude_file = _pick(args.exclude, config, "exclude")
    patterns = _patterns(config, args.patterns)
    jobs = _pick(args.jobs, config, "jobs")

    client = None
    if fixture:
        try:
            source = FixtureSource(fixture)
        except FileNotFoundError as exc:
            raise UsageError(str(exc)) from exc
    else:
        try:
            client = GitHubClient(cache_dir=Path(state_dir) / "cache")
        except ApiAuthError as exc:
            raise UsageError(str(exc)) from exc
        source = GitHubSource(client)
    try:
        exclude = read_exclusions(exclude_file) if exclude_file else set()
        result = run_pipeline(criteria, state_dir, source, jobs=jobs, resume=args.resume,
                              exclude=exclude, patterns=patterns)
    except ApiAuthError as exc:
        raise UsageError(f"authentication failed: {exc}") from exc
    except (MiningError, OSError) as exc:
        raise UsageError(str(exc)) from exc
    finally:
        if client is not None:
            client.close()
    write_pairs(output, result, criteria)
    log.info("%d pairs from %d repositories", len(result.pairs), len(result.repositories))
    return EXIT_OK


def cmd_fixture(args: argparse.Namespace) -> int:
    try:
        dest = make_demo_universe(args.dest)
    except (FileExistsError, OSError) as exc:
        raise UsageError(str(exc)) from exc
    print(dest)
    return EXIT_OK


# -- build / split / stats / score ---------------------------------------------

def _read_pairs(path: str) -> list[FunctionPair]:
    rows = read_jsonl(path)
    lines = [n for n, l in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1) if l.strip()]
    pairs = []
    for no, row in zip(lines, rows):
        try:
            pairs.append(FunctionPair.from_dict(row))
        except (TypeError, ValueError, KeyError) as exc:
            raise MalformedJsonl(path, no, f"not a function pair: {exc}") from exc
    return pairs


def cmd_build(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    output = _pick(args.output, config, "output")
    if not output:
        raise UsageError("--output is required")
    with_comments = not args.no_comments if args.no_comments else config.get("with_comments", True)
    pairs = _read_pairs(args.pairs)
    dropped: list = []
    records = build_dataset(pairs, with_comments=with_comments, dropped=dropped)
    write_records(output, records)
    source_manifest = _read_manifest(Path(args.pairs))
    write_json(_manifest_path(Path(output)), {
        "tool": "xlb",
        "version": __version__,
        "with_comments": with_comments,
        "seed": None,
        "ratios": None,
        "criteria": source_manifest.get("criteria"),
        "pair_count": len(records) // 2,
        "record_count": len(records),
        "dropped_pairs": len(dropped),
        "source": Path(args.pairs).name,
    })
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seed = _pick(args.seed, config, "seed", 0)
    ratios = _pick(args.ratios, config, "ratios", [0.8, 0.1, 0.1])
    output = _pick(args.output, config, "output")
    if not output:
        raise UsageError("--output is required")
    records = read_records(args.dataset)
    try:
        split = split_dataset(records, int(seed), tuple(ratios))
    except AlreadySplit as exc:
        raise UsageError(f"{args.dataset}: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_records(output, split)
    manifest = _read_manifest(Path(args.dataset))
    manifest.update({
        "tool": "xlb",
        "version": __version__,
        "seed": int(seed),
        "ratios": [float(r) for r in ratios],
        "pair_count": len({r.pair_id for r in split}),
        "record_count": len(split),
        "source": Path(args.dataset).name,
    })
    manifest.setdefault("with_comments", None)
    manifest.setdefault("criteria", None)
    write_json(_manifest_path(Path(output)), manifest)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    records = read_records(args.dataset)
    try:
        stats = compute_stats(records)
    except EmptyDataset as exc:
        raise UsageError(f"{args.dataset}: {exc}") from exc
    doc = stats.to_dict()
    if args.json:
        write_json(args.json, doc)
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        print(format_stats(stats))
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    rows = read_jsonl(args.predictions)
    lines = [n for n, l in enumerate(Path(args.predictions).read_text(encoding="utf-8").splitlines(), 1)
             if l.strip()]
    truth = None
    if args.dataset:
        truth = {r.id: r.label for r in read_records(args.dataset)}
    labels, scores = [], []
    for no, row in zip(lines, rows):
        try:
            label = truth[row["id"]] if truth is not None else row["label"]
            value = float(row["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedJsonl(args.predictions, no, f"need label/id and numeric score ({exc})") from exc
        labels.append(label)
        scores.append(value)
    try:
        report = score(labels, scores, args.threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(json.dumps(report.to_dict(), indent=2), args.output)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xlb", description=__doc__)
    parser.add_argument("--version", action="version", version=f"xlb {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="report cross-language sites, marked lines and functions")
    p.add_argument("paths", nargs="+", help="project directories or single source files")
    p.add_argument("--mechanisms", action="append", help="restrict to these mechanisms (comma list, repeatable)")
    p.add_argument("--max-transfers", type=int, help="transfer bound for propagation (default 3)")
    p.add_argument("--patterns", help="JSON file of extra detection patterns per mechanism")
    p.add_argument("--config", help="JSON config; flags override it")
    p.add_argument("--jobs", type=int, help="worker threads (default: logical cores)")
    p.add_argument("--fail-on-found", action="store_true", help="exit 3 when any site is found")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("mine", help="mine bug-fix function pairs")
    p.add_argument("--state-dir", help="checkpoints, cache and clones live here")
    p.add_argument("-o", "--output", help="pairs JSONL to write")
    p.add_argument("--offline-fixture", help="mine a local fixture universe instead of the remote API")
    p.add_argument("--resume", action="store_true", help="skip work units already checkpointed")
    p.add_argument("--exclude", help="file of repositories to leave out after manual review")
    p.add_argument("--min-stars", type=int)
    p.add_argument("--min-share", type=float, help="minimum byte share of each language in a pair")
    p.add_argument("--patterns", help="JSON file of extra detection patterns per mechanism")
    p.add_argument("--config", help="JSON config; flags override it")
    p.add_argument("--jobs", type=int, help="parallel repositories (default: logical cores)")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("fixture", help="create the offline demo universe")
    p.add_argument("dest")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("build", help="turn pairs into a labelled dataset")
    p.add_argument("pairs")
    p.add_argument("-o", "--output")
    p.add_argument("--no-comments", action="store_true", help="strip comments, doc strings and blank lines")
    p.add_argument("--config")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("split", help="assign pairs to train/valid/test")
    p.add_argument("dataset")
    p.add_argument("-o", "--output")
    p.add_argument("--seed", type=int)
    p.add_argument("--ratios", type=float, nargs=3, metavar=("TRAIN", "VALID", "TEST"))
    p.add_argument("--config")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("dataset")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--json", help="also write the statistics as JSON to this file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("score", help="accuracy, precision, recall, F1 and AUC")
    p.add_argument("predictions", help="JSONL rows with label (or id) and score")
    p.add_argument("--dataset", help="take labels from this dataset, matching rows by id")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except MalformedJsonl as exc:
        print(f"xlb: malformed JSONL at {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"xlb: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"xlb: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
