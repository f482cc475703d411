"""Dataset characterisation: sizes, language mix, security subset, length histograms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .dataset import DatasetRecord
from .strip import strip_comments

LINE_BUCKETS = ("<60", "60-200", ">200")
TOKEN_BUCKETS = ("<128", "128-256", "256-512", "512-1024", ">1024")


class EmptyDataset(ValueError):
    pass


def line_bucket(n: int) -> str:
    if n < 60:
        return "<60"
    if n <= 200:
        return "60-200"
    return ">200"


def token_bucket(n: int) -> str:
    if n < 128:
        return "<128"
    if n < 256:
        return "128-256"
    if n < 512:
        return "256-512"
    if n <= 1024:
        return "512-1024"
    return ">1024"


@dataclass
class DatasetStats:
    pair_count: int
    record_count: int
    language_pairs: dict[str, int]
    language_percent: dict[str, float]
    security_pairs: int
    security_commits: int
    line_buckets: dict[str, dict[str, int]]
    token_buckets: dict[str, dict[str, int]]
    split_pairs: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pair_count": self.pair_count,
            "record_count": self.record_count,
            "language_pairs": dict(self.language_pairs),
            "language_percent": dict(self.language_percent),
            "security_pairs": self.security_pairs,
            "security_commits": self.security_commits,
            "line_buckets": {k: dict(v) for k, v in self.line_buckets.items()},
            "token_buckets": {k: dict(v) for k, v in self.token_buckets.items()},
            "split_pairs": dict(self.split_pairs),
        }


def compute_stats(records: Sequence[DatasetRecord]) -> DatasetStats:
    """Statistics over a dataset. Lengths are measured on comment-stripped code."""
    if not records:
        raise EmptyDataset("no records")
    pairs: dict[str, DatasetRecord] = {}
    for r in records:
        pairs.setdefault(r.pair_id, r)
    n_pairs = len(pairs)

    by_lang: dict[str, int] = {}
    for r in pairs.values():
        by_lang[r.language] = by_lang.get(r.language, 0) + 1
    by_lang = dict(sorted(by_lang.items()))
    percent = {lang: 100.0 * n / n_pairs for lang, n in by_lang.items()}

    security = [r for r in pairs.values() if r.security]
    commits = {(r.repo, r.commit) for r in security}

    lines = {"buggy": dict.fromkeys(LINE_BUCKETS, 0), "clean": dict.fromkeys(LINE_BUCKETS, 0)}
    tokens = {"buggy": dict.fromkeys(TOKEN_BUCKETS, 0), "clean": dict.fromkeys(TOKEN_BUCKETS, 0)}
    for r in records:
        side = "buggy" if r.label == 1 else "clean"
        stripped = strip_comments(r.code, r.language)
        n_lines = len(stripped.split("\n")) if stripped else 0
        lines[side][line_bucket(n_lines)] += 1
        tokens[side][token_bucket(len(stripped.split()))] += 1

    splits: dict[str, int] = {}
    for r in pairs.values():
        if r.split is not None:
            splits[r.split] = splits.get(r.split, 0) + 1

    return DatasetStats(
        pair_count=n_pairs,
        record_count=len(records),
        language_pairs=by_lang,
        language_percent=percent,
        security_pairs=len(security),
        security_commits=len(commits),
        line_buckets=lines,
        token_buckets=tokens,
        split_pairs={s: splits[s] for s in ("train", "valid", "test") if s in splits},
    )


def format_stats(stats: DatasetStats) -> str:
    """Human-readable summary table."""
    out = [
        f"pairs              {stats.pair_count:>8,}",
        f"function instances {stats.record_count:>8,}",
        "",
        "language      pairs   share",
    ]
    for lang, n in stats.language_pairs.items():
        out.append(f"{lang:<10} {n:>8,}  {stats.language_percent[lang]:6.2f}%")
    out += [
        "",
        f"security pairs     {stats.security_pairs:>8,}",
        f"security commits   {stats.security_commits:>8,}",
        "",
        "lines (stripped)    buggy    clean",
    ]
    for b in LINE_BUCKETS:
        out.append(f"{b:<15} {stats.line_buckets['buggy'][b]:>8,} {stats.line_buckets['clean'][b]:>8,}")
    out += ["", "tokens (whitespace) buggy    clean"]
    for b in TOKEN_BUCKETS:
        out.append(f"{b:<15} {stats.token_buckets['buggy'][b]:>8,} {stats.token_buckets['clean'][b]:>8,}")
    if stats.split_pairs:
        out += ["", "split          pairs"]
        for s, n in stats.split_pairs.items():
            out.append(f"{s:<10} {n:>8,}")
    return "\n".join(out)
