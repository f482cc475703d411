"""Labelled, balanced, pair-split function datasets."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from math import floor
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from ..mining.records import FunctionPair
from .io import MalformedJsonl, read_jsonl, write_jsonl
from .strip import strip_comments

log = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")
DEFAULT_RATIOS = (0.8, 0.1, 0.1)
RECORD_KEYS = ("id", "pair_id", "repo", "commit", "parent_commit", "file", "language", "function_name",
               "mechanisms", "label", "code", "security", "split")


class EmptyAfterStripping(ValueError):
    pass


class AlreadySplit(ValueError):
    pass


class InvalidDataset(ValueError):
    pass


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    pair_id: str
    repo: str
    commit: str
    parent_commit: str
    file: str
    language: str
    function_name: str
    mechanisms: tuple[str, ...]
    label: int
    code: str
    security: bool
    split: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "pair_id": self.pair_id,
            "repo": self.repo,
            "commit": self.commit,
            "parent_commit": self.parent_commit,
            "file": self.file,
            "language": self.language,
            "function_name": self.function_name,
            "mechanisms": list(self.mechanisms),
            "label": self.label,
            "code": self.code,
            "security": self.security,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetRecord":
        keys = set(data)
        if keys != set(RECORD_KEYS):
            missing = sorted(set(RECORD_KEYS) - keys)
            extra = sorted(keys - set(RECORD_KEYS))
            raise ValueError(f"record keys differ (missing {missing}, unexpected {extra})")
        if data["label"] not in (0, 1) or isinstance(data["label"], bool):
            raise ValueError(f"label must be 0 or 1, got {data['label']!r}")
        if data["split"] is not None and data["split"] not in SPLITS:
            raise ValueError(f"unknown split {data['split']!r}")
        if not isinstance(data["code"], str) or not data["code"]:
            raise ValueError("code must be a non-empty string")
        return cls(**{**data, "mechanisms": tuple(data["mechanisms"])})


def normalise_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def build_dataset(
    pairs: Iterable[FunctionPair],
    with_comments: bool = True,
    *,
    dropped: Optional[list] = None,
) -> list[DatasetRecord]:
    """Two records per surviving pair: label 1 (buggy) then label 0 (clean).

    Pairs whose texts repeat an earlier pair exactly (after newline
    normalisation) are dropped, as are pairs that strip to nothing or whose
    two versions become identical once comments are gone. Reasons go to
    ``dropped`` as (pair_id, reason) when a list is supplied.
    """
    seen_ids: set[str] = set()
    seen_texts: set[tuple[str, str]] = set()
    records: list[DatasetRecord] = []

    def drop(pair_id: str, reason: str) -> None:
        log.info("dropping pair %s: %s", pair_id, reason)
        if dropped is not None:
            dropped.append((pair_id, reason))

    for pair in sorted(pairs, key=lambda p: (p.pair_id, p.sort_key())):
        buggy = normalise_newlines(pair.buggy_code)
        clean = normalise_newlines(pair.clean_code)
        if pair.pair_id in seen_ids or (buggy, clean) in seen_texts:
            drop(pair.pair_id, "duplicate")
            continue
        seen_ids.add(pair.pair_id)
        seen_texts.add((buggy, clean))
        if not with_comments:
            buggy = strip_comments(buggy, pair.language)
            clean = strip_comments(clean, pair.language)
            if not buggy or not clean:
                drop(pair.pair_id, str(EmptyAfterStripping(f"{pair.pair_id}: nothing left after stripping")))
                continue
            if buggy == clean:
                drop(pair.pair_id, "versions identical after stripping")
                continue
        common = dict(
            pair_id=pair.pair_id,
            repo=pair.repo,
            commit=pair.sha,
            parent_commit=pair.parent_sha,
            file=pair.file,
            language=pair.language,
            function_name=pair.qualified_name,
            mechanisms=tuple(sorted(pair.mechanisms)),
            security=pair.is_security,
        )
        records.append(DatasetRecord(id=f"{pair.pair_id}:1", label=1, code=buggy, **common))
        records.append(DatasetRecord(id=f"{pair.pair_id}:0", label=0, code=clean, **common))
    return records


def _exact_ratios(ratios: Sequence[float]) -> tuple[Fraction, Fraction, Fraction]:
    if len(ratios) != 3:
        raise ValueError("ratios must have three entries (train, valid, test)")
    exact = tuple(Fraction(str(r)) for r in ratios)
    if any(r < 0 for r in exact):
        raise ValueError("ratios must be non-negative")
    if sum(exact) != 1:
        raise ValueError(f"ratios must sum to 1, got {float(sum(exact))}")
    return exact  # type: ignore[return-value]


def split_sizes(pair_count: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> tuple[int, int, int]:
    """Floors of the train and valid shares; the remainder goes to test."""
    r_train, r_valid, _ = _exact_ratios(ratios)
    n_train = floor(r_train * pair_count)
    n_valid = floor(r_valid * pair_count)
    return n_train, n_valid, pair_count - n_train - n_valid


def split_dataset(
    records: Sequence[DatasetRecord],
    seed: int,
    ratios: Sequence[float] = DEFAULT_RATIOS,
) -> list[DatasetRecord]:
    """Assign each pair (both its records) to train/valid/test."""
    if any(r.split is not None for r in records):
        raise AlreadySplit("records already carry a split")
    pair_ids = sorted({r.pair_id for r in records})
    n_train, n_valid, _ = split_sizes(len(pair_ids), ratios)
    random.Random(seed).shuffle(pair_ids)
    assignment = {}
    for i, pid in enumerate(pair_ids):
        assignment[pid] = "train" if i < n_train else "valid" if i < n_train + n_valid else "test"
    return [replace(r, split=assignment[r.pair_id]) for r in records]


def check_dataset(records: Sequence[DatasetRecord]) -> None:
    """Raise :class:`InvalidDataset` unless every pair has one record per label and one split."""
    by_pair: dict[str, list[DatasetRecord]] = {}
    for r in records:
        if not r.code:
            raise InvalidDataset(f"{r.id}: empty code")
        by_pair.setdefault(r.pair_id, []).append(r)
    for pid, group in by_pair.items():
        if sorted(r.label for r in group) != [0, 1]:
            raise InvalidDataset(f"{pid}: expected exactly one buggy and one clean record")
        if len({r.split for r in group}) != 1:
            raise InvalidDataset(f"{pid}: records fall in different splits")


def read_records(path: Union[str, Path]) -> list[DatasetRecord]:
    rows = read_jsonl(path)
    out = []
    # line numbers: read_jsonl skips blank lines, so recover them for messages
    lines = [no for no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1) if line.strip()]
    for no, row in zip(lines, rows):
        try:
            out.append(DatasetRecord.from_dict(row))
        except (TypeError, ValueError) as exc:
            raise MalformedJsonl(path, no, str(exc)) from exc
    return out


def write_records(path: Union[str, Path], records: Iterable[DatasetRecord]) -> None:
    write_jsonl(path, (r.to_dict() for r in records))
