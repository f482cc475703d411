"""Resumable orchestration of the mining steps over many repositories."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import shutil
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Union

from .. import __version__
from ..detect import PatternConfig
from ..fsutil import atomic_write_text
from . import git as gitops
from . import steps
from .records import ApiAuthError, FunctionPair, MiningCriteria, RepoRecord

log = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoints.jsonl"
REVIEW_FILE = "review.jsonl"


@dataclass
class PipelineResult:
    pairs: list[FunctionPair]
    repositories: list[RepoRecord] = field(default_factory=list)
    excluded: list[str] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)


def unit_key(repo: str, sha: str) -> str:
    return hashlib.sha1(f"{repo}\0{sha}".encode("utf-8")).hexdigest()


class Checkpoints:
    """Completed (repo, commit) units and their pairs, persisted under state_dir."""

    def __init__(self, state_dir: Path, fresh: bool) -> None:
        self.path = state_dir / CHECKPOINT_FILE
        self.units_dir = state_dir / "units"
        if fresh:
            if self.path.exists():
                self.path.unlink()
            shutil.rmtree(self.units_dir, ignore_errors=True)
        self.units_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.done: set[tuple[str, str]] = set()
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                try:
                    row = json.loads(line)
                    self.done.add((row["repo"], row["sha"]))
                except (ValueError, KeyError):
                    log.warning("ignoring corrupt checkpoint line: %r", line[:80])

    def _unit_file(self, repo: str, sha: str) -> Path:
        return self.units_dir / f"{unit_key(repo, sha)}.json"

    def load(self, repo: str, sha: str) -> Optional[list[FunctionPair]]:
        if (repo, sha) not in self.done:
            return None
        try:
            rows = json.loads(self._unit_file(repo, sha).read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None
        return [FunctionPair.from_dict(r) for r in rows]

    def record(self, repo: str, sha: str, pairs: list[FunctionPair]) -> None:
        atomic_write_text(self._unit_file(repo, sha), json.dumps([p.to_dict() for p in pairs]))
        row = {"repo": repo, "sha": sha, "pairs": len(pairs),
               "ts": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        with self._lock:
            existing = self.path.read_text(encoding="utf-8") if self.path.exists() else ""
            atomic_write_text(self.path, existing + json.dumps(row) + "\n")
            self.done.add((repo, sha))


def read_exclusions(path: Union[str, Path, None]) -> set[str]:
    """Repository names listed one per line; ``#`` starts a comment."""
    if path is None:
        return set()
    names = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            names.add(line)
    return names


def _clone_dir(state_dir: Path, repo: RepoRecord) -> Path:
    return state_dir / "repos" / repo.full_name.replace("/", "__")


def run_pipeline(
    criteria: MiningCriteria,
    state_dir: Union[str, Path],
    source: steps.RepoSource,
    *,
    jobs: Optional[int] = None,
    resume: bool = False,
    exclude: Iterable[str] = (),
    patterns: Optional[PatternConfig] = None,
) -> PipelineResult:
    """Select repositories, then find, match and extract fixes in each.

    With ``resume`` set, work units already checkpointed in ``state_dir`` are
    not recomputed. Pairs come back deduplicated and in canonical order, so
    the result does not depend on scheduling.
    """
    state_dir = Path(state_dir)
    state_dir.mkdir(parents=True, exist_ok=True)
    checkpoints = Checkpoints(state_dir, fresh=not resume)
    excluded_names = set(exclude)

    repos = sorted(steps.filter_repositories(criteria, source), key=lambda r: r.full_name)
    review = "".join(
        json.dumps({"full_name": r.full_name, "stars": r.stars, "matched_pair": r.matched_pair.value,
                    "description": r.description, "excluded": r.full_name in excluded_names}) + "\n"
        for r in repos
    )
    atomic_write_text(state_dir / REVIEW_FILE, review)
    selected = [r for r in repos if r.full_name not in excluded_names]

    def work(repo: RepoRecord) -> list[FunctionPair]:
        issues = steps.filter_bug_issues(repo, criteria, source)
        if not issues:
            return []
        clone = gitops.clone(repo.clone_url, _clone_dir(state_dir, repo))
        found: list[FunctionPair] = []
        for match in steps.match_fix_commits(repo, issues, clone, criteria):
            cached = checkpoints.load(repo.full_name, match.sha)
            if cached is None:
                cached = steps.extract_pairs(repo, match, clone, patterns)
                checkpoints.record(repo.full_name, match.sha, cached)
            found.extend(cached)
        return found

    failed: list[str] = []
    collected: dict[str, FunctionPair] = {}
    workers = max(1, jobs or os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(repo, pool.submit(work, repo)) for repo in selected]
        for repo, future in futures:
            try:
                pairs = future.result()
            except ApiAuthError:
                raise
            except Exception as exc:  # one bad repository must not sink the run
                log.error("%s: skipped after error: %s", repo.full_name, exc)
                failed.append(repo.full_name)
                continue
            for pair in pairs:
                collected.setdefault(pair.pair_id, pair)

    ordered = sorted(collected.values(), key=FunctionPair.sort_key)
    return PipelineResult(ordered, selected, sorted(excluded_names & {r.full_name for r in repos}), failed)


def pairs_jsonl(pairs: Iterable[FunctionPair]) -> str:
    return "".join(json.dumps(p.to_dict(), ensure_ascii=False) + "\n" for p in pairs)


def write_pairs(path: Union[str, Path], result: PipelineResult, criteria: MiningCriteria) -> Path:
    """Write pairs as JSONL plus a ``.manifest.json`` sidecar; returns the manifest path."""
    path = Path(path)
    atomic_write_text(path, pairs_jsonl(result.pairs))
    manifest = {
        "tool": "xlb",
        "version": __version__,
        "criteria": criteria.to_dict(),
        "pair_count": len(result.pairs),
        "repositories": [r.full_name for r in result.repositories],
        "excluded": result.excluded,
        "failed": result.failed,
    }
    manifest_path = path.with_name(path.name + ".manifest.json")
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def read_pairs(path: Union[str, Path]) -> list[FunctionPair]:
    from ..corpus.io import read_jsonl

    return [FunctionPair.from_dict(row) for row in read_jsonl(path)]
