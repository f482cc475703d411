"""The per-repository mining steps: select, find bug issues, match fixes, extract pairs."""

from __future__ import annotations

import json
import logging
import re
import tempfile
from pathlib import Path
from typing import Iterable, Iterator, Optional, Protocol, Union

from ..detect import PatternConfig, build_binding_index, detect_sites
from ..source import Language, SourceError, SourceUnit, parse_unit
from ..taint import MODULE_SPAN_NAME, cross_language_functions, function_mechanisms, propagate
from . import git as gitops
from .github import GitHubClient
from .records import (
    PAIR_LANGUAGES,
    CommitMatch,
    FileVanished,
    FunctionPair,
    IssueRecord,
    MiningCriteria,
    RepoRecord,
    RootCommit,
    make_pair_id,
    match_language_pair,
)

log = logging.getLogger(__name__)


class RepoSource(Protocol):
    """Where repositories and their issues come from."""

    def candidates(self, criteria: MiningCriteria) -> Iterator[dict]: ...

    def languages(self, full_name: str) -> dict[str, int]: ...

    def issues(self, full_name: str) -> Iterator[dict]: ...


class GitHubSource:
    def __init__(self, client: GitHubClient) -> None:
        self.client = client

    def candidates(self, criteria: MiningCriteria) -> Iterator[dict]:
        callers = sorted({lang for pair in criteria.language_pairs for lang in PAIR_LANGUAGES[pair][0]})
        seen = set()
        for language in callers:
            for item in self.client.search_repositories(language, criteria.min_stars):
                name = item["full_name"]
                if name in seen:
                    continue
                seen.add(name)
                yield {
                    "full_name": name,
                    "stars": int(item.get("stargazers_count", 0)),
                    "description": item.get("description") or "",
                    "default_branch": item.get("default_branch") or "main",
                    "clone_url": item.get("clone_url") or f"https://github.com/{name}.git",
                }

    def languages(self, full_name: str) -> dict[str, int]:
        return self.client.languages(full_name)

    def issues(self, full_name: str) -> Iterator[dict]:
        return self.client.closed_issues(full_name)


class FixtureSource:
    """An offline universe: ``universe.json`` plus local git repositories.

    Each repository entry carries full_name, stars, description,
    default_branch, languages (bytes per language), git (path relative to
    the universe directory) and issues (GitHub-shaped issue objects).
    """

    def __init__(self, root: Union[str, Path]) -> None:
        self.root = Path(root).resolve()
        path = self.root / "universe.json"
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise FileNotFoundError(f"{path}: not a readable fixture universe ({exc})") from exc
        self.repos = {r["full_name"]: r for r in data.get("repositories", [])}

    def candidates(self, criteria: MiningCriteria) -> Iterator[dict]:
        for name in sorted(self.repos):
            r = self.repos[name]
            yield {
                "full_name": name,
                "stars": int(r.get("stars", 0)),
                "description": r.get("description", ""),
                "default_branch": r.get("default_branch", "main"),
                "clone_url": str(self.root / r["git"]) if r.get("git") else "",
                "languages": r.get("languages", {}),
            }

    def languages(self, full_name: str) -> dict[str, int]:
        return dict(self.repos[full_name].get("languages", {}))

    def issues(self, full_name: str) -> Iterator[dict]:
        return iter(self.repos[full_name].get("issues", []))


# -- step 1 -------------------------------------------------------------------

def filter_repositories(criteria: MiningCriteria, source: RepoSource) -> Iterator[RepoRecord]:
    """Repositories with enough stars and a qualifying language mix."""
    for cand in source.candidates(criteria):
        if cand["stars"] < criteria.min_stars:
            continue
        languages = cand.get("languages") or source.languages(cand["full_name"])
        pair = match_language_pair(languages, criteria)
        if pair is None:
            continue
        yield RepoRecord(
            full_name=cand["full_name"],
            stars=cand["stars"],
            language_bytes=dict(languages),
            matched_pair=pair,
            default_branch=cand.get("default_branch", "main"),
            description=cand.get("description", ""),
            clone_url=cand.get("clone_url", ""),
        )


# -- step 2 -------------------------------------------------------------------

def _label_names(raw: dict) -> tuple[str, ...]:
    names = []
    for label in raw.get("labels") or []:
        names.append(label["name"] if isinstance(label, dict) else str(label))
    return tuple(names)


def classify_issue(repo: str, raw: dict, criteria: MiningCriteria) -> IssueRecord:
    """A closed issue is a bug when a bug or security keyword occurs in its labels, title or body."""
    labels = _label_names(raw)
    title = raw.get("title") or ""
    body = raw.get("body") or ""
    state = (raw.get("state") or "").lower()
    fields = [*labels, title, body]
    bug_hit = any(criteria.bug_regex.search(f) for f in fields)
    sec_hit = any(criteria.security_regex.search(f) for f in fields)
    # a security issue is a bug even when no general bug term appears
    is_bug = state == "closed" and (bug_hit or sec_hit)
    return IssueRecord(repo, int(raw["number"]), state, labels, title, body, is_bug, is_bug and sec_hit)


def filter_bug_issues(repo: RepoRecord, criteria: MiningCriteria, source: RepoSource) -> list[IssueRecord]:
    out = {}
    for raw in source.issues(repo.full_name):
        issue = classify_issue(repo.full_name, raw, criteria)
        if issue.is_bug:
            out[issue.number] = issue
    return [out[n] for n in sorted(out)]


# -- step 3 -------------------------------------------------------------------

def issue_numbers_in(title: str, criteria: MiningCriteria) -> list[int]:
    found: list[int] = []
    for pattern in criteria.issue_id_patterns:
        for m in re.finditer(pattern, title):
            n = int(m.group(1))
            if n not in found:
                found.append(n)
    return found


def match_fix_commits(
    repo: RepoRecord,
    issues: Iterable[IssueRecord],
    workdir: Union[str, Path],
    criteria: Optional[MiningCriteria] = None,
) -> list[CommitMatch]:
    """Single-parent commits whose title references a bug issue."""
    criteria = criteria or MiningCriteria()
    bugs = {i.number: i for i in issues if i.is_bug}
    if not bugs:
        return []
    matches = []
    for commit in gitops.list_commits(workdir, "HEAD"):
        numbers = [n for n in issue_numbers_in(commit.title, criteria) if n in bugs]
        if not numbers:
            continue
        if not commit.parents:
            log.info("%s: %s", repo.full_name, RootCommit(f"root commit {commit.sha[:12]} skipped"))
            continue
        if len(commit.parents) > 1:
            log.debug("%s: merge commit %s skipped", repo.full_name, commit.sha[:12])
            continue
        matches.append(CommitMatch(
            repo=repo.full_name,
            sha=commit.sha,
            parent_sha=commit.parents[0],
            title=commit.title,
            issue_numbers=tuple(numbers),
            is_security=any(bugs[n].is_security for n in numbers),
        ))
    return matches


# -- step 4 -------------------------------------------------------------------

def _decode(data: bytes, path: str, language: Language) -> Optional[SourceUnit]:
    try:
        return parse_unit(path, data, language)
    except SourceError as exc:
        log.warning("skipping %s: %s", path, exc)
        return None


def _snapshot_units(root: Path, want_java: bool) -> list[SourceUnit]:
    """Java units of a snapshot (the Python side is indexed from native files alone)."""
    units = []
    if not want_java:
        return units
    for path in sorted(root.rglob("*.java")):
        if ".git" in path.parts or not path.is_file():
            continue
        unit = _decode(path.read_bytes(), path.relative_to(root).as_posix(), Language.JAVA)
        if unit is not None:
            units.append(unit)
    return units


def extract_pairs(
    repo: RepoRecord,
    match: CommitMatch,
    workdir: Union[str, Path],
    patterns: Optional[PatternConfig] = None,
) -> list[FunctionPair]:
    """Buggy/clean versions of every cross-language function the fix changed."""
    workdir = Path(workdir)
    changes = [
        (status, path) for status, path in gitops.changed_files(workdir, match.parent_sha, match.sha)
        if Language.from_path(path) is not None
    ]
    modified = [path for status, path in changes if status == "M"]
    if not modified:
        return []

    with tempfile.TemporaryDirectory(prefix="xlb-snap-") as tmp:
        snapshot = gitops.export_snapshot(workdir, match.parent_sha, tmp)
        want_java = any(Language.from_path(p) is Language.JAVA for p in modified)
        index = build_binding_index(snapshot, _snapshot_units(snapshot, want_java), patterns)

        pairs = []
        for path in modified:
            language = Language.from_path(path)
            try:
                before = gitops.show_file(workdir, match.parent_sha, path)
                after = gitops.show_file(workdir, match.sha, path)
            except FileVanished as exc:
                log.warning("%s: %s", repo.full_name, exc)
                continue
            old = _decode(before, path, language)
            new = _decode(after, path, language)
            if old is None or new is None:
                continue
            marks = propagate(old, detect_sites(old, index))
            if not marks:
                continue
            mechs = function_mechanisms(old, marks)
            fixed = {f.qualified_name: f for f in new.functions if not f.is_native_decl}
            for fn in cross_language_functions(old, marks):
                if fn.qualified_name == MODULE_SPAN_NAME or fn.is_native_decl:
                    continue
                after_fn = fixed.get(fn.qualified_name)
                if after_fn is None or after_fn.body_text == fn.body_text:
                    continue
                if not fn.body_text.strip() or not after_fn.body_text.strip():
                    continue
                pairs.append(FunctionPair(
                    pair_id=make_pair_id(repo.full_name, match.sha, path, fn.qualified_name),
                    repo=repo.full_name,
                    sha=match.sha,
                    parent_sha=match.parent_sha,
                    file=path,
                    language=language.value,
                    qualified_name=fn.qualified_name,
                    mechanisms=tuple(sorted(m.value for m in mechs[fn.qualified_name])),
                    buggy_code=fn.body_text,
                    clean_code=after_fn.body_text,
                    is_security=match.is_security,
                    issue_numbers=match.issue_numbers,
                ))
    return sorted(pairs, key=FunctionPair.sort_key)
