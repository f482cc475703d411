"""Thin wrappers over the system git executable."""

from __future__ import annotations

import io
import logging
import subprocess
import tarfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from .records import CheckoutFailed, FileVanished, MiningError

log = logging.getLogger(__name__)


class GitError(MiningError):
    pass


@dataclass(frozen=True)
class CommitInfo:
    sha: str
    parents: tuple[str, ...]
    title: str


def git(repo: Union[str, Path], *args: str, input: Optional[bytes] = None) -> bytes:
    cmd = ["git", "-C", str(repo), "-c", "core.quotepath=off", *args]
    proc = subprocess.run(cmd, input=input, capture_output=True)
    if proc.returncode != 0:
        raise GitError(f"{' '.join(cmd[3:])}: {proc.stderr.decode('utf-8', 'replace').strip()}")
    return proc.stdout


def clone(url: str, dest: Union[str, Path]) -> Path:
    """Clone ``url`` into ``dest`` unless a clone is already there."""
    dest = Path(dest)
    if (dest / ".git").exists() or (dest / "HEAD").exists():
        return dest
    dest.parent.mkdir(parents=True, exist_ok=True)
    proc = subprocess.run(["git", "clone", "--quiet", url, str(dest)], capture_output=True)
    if proc.returncode != 0:
        raise CheckoutFailed(f"clone {url}: {proc.stderr.decode('utf-8', 'replace').strip()}")
    return dest


def list_commits(repo: Union[str, Path], rev: str = "HEAD") -> list[CommitInfo]:
    """All commits reachable from ``rev``, oldest first."""
    out = git(repo, "log", "--reverse", "--format=%H%x00%P%x00%s%x1e", rev)
    commits = []
    for record in out.decode("utf-8", "replace").split("\x1e"):
        record = record.strip("\n")
        if not record:
            continue
        sha, parents, title = record.split("\x00", 2)
        commits.append(CommitInfo(sha, tuple(parents.split()), title))
    return commits


def changed_files(repo: Union[str, Path], parent: str, sha: str) -> list[tuple[str, str]]:
    """(status letter, path) for files changed between two commits, renames split into D+A."""
    out = git(repo, "diff", "--no-renames", "--name-status", "-z", parent, sha)
    parts = out.decode("utf-8", "replace").split("\x00")
    pairs = []
    for i in range(0, len(parts) - 1, 2):
        pairs.append((parts[i][:1], parts[i + 1]))
    return pairs


def show_file(repo: Union[str, Path], sha: str, path: str) -> bytes:
    try:
        return git(repo, "show", f"{sha}:{path}")
    except GitError as exc:
        raise FileVanished(f"{path}@{sha[:12]}: {exc}") from exc


def export_snapshot(repo: Union[str, Path], sha: str, dest: Union[str, Path]) -> Path:
    """Materialise the tree of ``sha`` into ``dest`` without touching the clone's worktree."""
    try:
        data = git(repo, "archive", "--format=tar", sha)
    except GitError as exc:
        raise CheckoutFailed(f"snapshot of {sha[:12]}: {exc}") from exc
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    with tarfile.open(fileobj=io.BytesIO(data)) as tar:
        members = [m for m in tar.getmembers() if m.isfile() or m.isdir()]
        if hasattr(tarfile, "data_filter"):
            tar.extractall(dest, members=members, filter="data")
        else:
            tar.extractall(dest, members=[m for m in members if not m.name.startswith(("/", "..")) and "/../" not in m.name])
    return dest
