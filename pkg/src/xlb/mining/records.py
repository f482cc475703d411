"""Mining criteria and the records flowing between pipeline steps."""

from __future__ import annotations

import hashlib
import re
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional

from ..detect import LanguagePair, Mechanism

DEFAULT_BUG_KEYWORDS = ("bug", "fix", "error", "fault", "defect", "crash", "leak", "wrong", "broken")
DEFAULT_SECURITY_KEYWORDS = ("security", "vulnerability", "cve", "overflow", "exploit", "injection")
DEFAULT_ISSUE_ID_PATTERNS = (r"(?<![\w#])#(\d+)\b", r"\bGH-(\d+)\b", r"\bgh-(\d+)\b")

# Host language names counted toward each side of a pair.
PAIR_LANGUAGES: Mapping[LanguagePair, tuple[frozenset[str], frozenset[str]]] = {
    LanguagePair.PYTHON_C: (frozenset({"Python"}), frozenset({"C", "C++"})),
    LanguagePair.JAVA_C: (frozenset({"Java"}), frozenset({"C", "C++"})),
    LanguagePair.JAVA_PYTHON: (frozenset({"Java"}), frozenset({"Python"})),
}
PAIR_ORDER = (LanguagePair.PYTHON_C, LanguagePair.JAVA_C, LanguagePair.JAVA_PYTHON)


class MiningError(Exception):
    pass


class ApiAuthError(MiningError):
    """Missing or rejected credentials. Fatal for a pipeline run."""


class RateLimited(MiningError):
    def __init__(self, message: str, retry_after: Optional[float] = None) -> None:
        super().__init__(message)
        self.retry_after = retry_after


class ApiUnavailable(MiningError):
    pass


class RootCommit(MiningError):
    pass


class CheckoutFailed(MiningError):
    pass


class FileVanished(MiningError):
    pass


def _keyword_regex(words) -> re.Pattern:
    alts = "|".join(re.escape(w) for w in sorted(set(words), key=lambda w: (-len(w), w)))
    return re.compile(rf"\b(?:{alts})\b", re.IGNORECASE)


@dataclass(frozen=True)
class MiningCriteria:
    min_stars: int = 500
    language_pairs: frozenset[LanguagePair] = frozenset(PAIR_ORDER)
    min_language_share: float = 0.05
    bug_keywords: tuple[str, ...] = DEFAULT_BUG_KEYWORDS
    security_keywords: tuple[str, ...] = DEFAULT_SECURITY_KEYWORDS
    issue_id_patterns: tuple[str, ...] = DEFAULT_ISSUE_ID_PATTERNS

    def __post_init__(self) -> None:
        if self.min_stars < 0:
            raise ValueError("min_stars must be >= 0")
        if not 0 < self.min_language_share < 1:
            raise ValueError("min_language_share must lie strictly between 0 and 1")
        if not self.bug_keywords or not self.security_keywords:
            raise ValueError("keyword lists must be non-empty")
        if not self.issue_id_patterns:
            raise ValueError("issue_id_patterns must be non-empty")
        if not self.language_pairs:
            raise ValueError("language_pairs must be non-empty")
        object.__setattr__(self, "bug_keywords", tuple(k.lower() for k in self.bug_keywords))
        object.__setattr__(self, "security_keywords", tuple(k.lower() for k in self.security_keywords))
        object.__setattr__(self, "language_pairs", frozenset(LanguagePair(p) for p in self.language_pairs))
        for pattern in self.issue_id_patterns:
            re.compile(pattern)

    @property
    def bug_regex(self) -> re.Pattern:
        return _keyword_regex(self.bug_keywords)

    @property
    def security_regex(self) -> re.Pattern:
        return _keyword_regex(self.security_keywords)

    def to_dict(self) -> dict:
        return {
            "min_stars": self.min_stars,
            "language_pairs": sorted(p.value for p in self.language_pairs),
            "min_language_share": self.min_language_share,
            "bug_keywords": list(self.bug_keywords),
            "security_keywords": list(self.security_keywords),
            "issue_id_patterns": list(self.issue_id_patterns),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MiningCriteria":
        known = {"min_stars", "language_pairs", "min_language_share", "bug_keywords",
                 "security_keywords", "issue_id_patterns"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown criteria keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            if key == "language_pairs":
                kwargs[key] = frozenset(LanguagePair(v) for v in value)
            elif key in ("bug_keywords", "security_keywords", "issue_id_patterns"):
                kwargs[key] = tuple(value)
            else:
                kwargs[key] = value
        return cls(**kwargs)


def language_shares(language_bytes: Mapping[str, int]) -> dict[str, float]:
    total = sum(language_bytes.values())
    if total <= 0:
        return {}
    return {lang: n / total for lang, n in language_bytes.items()}


def match_language_pair(language_bytes: Mapping[str, int], criteria: MiningCriteria) -> Optional[LanguagePair]:
    """First pair (python_c, java_c, java_python order) whose sides both exceed the share."""
    shares = language_shares(language_bytes)
    for pair in PAIR_ORDER:
        if pair not in criteria.language_pairs:
            continue
        left, right = PAIR_LANGUAGES[pair]
        left_share = sum(shares.get(l, 0.0) for l in left)
        right_share = sum(shares.get(l, 0.0) for l in right)
        if left_share > criteria.min_language_share and right_share > criteria.min_language_share:
            return pair
    return None


@dataclass(frozen=True)
class RepoRecord:
    full_name: str
    stars: int
    language_bytes: Mapping[str, int]
    matched_pair: LanguagePair
    default_branch: str = "main"
    description: str = ""
    clone_url: str = ""

    def to_dict(self) -> dict:
        return {
            "full_name": self.full_name,
            "stars": self.stars,
            "language_bytes": dict(sorted(self.language_bytes.items())),
            "matched_pair": self.matched_pair.value,
            "default_branch": self.default_branch,
            "description": self.description,
        }


@dataclass(frozen=True)
class IssueRecord:
    repo: str
    number: int
    state: str
    labels: tuple[str, ...]
    title: str
    body: str
    is_bug: bool
    is_security: bool


@dataclass(frozen=True)
class CommitMatch:
    repo: str
    sha: str
    parent_sha: str
    title: str
    issue_numbers: tuple[int, ...]
    is_security: bool


def make_pair_id(repo: str, sha: str, file: str, qualified_name: str) -> str:
    return hashlib.sha1("\0".join((repo, sha, file, qualified_name)).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class FunctionPair:
    pair_id: str
    repo: str
    sha: str
    parent_sha: str
    file: str
    language: str
    qualified_name: str
    mechanisms: tuple[str, ...]
    buggy_code: str
    clean_code: str
    is_security: bool = False
    issue_numbers: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.buggy_code or not self.clean_code:
            raise ValueError(f"{self.pair_id}: both versions must be non-empty")
        if self.buggy_code == self.clean_code:
            raise ValueError(f"{self.pair_id}: buggy and clean versions are identical")
        if not self.mechanisms:
            raise ValueError(f"{self.pair_id}: mechanisms must be non-empty")
        for m in self.mechanisms:
            Mechanism(m)

    def sort_key(self) -> tuple:
        return (self.repo, self.sha, self.file, self.qualified_name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mechanisms"] = list(self.mechanisms)
        d["issue_numbers"] = list(self.issue_numbers)
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "FunctionPair":
        d = dict(data)
        d["mechanisms"] = tuple(d["mechanisms"])
        d["issue_numbers"] = tuple(d.get("issue_numbers", ()))
        return cls(**d)
