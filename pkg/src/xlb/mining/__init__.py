"""Mining bug-fix function pairs from repositories with cross-language code."""

from .fixture import EXPECTED_PAIRS, make_demo_universe
from .github import TOKEN_ENV, GitHubClient, RateLimitGate, ResponseCache
from .pipeline import PipelineResult, read_exclusions, run_pipeline, write_pairs
from .records import (
    ApiAuthError,
    ApiUnavailable,
    CheckoutFailed,
    CommitMatch,
    FileVanished,
    FunctionPair,
    IssueRecord,
    MiningCriteria,
    MiningError,
    RateLimited,
    RepoRecord,
    RootCommit,
    make_pair_id,
    match_language_pair,
)
from .steps import (
    FixtureSource,
    GitHubSource,
    classify_issue,
    extract_pairs,
    filter_bug_issues,
    filter_repositories,
    issue_numbers_in,
    match_fix_commits,
)

__all__ = [
    "EXPECTED_PAIRS",
    "TOKEN_ENV",
    "ApiAuthError",
    "ApiUnavailable",
    "CheckoutFailed",
    "CommitMatch",
    "FileVanished",
    "FixtureSource",
    "FunctionPair",
    "GitHubClient",
    "GitHubSource",
    "IssueRecord",
    "MiningCriteria",
    "MiningError",
    "PipelineResult",
    "RateLimitGate",
    "RateLimited",
    "RepoRecord",
    "ResponseCache",
    "RootCommit",
    "classify_issue",
    "extract_pairs",
    "filter_bug_issues",
    "filter_repositories",
    "issue_numbers_in",
    "make_demo_universe",
    "make_pair_id",
    "match_fix_commits",
    "match_language_pair",
    "read_exclusions",
    "run_pipeline",
    "write_pairs",
]
