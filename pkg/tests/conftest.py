from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
MECHANISM_FIXTURES = FIXTURES / "mechanisms"
LISTINGS = FIXTURES / "listings"

MARKER = "expect-site"


def expected_sites(project: Path) -> list[tuple[str, int]]:
    """(relative file, line) of every line tagged with the site marker."""
    found = []
    for path in sorted(project.rglob("*")):
        if path.suffix not in (".py", ".java"):
            continue
        for no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if MARKER in line:
                found.append((path.relative_to(project).as_posix(), no))
    return found


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, when that module ran."""
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None:
        return
    ran = {int(r.nodeid.split("test_criterion_")[1].split("_")[0])
           for outcome in ("passed", "failed")
           for r in terminalreporter.stats.get(outcome, [])
           if "test_criterion_" in r.nodeid}
    if not ran:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ran):
        terminalreporter.write_line(module.RESULTS.get(n, f"criterion {n}: FAIL - stopped before measuring"))
