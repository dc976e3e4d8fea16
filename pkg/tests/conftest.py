import warnings

import pytest

warnings.filterwarnings("ignore", message=".*TBB.*")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, in criterion order."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome != "error":
                continue
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props:
                rows.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL",
                             props.get("title", ""), props.get("detail", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, title, detail in sorted(rows):
        line = f"criterion {num:2d}: {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def criterion(record_property):
    """``criterion(n, title)`` tags a test; ``criterion.detail(text)`` adds a measured summary."""

    class _Tag:
        def __call__(self, number, title):
            record_property("criterion", number)
            record_property("title", title)

        def detail(self, text):
            record_property("detail", text)

    return _Tag()
