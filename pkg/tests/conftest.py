import os

import pytest


@pytest.fixture(scope="session", autouse=True)
def _private_baseline_cache(tmp_path_factory):
    # keep the suite hermetic: baselines are recomputed into a temp dir
    old = os.environ.get("ECHOLEARN_CACHE")
    os.environ["ECHOLEARN_CACHE"] = str(tmp_path_factory.mktemp("baseline-cache"))
    yield
    if old is None:
        os.environ.pop("ECHOLEARN_CACHE", None)
    else:
        os.environ["ECHOLEARN_CACHE"] = old


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Call with ``(criterion, passed, detail)``; lines are printed at the end of the run."""

    def report(criterion, passed, detail=""):
        line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
