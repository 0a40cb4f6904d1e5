import pytest

from qultra import RepParams

GRID_Q = (0.3, 0.5, 0.9)
GRID_A = (0.25, 1.0, 4.0)
GRID = [RepParams(q, a) for q in GRID_Q for a in GRID_A]

CRITERIA = pytest.StashKey()


def pytest_configure(config):
    config.stash[CRITERIA] = []


@pytest.fixture
def record(request):
    """Store one acceptance line: (criterion id, passed, detail)."""

    def _rec(cid, passed, detail):
        request.config.stash[CRITERIA].append((cid, bool(passed), detail))
        print(f"criterion {cid}: {'PASS' if passed else 'FAIL'}  {detail}")

    return _rec


def pytest_terminal_summary(terminalreporter, config):
    _criteria = config.stash[CRITERIA]
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in sorted(_criteria, key=lambda t: (int(t[0].rstrip("abc")), t[0])):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")
