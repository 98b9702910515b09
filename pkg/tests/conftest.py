import pytest

ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    return request.config.stash.setdefault(ACCEPTANCE_LINES, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
