import pytest

from visemekit.lexicon import default_assets


@pytest.fixture(scope="session")
def assets():
    return default_assets()


@pytest.fixture(scope="session")
def lexicon(assets):
    return assets[0]


@pytest.fixture(scope="session")
def mapping(assets):
    return assets[1]


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary, then assert."""

    def record(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
