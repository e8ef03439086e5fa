from pathlib import Path

import pytest

CLI_EXAMPLES = Path(__file__).resolve().parent.parent / "examples_cli"


@pytest.fixture
def cli_examples():
    return CLI_EXAMPLES


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
