import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _ACCEPTANCE.append((props["criterion"], props.get("criterion_detail", ""), report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, detail, outcome in sorted(_ACCEPTANCE):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"{status}  {label}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


class _Criterion:
    def __init__(self, record_property):
        self._record = record_property

    def __call__(self, label):
        self._record("criterion", label)

    def detail(self, text):
        """Measured figures shown next to the pass/fail line; call before asserting."""
        print(text)
        self._record("criterion_detail", text)


@pytest.fixture
def criterion(record_property):
    return _Criterion(record_property)
