import numpy as np
import pytest

# criterion number -> (passed, description); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, description: str) -> None:
    ACCEPTANCE_RESULTS[number] = (bool(passed), description)
    print(f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'}: {description}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, description = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(
            f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'}: {description}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
