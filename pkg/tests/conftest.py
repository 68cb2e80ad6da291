import hypothesis
import numpy as np
import pytest

np.seterr(all="raise", under="ignore")

hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line; the test still asserts on its own."""

    def report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
