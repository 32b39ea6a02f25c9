import pytest

from cqtraj.eigenstate import OscillatorModel


@pytest.fixture(params=[1, 2, 3])
def model(request):
    return OscillatorModel(n=request.param)


@pytest.fixture
def m1():
    return OscillatorModel(n=1)


@pytest.fixture
def m2():
    return OscillatorModel(n=2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
