import pytest

from kroughpam import testfn
from kroughpam.kernels import build_localized_kernel
from kroughpam.spectral_model import HurstConfig, mollifier

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)


@pytest.fixture
def report(request):
    """Record one pass/fail line for the acceptance summary and echo it."""
    store = request.config.stash[_ACCEPTANCE]

    def _report(number, name, passed, detail=""):
        line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
        print(line)
        store.append(line)
        return passed

    return _report


@pytest.fixture(scope="session")
def kernel1():
    return build_localized_kernel(1)


@pytest.fixture(scope="session")
def kernel2():
    return build_localized_kernel(2)


@pytest.fixture(scope="session")
def rough1():
    """d = 1 indices in the strictly sub-critical rough window (2 h0 + H = 1.8)."""
    return HurstConfig(1, (0.6,), 0.6)


@pytest.fixture(scope="session")
def gauss1():
    return mollifier("gauss-gauss", 1)


@pytest.fixture(scope="session")
def psi1():
    return testfn.make_test_function(1)
