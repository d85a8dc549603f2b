import numpy as np
import pytest

from johnlimits.generators import make_domain
from johnlimits.john import JohnProfile, construct_john_curves
from johnlimits.whitney import whitney_decomposition

ACCEPTANCE_LINES = []


def nearest_id(domain, point, ids=None):
    """Sample id closest to ``point`` among ``ids`` (all samples by default)."""
    co = domain.space.coords
    ids = np.arange(domain.space.n) if ids is None else np.asarray(ids)
    return int(ids[np.argmin(np.hypot(*(co[ids] - np.asarray(point, dtype=float)).T))])


class Built:
    """A domain with its Whitney decomposition and (lazily) its John curves."""

    def __init__(self, name, eps):
        self.domain = make_domain(name, eps)
        self.decomp = whitney_decomposition(self.domain)
        self.profile = JohnProfile.from_dict(self.domain.meta["john"])
        self._curves = None

    @property
    def curves(self):
        if self._curves is None:
            self._curves, failures = construct_john_curves(self.domain, self.domain.boundary, self.profile)
            assert failures == []
        return self._curves


_BUILT = {}


def built(name, eps):
    key = (name, eps)
    if key not in _BUILT:
        _BUILT[key] = Built(name, eps)
    return _BUILT[key]


@pytest.fixture(scope="session")
def square64():
    return built("square", 1 / 64)


@pytest.fixture(scope="session")
def disc64():
    return built("disc", 1 / 64)


@pytest.fixture(scope="session")
def report_line():
    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
