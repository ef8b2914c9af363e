import time

import numpy as np
import pytest

ACCEPTANCE_LINES = []
SESSION = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_herm(rng, n, scale=1.0):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a + a.conj().T) / 2


def random_pd(rng, n, scale=1.0):
    """Strictly positive density under the normalized trace."""
    from scipy.linalg import expm

    r = expm(random_herm(rng, n, scale))
    return r / (np.trace(r).real / n)


def random_matrix(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def pytest_sessionstart(session):
    SESSION["start"] = time.perf_counter()


def pytest_collection_modifyitems(config, items):
    # acceptance last, so criterion 12 sees the runtime of the whole suite
    items.sort(key=lambda it: "test_acceptance.py" in it.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
