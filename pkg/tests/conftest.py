import numpy as np
import pytest

from finalg.circuits import truth_table
from finalg.fixtures import fixture


def same_table(a, b):
    return np.array_equal(truth_table(a), truth_table(b))


@pytest.fixture(scope="session")
def fx():
    cache = {}

    def get(fid):
        if fid not in cache:
            cache[fid] = fixture(fid)
        return cache[fid]
    return get


# criterion number -> (title, ok, detail); printed once at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {k}. {title}: {detail}")
