import time

import pytest

from hubbard_ocoo.sweep import SweepConfig, run_sweep

DEFAULT_GRIDS = {"symmetric": (0.0, 12.0), "antisymmetric": (-12.0, 12.0)}


class SweepCache:
    """Default U/t = 10 sweeps, computed once per session with their wall time."""

    def __init__(self):
        self._records = {}
        self.seconds = {}

    def config(self, kind, u_over_t=10.0):
        start, stop = DEFAULT_GRIDS[kind]
        return SweepConfig(kind, u_over_t, start, stop, 0.25)

    def get(self, kind):
        if kind not in self._records:
            t0 = time.perf_counter()
            self._records[kind] = run_sweep(self.config(kind))
            self.seconds[kind] = time.perf_counter() - t0
        return self._records[kind]


@pytest.fixture(scope="session")
def default_sweeps():
    return SweepCache()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
