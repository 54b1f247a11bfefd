import functools

import pytest

from minkiso.abp import AbpContext
from minkiso.corpus import corpus

# surfaces exercised by the comparison-map checks
ABP_SURFACES = {
    "flat": ("flat-disk", None),
    "boosted": ("boosted-disk", {"beta": 0.8}),
    "catenoid": ("elliptic-catenoid", None),
    "euclidean-catenoid": ("euclidean-catenoid", None),
    "sphere-cap": ("sphere-cap", None),
}


@functools.lru_cache(maxsize=None)
def abp_context(key, res=48):
    name, params = ABP_SURFACES[key]
    return AbpContext.from_surface(corpus(name, params), res=res)


@pytest.fixture(scope="session")
def ctx_factory():
    return abp_context


# one summary line per acceptance criterion, shown at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
