import numpy as np
import pytest
from hypothesis import settings

from variantscene import pool as pl
from variantscene import synth

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_pool():
    """Four objects per (class, shape, color) cell: 128 records."""
    return pl.pool_from_synthetic(synth.object_set(0, per_cell=4))


@pytest.fixture(scope="session")
def full_pool():
    return pl.pool_from_synthetic(synth.object_set(0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cloud_of(points, color=(100, 100, 100)):
    from variantscene.geometry import PointCloud

    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    return PointCloud(pts, np.tile(np.asarray(color, np.uint8), (len(pts), 1)))


ACCEPTANCE = {}


@pytest.fixture
def verdict():
    """Record and assert one acceptance criterion: verdict(number, ok, detail)."""

    def record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, f"criterion {number} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
