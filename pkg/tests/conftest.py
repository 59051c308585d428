import time
import warnings

import numpy as np
import pytest

from corrwitness.photon import PixelGrid, WindowTruncationWarning, gaussian_profile

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}
SESSION_START = time.perf_counter()


def default_profile(fwhm_mrad=6.0, grid=None, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WindowTruncationWarning)
        return gaussian_profile(grid or PixelGrid(), fwhm_mrad, **kw)


@pytest.fixture
def grid():
    return PixelGrid()


@pytest.fixture
def profile():
    return default_profile()


@pytest.fixture
def wide_profile():
    """Gaussian profile on a window of ~7.6 sigma half-width, so truncation is negligible."""
    return default_profile(grid=PixelGrid(half_window_N=64))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def record_acceptance():
    def _record(name: str, ok: bool, detail: str = ""):
        ACCEPTANCE_RESULTS[name] = (bool(ok), detail)
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(ACCEPTANCE_RESULTS.items(), key=lambda kv: int(kv[0].split()[0].rstrip("."))):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def pytest_collection_modifyitems(config, items):
    # acceptance runs last so the whole-suite timing criterion sees every test
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")
