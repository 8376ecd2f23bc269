from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rvos import _kernels  # noqa: E402
from rvos.fixtures import write_fixture_configs, write_fixture_dataset  # noqa: E402

DATA = Path(__file__).parent / "data"

KERNEL_IMPLS = [pytest.param(_kernels.numpy_impl, id="numpy")]
if _kernels.numba_impl is not None:
    KERNEL_IMPLS.append(pytest.param(_kernels.numba_impl, id="numba"))


@pytest.fixture(params=KERNEL_IMPLS)
def impl(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def fixture_root(tmp_path_factory) -> Path:
    return write_fixture_dataset(tmp_path_factory.mktemp("fixture") / "dataset")


@pytest.fixture(scope="session")
def fixture_configs(tmp_path_factory) -> tuple[Path, Path]:
    return write_fixture_configs(tmp_path_factory.mktemp("configs"))


@pytest.fixture(scope="session")
def dataset(fixture_root):
    from rvos.dataset import ingest_dataset

    return ingest_dataset(fixture_root)


# --- acceptance reporting ------------------------------------------------------

def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    results = item.config._criteria
    failed = report.failed or (report.when == "call" and report.skipped)
    if failed or number not in results:
        results[number] = (title, "FAIL" if failed else "PASS")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, status = results[number]
        terminalreporter.write_line(f"{status} criterion {number:>2}: {title}")
