import numpy as np
import pytest
from scipy import ndimage

from floodrisk import kernels
from floodrisk.grid import GeoGrid
from floodrisk.synthetic import write_fixture

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.get(request.param)


def random_dem(rng, rows, cols, cellsize=30.0, integer=False, nodata_frac=0.0):
    """Smoothed noise on a tilt; integer DEMs produce plenty of ties and flats."""
    z = ndimage.gaussian_filter(rng.normal(size=(rows, cols)), 1.5) * 20
    z += rng.uniform(-1, 1) * np.arange(cols)[None, :] + rng.uniform(-1, 1) * np.arange(rows)[:, None]
    if integer:
        z = np.round(z / 3.0)
    cells = z.astype(np.float64)
    if nodata_frac:
        cells[rng.random((rows, cols)) < nodata_frac] = -9999.0
    return GeoGrid(cells, cellsize, 0.0, 0.0, -9999.0)


@pytest.fixture(scope="session")
def valley_fixture(tmp_path_factory):
    """The default 128 x 128 synthetic valley with its run.toml."""
    return write_fixture(tmp_path_factory.mktemp("valley"))


@pytest.fixture
def acceptance(request):
    """Record a one-line detail for the acceptance summary."""
    marker = request.node.get_closest_marker("criterion")
    number = marker.args[0]
    entry = _ACCEPTANCE.setdefault(number, {"detail": "", "outcome": "PASS", "name": request.node.name})

    def note(text):
        entry["detail"] = text

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    entry = _ACCEPTANCE.setdefault(marker.args[0], {"detail": "", "outcome": "PASS", "name": item.name})
    if rep.failed:
        entry["outcome"] = "FAIL"
        if not entry["detail"]:
            entry["detail"] = str(rep.longrepr).strip().splitlines()[-1][:160]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {e['outcome']}  {e['detail']}")
