from pathlib import Path

import pytest

from cartwheels.descriptors import load_descriptor_family, load_universe

FIXTURES = Path(__file__).parent / "fixtures"


def _load(prefix):
    with open(FIXTURES / f"{prefix}_universe.txt") as fh:
        u = load_universe(fh)
    with open(FIXTURES / f"{prefix}_x.tsv") as fh:
        x = load_descriptor_family(fh, u, "X")
    with open(FIXTURES / f"{prefix}_y.tsv") as fh:
        y = load_descriptor_family(fh, u, "Y")
    return u, x, y


@pytest.fixture
def toy():
    return _load("toy")


@pytest.fixture
def countries():
    return _load("countries")


def fixture_args(prefix):
    return [
        "--universe", str(FIXTURES / f"{prefix}_universe.txt"),
        "--x-family", str(FIXTURES / f"{prefix}_x.tsv"),
        "--y-family", str(FIXTURES / f"{prefix}_y.tsv"),
    ]


# -- acceptance summary ---------------------------------------------------

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    n, title = marker
    failed = report.failed
    if report.when == "call" or failed:
        prev = _criteria.get(n, (title, "PASS"))[1]
        status = "FAIL" if failed or prev == "FAIL" else ("SKIP" if report.skipped else "PASS")
        _criteria[n] = (title, status)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, status = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}")
