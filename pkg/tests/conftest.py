import pytest

from vhetnet import UserFrame, default_params


def pytest_addoption(parser):
    parser.addoption("--extended", action="store_true", default=False,
                     help="run the multi-hour sweeps as well")


def pytest_configure(config):
    config.addinivalue_line("markers", "extended: multi-hour run, needs --extended")
    config.addinivalue_line("markers", "slow: Monte Carlo oracle taking more than a few seconds")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--extended"):
        return
    skip = pytest.mark.skip(reason="needs --extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def km_params():
    """Defaults with the path-loss reference at 1 km."""
    return default_params(pathloss_ref=1.0)


@pytest.fixture(scope="session")
def outer_frame():
    return UserFrame(10.0, 8.0)


@pytest.fixture(scope="session")
def inner_frame():
    return UserFrame(5.0, 8.0)


_CRITERIA = []


@pytest.fixture
def criterion(capsys):
    """Report one acceptance line and fail the test when the check fails."""

    def report(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _CRITERIA.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
