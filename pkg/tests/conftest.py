import pytest

_RESULTS = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    crit = dict(report.user_properties).get("acceptance")
    if crit is not None:
        _RESULTS[report.nodeid] = (crit, report.outcome)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m:
            item.user_properties.append(("acceptance", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    by_crit = {}
    for nodeid, (crit, outcome) in _RESULTS.items():
        by_crit.setdefault(crit, []).append(outcome)
    terminalreporter.section("acceptance criteria")
    for crit in sorted(by_crit):
        ok = all(o == "passed" for o in by_crit[crit])
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {crit}: {status} ({len(by_crit[crit])} checks)")


@pytest.fixture
def unit_params():
    from ehfbl.bounds import ChannelParams
    return ChannelParams(noise_var=1.0, harvest_mean=1.0)
