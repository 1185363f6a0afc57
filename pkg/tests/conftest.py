import pytest

_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): acceptance criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        if hasattr(rep, "wasxfail"):
            status = "XFAIL" if rep.skipped else "XPASS"
        else:
            status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        detail = dict(item.user_properties).get("detail", "")
        _LINES.append(f"{status:5s} {mark.args[0]}" + (f"  [{detail}]" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
