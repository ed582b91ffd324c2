from collections import defaultdict

import pytest

_criteria: dict = {}
_outcomes = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    _criteria[number] = title
    if rep.when == "call" or rep.failed:
        _outcomes[number].append((item.name, rep.passed, rep.skipped))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        runs = _outcomes[number]
        failed = [name for name, ok, skipped in runs if not ok and not skipped]
        if failed:
            status = "FAIL"
        elif runs and all(skipped for _, _, skipped in runs):
            status = "SKIP"
        else:
            status = "PASS"
        line = f"criterion {number:>2} {status}: {_criteria[number]}"
        if failed:
            line += f"  [failed: {', '.join(failed)}]"
        terminalreporter.write_line(line)
