import pytest

_results: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    number, text = marker.args
    ok, _, names = _results.get(number, (True, text, []))
    if rep.when == "call" or rep.failed:
        ok = ok and rep.passed
        names.append(item.name)
    _results[number] = (ok, text, names)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_results):
        ok, text, names = _results[number]
        tr.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}  ({len(names)} tests)")
