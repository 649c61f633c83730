"""Collects per-criterion outcomes of the acceptance module and prints one
PASS/FAIL line for each at the end of the run."""

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, label = mark.args
            entry = _results.setdefault(number, {"label": label, "outcomes": []})
            item.user_properties.append(("criterion", number))
            entry.setdefault("nodeids", []).append(item.nodeid)


def pytest_runtest_logreport(report):
    for key, number in report.user_properties:
        if key != "criterion":
            continue
        if report.when == "call" or (report.when == "setup" and not report.passed):
            _results[number]["outcomes"].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        entry = _results[number]
        outcomes = entry["outcomes"]
        if not outcomes:
            status = "NOT RUN"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status:<7} {entry['label']}")
