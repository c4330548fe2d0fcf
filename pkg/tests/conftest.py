import pytest

_acceptance: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and item.name.startswith("test_c"):
        doc = (item.function.__doc__ or item.name).strip()
        if report.when == "call" or (report.when == "setup" and report.failed):
            _acceptance[item.name] = ("PASS" if report.passed else "FAIL", doc)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        status, doc = _acceptance[name]
        number = int(name[6:8])
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {doc}")
