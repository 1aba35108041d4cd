import pytest

import audit

audit.install()


def pytest_configure(config):
    config.addinivalue_line("markers", "outside_precondition: evaluator misuse on purpose; output not audited")
    config.addinivalue_line("markers", "run_last: needs every other test to have run first")


def pytest_collection_modifyitems(config, items):
    last = [it for it in items if it.get_closest_marker("run_last")]
    items[:] = [it for it in items if not it.get_closest_marker("run_last")] + last


@pytest.fixture(autouse=True)
def _audit_switch(request):
    if request.node.get_closest_marker("outside_precondition"):
        audit.AUDIT.suspended = True
        yield
        audit.AUDIT.suspended = False
    else:
        yield


def pytest_terminal_summary(terminalreporter):
    if audit.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in audit.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
