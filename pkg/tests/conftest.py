from __future__ import annotations

import pytest

CRITERIA = {
    1: "10/9 table reproduction",
    2: "sqrt(2) single-resource lower bound",
    3: "1 + rho multi-resource lower bound",
    4: "Theta(m) over-report with zero ratios",
    5: "upper-bound conformance on random suites",
    6: "no over-report, zero-ratio instance as the expected exception",
    7: "envy-freeness, sharing incentives and Pareto",
    8: "solver certification and perturbation oracle",
    9: "interval structure on sqrt(2) traces",
}

_outcomes: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    numbers = [m.args[0] for m in item.iter_markers("criterion")]
    # record the call phase, or any phase that did not pass (setup errors)
    if numbers and (rep.when == "call" or not rep.passed):
        for n in numbers:
            _outcomes.setdefault(n, []).append((item.nodeid, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        failed = [nid for nid, out in results if out != "passed"]
        status = "FAIL" if failed else "PASS"
        passed = len(results) - len(failed)
        terminalreporter.write_line(f"criterion {n}: {status}  {CRITERIA[n]} ({passed}/{len(results)} tests)")
        for nid in failed:
            terminalreporter.write_line(f"    failed: {nid}")
