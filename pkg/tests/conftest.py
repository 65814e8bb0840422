CRITERIA = {
    1: "covariance match",
    2: "normalized variance near 1",
    3: "fourth-moment decay in l",
    4: "nonnegative projected kurtosis",
    5: "W null distribution",
    6: "linear convergence on Sphere",
    7: "rotational invariance",
    8: "mixing-strength sensitivity on Discus",
    9: "linear time scaling",
    10: "full-scale Ellipsoid spot check",
}

_results = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            outcome = "XFAIL" if report.skipped else "XPASS"
        else:
            outcome = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _results[props["criterion"]] = (outcome, props.get("measured", ""))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key, title in CRITERIA.items():
        outcome, measured = _results.get(key, ("NOT RUN", "not selected in this session"))
        tr.write_line(f"{outcome:7s} criterion {key} ({title}): {measured}")
    for key, (outcome, measured) in _results.items():
        if key not in CRITERIA:
            tr.write_line(f"{outcome:7s} criterion {key}: {measured}")
