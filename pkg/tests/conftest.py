"""Collects one verdict line per acceptance check and prints them after the run."""

VERDICTS = []


def record(name: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
