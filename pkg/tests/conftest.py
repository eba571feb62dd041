import contextlib

ACCEPTANCE_LINES: dict[int, str] = {}


@contextlib.contextmanager
def criterion(number: int, title: str):
    """Record a PASS/FAIL line for an acceptance criterion, re-raising failures."""
    details: list[str] = []
    try:
        yield details
    except BaseException as exc:
        reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        ACCEPTANCE_LINES[number] = f"criterion {number} FAIL  {title}: {reason}"
        print(ACCEPTANCE_LINES[number])
        raise
    suffix = f" ({'; '.join(details)})" if details else ""
    ACCEPTANCE_LINES[number] = f"criterion {number} PASS  {title}{suffix}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
