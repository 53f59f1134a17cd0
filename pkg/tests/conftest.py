import contextlib
import time

ACCEPTANCE_LINES = {}


@contextlib.contextmanager
def criterion(number: int, title: str):
    """Record one ``PASS``/``FAIL`` line for an acceptance criterion."""
    start = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        line = f"FAIL criterion {number}: {title} ({elapsed:.2f} s) {reason}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        raise
    elapsed = time.perf_counter() - start
    extra = "; ".join(f"{k}={v}" for k, v in detail.items())
    line = f"PASS criterion {number}: {title} ({elapsed:.2f} s){' ' + extra if extra else ''}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
