import contextlib
import time

import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """``with criterion(n, title) as note:`` records one PASS/FAIL line.

    Call ``note("...")`` inside the block to attach measured values.
    """

    @contextlib.contextmanager
    def run(n, title):
        notes = []
        t0 = time.perf_counter()
        try:
            yield notes.append
        except BaseException as exc:
            detail = "; ".join(notes + [str(exc).splitlines()[0] if str(exc) else type(exc).__name__])
            request.config.stash[_RESULTS][n] = ("FAIL", title, detail, time.perf_counter() - t0)
            raise
        request.config.stash[_RESULTS][n] = ("PASS", title, "; ".join(notes), time.perf_counter() - t0)

    return run


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_RESULTS]
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(results):
        status, title, detail, secs = results[n]
        terminalreporter.write_line(f"criterion {n:>2} {status}  {title} ({secs:.1f}s){': ' + detail if detail else ''}")
