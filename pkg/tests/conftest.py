import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``with acceptance(3, "title") as note: ...``; ``note(text)``
    appends detail. The line is FAIL if the block raises.
    """
    lines = request.config.stash.setdefault(_LINES, [])

    class _Criterion:
        def __init__(self, number, title):
            self.number, self.title, self.notes = number, title, []

        def __enter__(self):
            return self.notes.append

        def __exit__(self, exc_type, exc, tb):
            verdict = "PASS" if exc_type is None else "FAIL"
            detail = "; ".join(self.notes)
            if exc_type is not None:
                detail = (detail + "; " if detail else "") + f"{exc_type.__name__}: {exc}".splitlines()[0]
            line = f"{verdict} criterion {self.number}: {self.title}" + (f" [{detail}]" if detail else "")
            lines.append(line)
            print(line)
            return False

    return _Criterion


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
