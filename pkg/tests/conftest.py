"""Shared pytest plumbing: the acceptance-criteria result reporter.

Acceptance tests register one line per criterion; the summary is printed at
the end of the run so it is visible without -s.
"""

_criterion_lines = []


def record_criterion(name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] {name}" + (f" -- {detail}" if detail else "")
    _criterion_lines.append(line)
    return line


def record_warning(name, ok, detail=""):
    status = "PASS" if ok else "WARN"
    line = f"[{status}] {name}" + (f" -- {detail}" if detail else "")
    _criterion_lines.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
