"""Shared pytest hooks: acceptance verdict table at the end of the run."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    tr = terminalreporter
    rows = []
    for outcome in ("passed", "failed"):
        for rep in tr.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call":
                continue
            if "test_acceptance.py" not in rep.nodeid:
                continue
            rows.append((rep.nodeid.split("::")[-1], outcome == "passed"))
    if not rows:
        return
    tr.write_sep("=", "acceptance criteria")
    for name, ok in sorted(rows):
        tr.write_line(("PASS  " if ok else "FAIL  ") + name)
