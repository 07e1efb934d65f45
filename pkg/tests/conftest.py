from acceptance_log import RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, title, ok, detail in sorted(RESULTS, key=lambda r: r[0]):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
