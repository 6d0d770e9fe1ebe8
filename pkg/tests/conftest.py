def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda l: int(l.split("]")[1].split(".")[0])):
            terminalreporter.write_line(line)
