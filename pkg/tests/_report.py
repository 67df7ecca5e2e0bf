"""Collects the one-line verdicts of the acceptance suite."""

LINES: list[str] = []


def record(line: str):
    print(line)
    LINES.append(line)
