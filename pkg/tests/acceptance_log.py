"""Shared pass/fail lines of the acceptance tests, printed by conftest."""

RESULTS = {}


def report(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    return line
