import pytest

# criterion id -> (status, detail); filled by tests/test_acceptance.py
CRITERIA = {}


def record(cid, ok, detail):
    CRITERIA[cid] = ("PASS" if ok else "FAIL", detail)
    print(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(CRITERIA, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        status, detail = CRITERIA[cid]
        terminalreporter.write_line(f"criterion {cid}: {status}  {detail}")


@pytest.fixture
def criteria():
    return record
