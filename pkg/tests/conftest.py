import pytest

from algodist import kernels


def _backends():
    out = [pytest.param(kernels.np_backend, id="numpy")]
    if kernels.nb_backend is not None:
        out.append(pytest.param(kernels.nb_backend, id="numba"))
    return out


@pytest.fixture(params=_backends())
def backend(request):
    return request.param


def tm_oracle(table, blank, steps):
    """Dictionary-tape simulator written independently of the kernels."""
    tape = {}
    head, state = 0, 1
    visited = {0}
    for _ in range(steps):
        sym = tape.get(head, blank)
        write, direction, nxt = table.entry(state, sym)
        tape[head] = write
        head += 1 if direction == "R" else -1
        state = nxt
        visited.add(head)
    lo, hi = min(visited), max(visited)
    return "".join(str(tape.get(x, blank)) for x in range(lo, hi + 1))


def ca_wide_oracle(rule_code, background, steps):
    """Wide array (4t+1 cells on each side of the seed) with no cone logic."""
    pad = 4 * steps + 1
    row = [background] * (2 * pad + 1)
    row[pad] = 1 - background
    for _ in range(steps):
        new = []
        for x in range(len(row)):
            l2 = row[x - 2] if x >= 2 else row[0]
            l1 = row[x - 1] if x >= 1 else row[0]
            r1 = row[x + 1] if x + 1 < len(row) else row[-1]
            new.append((rule_code >> (8 * l2 + 4 * l1 + 2 * row[x] + r1)) & 1)
        row = new
    return "".join(map(str, row[pad - steps: pad + 2 * steps + 1]))


def tag_oracle(productions, init, steps):
    table = dict(zip(("00", "01", "10", "11"), productions))
    s = init
    for _ in range(steps):
        if len(s) < 2:
            break
        s = s[2:] + table[s[:2]]
    return s


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed at session end."""

    def check(label, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
