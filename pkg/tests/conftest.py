"""Independent brute-force oracles shared by the test modules.

Nothing here imports the enumeration module; these are deliberately naive.
"""

import itertools
from functools import lru_cache

import numpy as np
import pytest


def _row_words(n):
    """Rows over {-1,0,1} whose nonzeros alternate +,-,...,+."""
    for row in itertools.product((-1, 0, 1), repeat=n):
        nz = [v for v in row if v]
        if nz and nz[0] == 1 and all(a == -b for a, b in zip(nz, nz[1:])) and nz[-1] == 1:
            yield row


@lru_cache(maxsize=None)
def brute_asms(n):
    """All n x n ASMs by row-wise search over sign-alternating rows, checking column partial sums."""
    rows = list(_row_words(n))
    out = []

    def rec(prefix, partial):
        if len(prefix) == n:
            if all(p == 1 for p in partial):
                out.append(tuple(prefix))
            return
        for r in rows:
            nxt = tuple(p + v for p, v in zip(partial, r))
            if all(0 <= p <= 1 for p in nxt):
                rec(prefix + [r], nxt)

    rec([], (0,) * n)
    return tuple(out)


def brute_is_asm(m):
    m = np.asarray(m)
    for line in list(m) + list(m.T):
        nz = [v for v in line if v]
        if not nz or nz[0] != 1 or nz[-1] != 1 or any(a == b for a, b in zip(nz, nz[1:])):
            return False
        if any(v not in (-1, 0, 1) for v in line):
            return False
    return True


def brute_triangles(lam):
    """All half-strict patterns with top row lam, built from all strict tuples in range."""
    lam = tuple(lam)
    if len(lam) == 1:
        return [(lam,)]
    out = []
    for mu in itertools.combinations(range(lam[0], lam[-1] + 1), len(lam) - 1):
        if all(lam[i] <= mu[i] <= lam[i + 1] for i in range(len(mu))):
            out.extend(t + (lam,) for t in brute_triangles(mu))
    return out


def brute_chains(A, B):
    """Diagonals (mu^1_1, ..., mu^m_m) of actual half-strict patterns whose sub-diagonal is pinned to A.

    The top row is (L, L+1, ..., A_m, B) with L far enough below A_1 that the
    left part of the pattern never obstructs; the admissible chains are read
    off the enumerated patterns rather than from any formula.
    """
    A = tuple(A)
    m = len(A)
    L = min(A + (B,)) - 2 * m - 2
    lam = tuple(range(L, L + m - 1)) + (A[-1], B) if m >= 1 else (B,)
    out = set()
    for t in brute_triangles(lam):
        if all(t[i + 1][i] == A[i] for i in range(m)):
            out.add(tuple(t[i][i] for i in range(m)))
    return out


@pytest.fixture(scope="session")
def fig1():
    from asmgue.core import FIG1_MATRIX

    return np.array(FIG1_MATRIX)


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
