"""Exact enumeration and counting of monotone triangles and ASMs.

All counts are Python integers; nothing here touches floating point.
"""

from __future__ import annotations

from collections import defaultdict
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .core import AsmMatrix, MonotoneTriangle, is_strict, triangle_to_asm
from .errors import PreconditionViolated, SizeTooLarge

MAX_ENUMERATION_SIZE = 6


def _check_row(lam: Sequence[int]) -> tuple[int, ...]:
    lam = tuple(int(x) for x in lam)
    if not lam:
        raise PreconditionViolated("row must be non-empty")
    if not is_strict(lam):
        raise PreconditionViolated(f"row {lam} is not strictly increasing")
    return lam


def interlacing_rows(lam: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Strictly increasing rows of length len(lam) - 1 interlacing ``lam``, in lexicographic order."""
    k = len(lam)

    def extend(prefix, i):
        if i == k - 1:
            yield tuple(prefix)
            return
        lo = lam[i] if not prefix else max(lam[i], prefix[-1] + 1)
        for v in range(lo, lam[i + 1] + 1):
            prefix.append(v)
            yield from extend(prefix, i + 1)
            prefix.pop()

    yield from extend([], 0)


def count_extensions(lam: Sequence[int]) -> int:
    """Number of strict rows mu with mu interlacing lam."""
    lam = _check_row(lam)
    ways = {None: 1}
    for i in range(len(lam) - 1):
        nxt: dict = defaultdict(int)
        for prev, w in ways.items():
            lo = lam[i] if prev is None else max(lam[i], prev + 1)
            for v in range(lo, lam[i + 1] + 1):
                nxt[v] += w
        ways = nxt
    return sum(ways.values())


@lru_cache(maxsize=None)
def _count_canonical(lam: tuple[int, ...]) -> int:
    if len(lam) == 1:
        return 1
    total = 0
    for mu in interlacing_rows(lam):
        total += _count_canonical(tuple(x - mu[0] for x in mu))
    return total


def count_patterns(lam: Sequence[int]) -> int:
    """Number of monotone triangles whose top row is ``lam``.

    Memoised on the translate ``lam - lam[0]``; counts are translation invariant.
    """
    lam = _check_row(lam)
    return _count_canonical(tuple(x - lam[0] for x in lam))


def enumerate_triangles(lam: Sequence[int]) -> Iterator[MonotoneTriangle]:
    lam = _check_row(lam)

    def below(row):
        if len(row) == 1:
            yield [row]
            return
        for mu in interlacing_rows(row):
            for rest in below(mu):
                yield rest + [row]

    for rows in below(lam):
        yield MonotoneTriangle(tuple(rows))


def enumerate_asms(n: int, max_size: int = MAX_ENUMERATION_SIZE) -> list[AsmMatrix]:
    if n < 1:
        raise PreconditionViolated("n must be positive")
    if n > max_size:
        raise SizeTooLarge(f"enumeration of size {n} exceeds the limit {max_size}")
    return [triangle_to_asm(t) for t in enumerate_triangles(range(1, n + 1))]


def row_weights(top: Sequence[int], level: int) -> dict[tuple[int, ...], int]:
    """Map each row at ``level`` to the number of interlacing chains from ``top`` down to it."""
    top = _check_row(top)
    if not 1 <= level <= len(top):
        raise PreconditionViolated(f"level must lie in 1..{len(top)}")
    weights = {top: 1}
    for _ in range(len(top) - level):
        nxt: dict = defaultdict(int)
        for row, w in weights.items():
            for mu in interlacing_rows(row):
                nxt[mu] += w
        weights = dict(nxt)
    return weights


def bottom_law(lam: Sequence[int]) -> dict[int, int]:
    """Counts of triangles with top row ``lam`` keyed by their single bottom entry."""
    return {row[0]: w for row, w in sorted(row_weights(lam, 1).items())}


def refined_count(n: int, k: int, max_size: int = 10) -> int:
    """Number of ASMs of size n whose first row has its 1 in column k."""
    if not 1 <= k <= n:
        raise PreconditionViolated(f"column {k} outside 1..{n}")
    if n > max_size:
        raise SizeTooLarge(f"refined count of size {n} exceeds the limit {max_size}")
    return bottom_law(range(1, n + 1)).get(k, 0)


def count_strict_triangles(lam: Sequence[int]) -> int:
    """Triangles below ``lam`` in which every pair of consecutive rows interlaces strictly."""
    lam = _check_row(lam)
    if len(lam) == 1:
        return 1
    total = 0
    for mu in interlacing_rows(lam):
        if all(lam[i] < mu[i] < lam[i + 1] for i in range(len(mu))):
            total += count_strict_triangles(mu)
    return total


def count_maximal_minus_ones(n: int, k: int) -> int:
    """Number of ASMs of size n whose first k rows carry j - 1 entries -1 in row j.

    Row j of an ASM has j - 1 entries -1 exactly when rows j - 1 and j of the
    triangle interlace strictly, so this sums strict sub-triangles below each
    level-k row weighted by its number of chains from the top.
    """
    if not 1 <= k <= n:
        raise PreconditionViolated(f"k={k} outside 1..{n}")
    return sum(w * count_strict_triangles(row) for row, w in row_weights(range(1, n + 1), k).items())


def asm_array(asms: list[AsmMatrix]) -> np.ndarray:
    return np.stack([a.entries for a in asms]) if asms else np.zeros((0, 0, 0), dtype=np.int8)
