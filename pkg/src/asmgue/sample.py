"""Uniform sampling of ASMs through their height functions.

The chain is single-site heat-bath on interior corner heights: a site whose
four neighbours share a value v moves to v + 1 or v - 1 according to a fair
coin, any other site is frozen. With a shared coin the update is monotone in
the pointwise order, so coupling from the past between the minimal and
maximal height functions yields exact samples.

Randomness is counter based. Every coin is one bit of SplitMix64 evaluated at
``key + counter * 0x9E3779B97F4A7C15``, where ``key`` is a 64-bit stream key
drawn from ``numpy.random.SeedSequence(seed, spawn_key=(block,))`` and the
counter encodes (time, parity, row, column). Chains are processed in blocks of
``LANES`` = 64; lane c of a block reads bit c of each coin word. Replaying a
time window therefore never re-draws anything, which is what CFTP needs, and
sample i of a run depends only on (seed, i).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numba as nb
import numpy as np

from .core import (
    AsmMatrix,
    HeightFunction,
    heights_to_matrices,
    max_height,
    min_height,
    validate_asm,
)
from .enumerate import asm_array, enumerate_asms
from .errors import BudgetExceeded, PreconditionViolated, SizeTooLarge

LANES = 64
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
EXACT_DEFAULT_MAX_SIZE = 64
DIRECT_MAX_SIZE = 5


def default_sweeps(n: int) -> int:
    """Glauber budget in checkerboard sweeps (about 4 n^4 single-site updates).

    Forward coupling of the extreme chains takes 0.7-2.6 n^2 sweeps for
    n = 8..64 (see scripts/coalescence_times.py); total variation distance
    is bounded by the probability of not having coupled.
    """
    return 4 * n * n


def default_max_sweeps(n: int) -> int:
    return 64 * n * n + 64


def stream_key(seed: int, block: int) -> np.uint64:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(block),))
    return ss.generate_state(1, dtype=np.uint64)[0]


def fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy % (1 << 63))


# ---------------------------------------------------------------------------
# kernels


@nb.njit(inline="always", cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def _checkerboard_sweeps(h, key, t0, t1):
    """Sweeps t0..t1-1 over a (n+1, n+1, LANES) block; each sweep updates the even then the odd sublattice."""
    n = h.shape[0] - 1
    lanes = h.shape[2]
    w = np.uint64(n + 1)
    for t in range(t0, t1):
        for p in range(2):
            base = np.uint64(t * 2 + p) * w
            for i in range(1, n):
                for j in range(1 + ((i + p) & 1), n, 2):
                    r = _mix64(key + ((base + np.uint64(i)) * w + np.uint64(j)) * GOLDEN)
                    for c in range(lanes):
                        a = h[i - 1, j, c]
                        b = h[i + 1, j, c]
                        d = h[i, j - 1, c]
                        e = h[i, j + 1, c]
                        lo = min(min(a, b), min(d, e))
                        hi = max(max(a, b), max(d, e))
                        if (r >> np.uint64(c)) & np.uint64(1):
                            h[i, j, c] = lo + 1
                        else:
                            h[i, j, c] = hi - 1


@nb.njit(cache=True)
def _random_scan(h, key, t0, t1):
    """Single-site updates at uniformly random interior sites for times t0..t1-1 on one (n+1, n+1) grid."""
    n = h.shape[0] - 1
    m = n - 1
    if m < 1:
        return
    mm = np.uint64(m * m)
    for t in range(t0, t1):
        r = _mix64(key + np.uint64(t) * GOLDEN)
        s = ((r >> np.uint64(32)) * mm) >> np.uint64(32)
        i = np.int64(s // np.uint64(m)) + 1
        j = np.int64(s % np.uint64(m)) + 1
        lo = min(min(h[i - 1, j], h[i + 1, j]), min(h[i, j - 1], h[i, j + 1]))
        hi = max(max(h[i - 1, j], h[i + 1, j]), max(h[i, j - 1], h[i, j + 1]))
        if r & np.uint64(1):
            h[i, j] = lo + 1
        else:
            h[i, j] = hi - 1


def _block(grid: np.ndarray) -> np.ndarray:
    return np.repeat(grid.astype(np.int16)[:, :, None], LANES, axis=2)


def _blocks(count: int) -> list[tuple[int, int]]:
    """(block index, lanes used) pairs covering ``count`` samples."""
    out = []
    for b in range((count + LANES - 1) // LANES):
        out.append((b, min(LANES, count - b * LANES)))
    return out


def _map_blocks(fn, args_list, jobs: int):
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*args_list)))


# ---------------------------------------------------------------------------
# single-site dynamics


@dataclass(frozen=True)
class ChainState:
    height: HeightFunction
    key: int
    cursor: int = 0

    @classmethod
    def start(cls, n: int, seed: int, start: str = "min") -> "ChainState":
        grid = min_height(n) if start == "min" else max_height(n)
        return cls(HeightFunction(grid), int(stream_key(seed, 0)))


def glauber_step(state: ChainState, site: tuple[int, int], coin: bool) -> ChainState:
    """Heat-bath update at one interior corner with an explicit coin (True = up)."""
    h = state.height.h
    n = state.height.n
    i, j = site
    if not (1 <= i < n and 1 <= j < n):
        raise PreconditionViolated(f"site {site} is not interior to the {n + 1}x{n + 1} grid")
    nb_ = (h[i - 1, j], h[i + 1, j], h[i, j - 1], h[i, j + 1])
    new = h.copy()
    new[i, j] = min(nb_) + 1 if coin else max(nb_) - 1
    return ChainState(HeightFunction(new), state.key, state.cursor + 1)


def advance(state: ChainState, updates: int) -> ChainState:
    """Apply ``updates`` random-site heat-bath steps read from the state's stream."""
    h = state.height.h.astype(np.int32)
    _random_scan(h, np.uint64(state.key), state.cursor, state.cursor + updates)
    return ChainState(HeightFunction(h), state.key, state.cursor + updates)


# ---------------------------------------------------------------------------
# coupling from the past


@dataclass
class CftpResult:
    heights: np.ndarray
    start_sweeps: np.ndarray = field(repr=False)

    @property
    def matrices(self) -> np.ndarray:
        return heights_to_matrices(self.heights)


def _cftp_block(n, seed, block, used, max_sweeps):
    key = stream_key(seed, block)
    lo0, hi0 = _block(min_height(n)), _block(max_height(n))
    coal = np.zeros(LANES, dtype=np.int64)
    if n < 2:
        return lo0[:, :, :used].transpose(2, 0, 1).copy(), coal[:used]
    t = max(1, (n * n) // 4)
    while True:
        lo, hi = lo0.copy(), hi0.copy()
        _checkerboard_sweeps(lo, key, -t, 0)
        _checkerboard_sweeps(hi, key, -t, 0)
        same = np.all(lo == hi, axis=(0, 1))
        coal[(coal == 0) & same] = t
        if same[:used].all():
            return lo[:, :, :used].transpose(2, 0, 1).copy(), coal[:used]
        if t >= max_sweeps:
            raise BudgetExceeded(
                f"CFTP at n={n} did not coalesce within {max_sweeps} sweeps (seed {seed}, block {block})"
            )
        t = min(2 * t, max_sweeps)


def cftp_heights(n: int, count: int, seed: int, max_sweeps: Optional[int] = None, jobs: int = 1) -> CftpResult:
    """Exact uniform height functions by monotone coupling from the past.

    Start times double from n^2/4 sweeps until every used lane coalesces;
    coins are indexed by absolute (negative) time so restarts replay them.
    """
    if n < 1:
        raise PreconditionViolated("n must be positive")
    if count < 1:
        return CftpResult(np.zeros((0, n + 1, n + 1), np.int16), np.zeros(0, np.int64))
    max_sweeps = default_max_sweeps(n) if max_sweeps is None else max_sweeps
    parts = _map_blocks(_cftp_block, [(n, seed, b, u, max_sweeps) for b, u in _blocks(count)], jobs)
    return CftpResult(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def sample_cftp_batch(n: int, count: int, seed: int, max_sweeps: Optional[int] = None, jobs: int = 1) -> np.ndarray:
    return cftp_heights(n, count, seed, max_sweeps, jobs).matrices


def sample_cftp(n: int, seed: int, max_sweeps: Optional[int] = None) -> AsmMatrix:
    return validate_asm(sample_cftp_batch(n, 1, seed, max_sweeps)[0])


# ---------------------------------------------------------------------------
# forward Glauber dynamics


def _start_grid(n, start):
    if isinstance(start, HeightFunction):
        if start.n != n:
            raise PreconditionViolated(f"start height has size {start.n}, expected {n}")
        return start.h
    if start == "min":
        return min_height(n)
    if start == "max":
        return max_height(n)
    raise PreconditionViolated(f"unknown start {start!r}")


def _glauber_block(n, seed, block, used, sweeps, start):
    h = _block(_start_grid(n, start))
    _checkerboard_sweeps(h, stream_key(seed, block), 0, sweeps)
    return h[:, :, :used].transpose(2, 0, 1).copy()


def _glauber_random_one(n, seed, index, sweeps, start):
    h = _start_grid(n, start).astype(np.int32)
    _random_scan(h, stream_key(seed, index), 0, sweeps * n * n)
    return h.astype(np.int16)


def glauber_heights(
    n: int,
    count: int,
    seed: int,
    sweeps: Optional[int] = None,
    start="min",
    scan: str = "checkerboard",
    jobs: int = 1,
) -> np.ndarray:
    """Run ``count`` independent chains and return their final heights.

    ``scan="checkerboard"`` performs ``sweeps`` passes over both sublattices;
    ``scan="random"`` performs ``sweeps * n**2`` updates at random sites.
    """
    sweeps = default_sweeps(n) if sweeps is None else int(sweeps)
    if sweeps < 1:
        raise PreconditionViolated("sweeps must be at least 1")
    if count < 1:
        return np.zeros((0, n + 1, n + 1), np.int16)
    if scan == "checkerboard":
        args = [(n, seed, b, u, sweeps, start) for b, u in _blocks(count)]
        return np.concatenate(_map_blocks(_glauber_block, args, jobs))
    if scan == "random":
        args = [(n, seed, i, sweeps, start) for i in range(count)]
        return np.stack(_map_blocks(_glauber_random_one, args, jobs))
    raise PreconditionViolated(f"unknown scan {scan!r}")


def sample_glauber_batch(n, count, seed, sweeps=None, start="min", scan="checkerboard", jobs=1) -> np.ndarray:
    return heights_to_matrices(glauber_heights(n, count, seed, sweeps, start, scan, jobs))


def sample_glauber(n: int, seed: int, sweeps: Optional[int] = None, start="min", scan="checkerboard") -> AsmMatrix:
    return validate_asm(sample_glauber_batch(n, 1, seed, sweeps, start, scan)[0])


def forward_coupling_sweeps(n: int, count: int, seed: int, max_sweeps: Optional[int] = None, step: Optional[int] = None) -> np.ndarray:
    """Sweeps until the chains started at the minimum and maximum agree, per lane."""
    max_sweeps = default_max_sweeps(n) if max_sweeps is None else max_sweeps
    step = max(1, n * n // 16) if step is None else step
    out = []
    for b, used in _blocks(count):
        key = stream_key(seed, b)
        lo, hi = _block(min_height(n)), _block(max_height(n))
        done = np.zeros(LANES, dtype=np.int64)
        t = 0
        while not done[:used].all():
            if t >= max_sweeps:
                raise BudgetExceeded(f"forward coupling at n={n} exceeded {max_sweeps} sweeps")
            _checkerboard_sweeps(lo, key, t, t + step)
            _checkerboard_sweeps(hi, key, t, t + step)
            t += step
            same = np.all(lo == hi, axis=(0, 1))
            done[(done == 0) & same] = t
        out.append(done[:used])
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# exhaustive sampler for tiny sizes

_DIRECT_CACHE: dict[int, np.ndarray] = {}


def _all_asms(n: int) -> np.ndarray:
    if n not in _DIRECT_CACHE:
        _DIRECT_CACHE[n] = asm_array(enumerate_asms(n))
    return _DIRECT_CACHE[n]


def sample_direct_batch(n: int, count: int, seed: int) -> np.ndarray:
    if n > DIRECT_MAX_SIZE:
        raise SizeTooLarge(f"direct sampling is limited to n <= {DIRECT_MAX_SIZE}")
    table = _all_asms(n)
    idx = np.random.default_rng(seed).integers(len(table), size=count)
    return table[idx].copy()


def sample_direct(n: int, seed: int) -> AsmMatrix:
    return validate_asm(sample_direct_batch(n, 1, seed)[0])


# ---------------------------------------------------------------------------


METHODS = ("cftp", "glauber", "direct")


def sample_asms(n: int, count: int, seed: int, method: str = "cftp", sweeps=None, jobs: int = 1, **kw) -> np.ndarray:
    """Array of shape (count, n, n) of sampled ASM matrices."""
    if method == "cftp":
        return sample_cftp_batch(n, count, seed, kw.get("max_sweeps"), jobs)
    if method == "glauber":
        return sample_glauber_batch(n, count, seed, sweeps, kw.get("start", "min"), kw.get("scan", "checkerboard"), jobs)
    if method == "direct":
        return sample_direct_batch(n, count, seed)
    raise PreconditionViolated(f"unknown method {method!r}; expected one of {METHODS}")
