import numpy as np
import pytest

from asmgue.core import HeightFunction, asm_to_height, max_height, min_height, validate_asm
from asmgue.enumerate import enumerate_asms
from asmgue.errors import BudgetExceeded, PreconditionViolated, SizeTooLarge
from asmgue.sample import (
    LANES,
    ChainState,
    _block,
    _checkerboard_sweeps,
    advance,
    cftp_heights,
    glauber_heights,
    glauber_step,
    sample_asms,
    sample_cftp,
    sample_cftp_batch,
    sample_direct,
    sample_direct_batch,
    sample_glauber,
    sample_glauber_batch,
    stream_key,
)
from asmgue.stats import chi_square_two_sample, chi_square_uniform, eta_array, psi_array


def _cell_counts(mats, n):
    table = enumerate_asms(n)
    index = {a.entries.tobytes(): i for i, a in enumerate(table)}
    return np.bincount([index[m.astype(np.int8).tobytes()] for m in mats], minlength=len(table))


def test_glauber_step_examples():
    s = ChainState.start(3, seed=0)
    up = glauber_step(s, (1, 1), True)
    diff = up.height.h - s.height.h
    assert diff[1, 1] == 2 and np.count_nonzero(diff) == 1
    assert glauber_step(s, (1, 1), False).height == s.height
    assert glauber_step(s, (1, 2), True).height == s.height
    assert glauber_step(s, (1, 2), False).height == s.height
    with pytest.raises(PreconditionViolated):
        glauber_step(s, (0, 1), True)


def test_glauber_step_monotone_on_comparable_pairs():
    rng = np.random.default_rng(0)
    pools = {n: [asm_to_height(a).h for a in enumerate_asms(n)] for n in range(2, 7)}
    checked = 0
    while checked < 100_000:
        n = int(rng.integers(2, 7))
        pool = pools[n]
        a, b = (pool[i] for i in rng.integers(len(pool), size=2))
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        s, t = ChainState(HeightFunction(lo), 0), ChainState(HeightFunction(hi), 0)
        for _ in range(10):
            site = tuple(int(x) for x in rng.integers(1, n, size=2))
            coin = bool(rng.integers(2))
            s, t = glauber_step(s, site, coin), glauber_step(t, site, coin)
            assert s.height <= t.height
            checked += 1


MASK = (1 << 64) - 1


def _coin_word(key, t, p, i, j, n):
    """Pure-Python SplitMix64 coin word, written out from the documented counter layout."""
    w = n + 1
    z = (int(key) + ((((t * 2 + p) * w + i) * w + j) & MASK) * 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def test_kernel_is_a_sequence_of_glauber_steps():
    n, key = 6, stream_key(5, 0)
    rng = np.random.default_rng(1)
    asms = enumerate_asms(n)
    for idx in rng.integers(len(asms), size=5):
        h0 = asm_to_height(asms[idx]).h
        blk = _block(h0)
        _checkerboard_sweeps(blk, key, 0, 2)
        for lane in (0, 17, 63):
            s = ChainState(HeightFunction(h0), int(key))
            for t in range(2):
                for p in range(2):
                    for i in range(1, n):
                        for j in range(1 + ((i + p) & 1), n, 2):
                            coin = bool((_coin_word(key, t, p, i, j, n) >> lane) & 1)
                            s = glauber_step(s, (i, j), coin)
            assert np.array_equal(s.height.h, blk[:, :, lane])


def test_sample_n1_n2():
    assert sample_cftp(1, seed=3).tolist() == [[1]]
    assert sample_glauber(1, seed=3, sweeps=1).tolist() == [[1]]
    counts = _cell_counts(sample_cftp_batch(2, 2000, seed=1), 2)
    assert chi_square_uniform(counts).pvalue > 0.001


def test_cftp_uniform_n3():
    counts = _cell_counts(sample_cftp_batch(3, 70_000, seed=11), 3)
    assert chi_square_uniform(counts).pvalue > 0.001


def test_glauber_uniform_n4():
    n = 4
    mats = sample_glauber_batch(n, 100_000, seed=12, sweeps=10 * n * n)
    assert chi_square_uniform(_cell_counts(mats, n)).pvalue > 0.001


def test_random_scan_uniform_n3():
    mats = sample_glauber_batch(3, 7000, seed=4, sweeps=40, scan="random")
    assert chi_square_uniform(_cell_counts(mats, 3)).pvalue > 0.001


def test_direct_sampler():
    counts = _cell_counts(sample_direct_batch(2, 4000, seed=2), 2)
    assert chi_square_uniform(counts).pvalue > 0.001
    counts = _cell_counts(sample_direct_batch(3, 7000, seed=2), 3)
    assert chi_square_uniform(counts).pvalue > 0.001
    assert sample_direct(3, 5) == sample_direct(3, 5)
    with pytest.raises(SizeTooLarge):
        sample_direct(6, 0)


def test_direct_vs_cftp_n3():
    a = _cell_counts(sample_direct_batch(3, 20_000, seed=8), 3)
    b = _cell_counts(sample_cftp_batch(3, 20_000, seed=9), 3)
    assert chi_square_two_sample(a, b).pvalue > 0.001


def test_every_sample_valid():
    for method, n in (("cftp", 7), ("glauber", 9), ("direct", 4)):
        for m in sample_asms(n, 300, seed=1, method=method):
            validate_asm(m)


def test_determinism_and_prefix_stability():
    a = sample_cftp_batch(8, 200, seed=42)
    b = sample_cftp_batch(8, 200, seed=42)
    c = sample_cftp_batch(8, 70, seed=42)
    assert np.array_equal(a, b) and np.array_equal(a[:70], c)
    assert not np.array_equal(a, sample_cftp_batch(8, 200, seed=43))
    g1 = sample_glauber_batch(8, 100, seed=7, sweeps=50)
    assert np.array_equal(g1, sample_glauber_batch(8, 100, seed=7, sweeps=50))
    assert np.array_equal(g1[:10], sample_glauber_batch(8, 10, seed=7, sweeps=50))


def test_jobs_do_not_change_output():
    a = sample_cftp_batch(6, 3 * LANES, seed=5, jobs=1)
    b = sample_cftp_batch(6, 3 * LANES, seed=5, jobs=2)
    assert np.array_equal(a, b)


def test_cftp_coalescence_and_replay():
    n, seed = 7, 21
    res = cftp_heights(n, LANES, seed)
    key = stream_key(seed, 0)
    T = int(res.start_sweeps.max())
    for start in (T, 2 * T):
        lo, hi = _block(min_height(n)), _block(max_height(n))
        _checkerboard_sweeps(lo, key, -start, 0)
        _checkerboard_sweeps(hi, key, -start, 0)
        assert np.array_equal(lo, hi)
        assert np.array_equal(lo.transpose(2, 0, 1), res.heights)


def test_cftp_budget():
    with pytest.raises(BudgetExceeded):
        cftp_heights(12, 10, seed=0, max_sweeps=2)


def test_chain_state_advance():
    s = ChainState.start(6, seed=3)
    one = advance(advance(s, 500), 700)
    two = advance(s, 1200)
    assert one.height == two.height and one.cursor == two.cursor == 1200
    ChainState.start(6, seed=3, start="max")


def test_glauber_start_and_errors():
    h = asm_to_height(validate_asm(np.eye(5, dtype=int)[::-1]))
    out = glauber_heights(5, 3, seed=0, sweeps=5, start=h)
    assert out.shape == (3, 6, 6)
    with pytest.raises(PreconditionViolated):
        glauber_heights(5, 3, seed=0, sweeps=0)
    with pytest.raises(PreconditionViolated):
        glauber_heights(5, 3, seed=0, start="middle")
    with pytest.raises(PreconditionViolated):
        sample_asms(5, 3, seed=0, method="metropolis")


def test_doubling_sweeps_n8():
    n, M = 8, 20_000
    a = psi_array(sample_glauber_batch(n, M, seed=31), 1).astype(float)
    b = psi_array(sample_glauber_batch(n, M, seed=32, sweeps=2 * 4 * n * n), 1).astype(float)
    se = np.sqrt(a.var() / M + b.var() / M)
    assert abs(a.mean() - b.mean()) < 2 * se


def test_dihedral_invariance_n16():
    n, M = 16, 4000
    a = sample_cftp_batch(n, M, seed=51)
    b = sample_cftp_batch(n, M, seed=52)[:, :, ::-1]
    ca = np.bincount(eta_array(a, 1)[:, 0].astype(int), minlength=n + 1)[1:]
    cb = np.bincount(eta_array(b, 1)[:, 0].astype(int), minlength=n + 1)[1:]
    keep = (ca + cb) >= 20
    assert chi_square_two_sample(ca[keep], cb[keep]).pvalue > 0.001
    t = sample_cftp_batch(n, M, seed=53).transpose(0, 2, 1)
    ct = np.bincount(eta_array(t, 1)[:, 0].astype(int), minlength=n + 1)[1:]
    keep = (ca + ct) >= 20
    assert chi_square_two_sample(ca[keep], ct[keep]).pvalue > 0.001
