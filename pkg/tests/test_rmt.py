import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asmgue.errors import ConvergenceFailure, PreconditionViolated
from asmgue.rmt import (
    RealPattern,
    corners_eigenvalues,
    corners_flat,
    eigvalsh,
    flat_size,
    haar_unitary_batch,
    increments,
    orbital_corners_batch,
    orbital_corners_sample,
    row_slice,
    sample_gue,
    sample_gue_batch,
    sample_gue_corners,
    sample_gue_corners_batch,
    verify_characterization,
)
from asmgue.stats import ks_test, normal_cdf


def test_layout():
    assert flat_size(4) == 10
    assert [row_slice(k) for k in (1, 2, 3)] == [slice(0, 1), slice(1, 3), slice(3, 6)]


def test_corners_examples():
    p = corners_eigenvalues(np.diag([1.0, 2.0, 3.0]))
    assert [r.tolist() for r in p.rows] == [[1.0], [1.0, 2.0], [1.0, 2.0, 3.0]]
    p = corners_eigenvalues(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert p.rows[0].tolist() == [0.0]
    assert np.allclose(p.rows[1], [-1.0, 1.0], atol=1e-14)
    with pytest.raises(PreconditionViolated):
        corners_eigenvalues(np.array([[0.0, 1.0], [2.0, 0.0]]))


def test_eigensolver_against_lapack():
    rng = np.random.default_rng(0)
    for n in range(1, 13):
        h = sample_gue(n, rng)
        w = eigvalsh(h)
        assert np.max(np.abs(w - np.linalg.eigvalsh(h))) < 1e-9 * max(1.0, np.abs(h).max())
        assert np.all(np.diff(w) >= 0)


def test_eigensolver_degenerate_and_iteration_cap():
    assert np.allclose(eigvalsh(np.eye(6) * 2.5), 2.5)
    h = sample_gue(8, 1)
    with pytest.raises(ConvergenceFailure):
        eigvalsh(h, max_iter=0)


def test_trace_and_frobenius_identities():
    hs = sample_gue_batch(12, 200, seed=2)
    flat = corners_flat(hs)
    for k in range(1, 13):
        nu = flat[:, row_slice(k)]
        block = hs[:, :k, :k]
        assert np.max(np.abs(nu.sum(axis=1) - np.trace(block, axis1=1, axis2=2).real)) < 1e-8
        fro = np.sum(np.abs(block) ** 2, axis=(1, 2))
        assert np.max(np.abs((nu ** 2).sum(axis=1) - fro)) < 1e-8 * max(1.0, fro.max())


def test_characteristic_polynomial_brackets_small_k():
    hs = sample_gue_batch(3, 100, seed=3)
    for h, f in zip(hs, corners_flat(hs)):
        for k in (1, 2, 3):
            block = h[:k, :k]
            for x in f[row_slice(k)]:
                eps = 1e-7
                lo = np.linalg.det((x - eps) * np.eye(k) - block).real
                hi = np.linalg.det((x + eps) * np.eye(k) - block).real
                assert lo * hi <= 0 or min(abs(lo), abs(hi)) < 1e-12


def test_increment_identity_random_5x5():
    h = sample_gue(5, seed=4)
    p = corners_eigenvalues(h)
    inc = np.diff(p.row_sums(), prepend=0.0)
    assert np.max(np.abs(inc - np.diag(h).real)) < 1e-9


def test_gue_entries():
    hs = sample_gue_batch(1, 100_000, seed=5)
    x = hs[:, 0, 0]
    assert np.all(x.imag == 0)
    assert abs(x.real.mean()) < 3 / np.sqrt(1e5)
    assert abs(x.real.var() - 1) < 0.02
    hs = sample_gue_batch(4, 10_000, seed=6)
    assert np.array_equal(hs, np.conj(np.swapaxes(hs, 1, 2)))
    off = hs[:, 0, 1]
    assert abs(off.real.var() - 0.5) < 0.03 and abs(off.imag.var() - 0.5) < 0.03
    # E Tr H^2 = n^2
    tr2 = np.einsum("mij,mji->m", hs, hs).real
    assert abs(tr2.mean() - 16) < 3 * tr2.std() / np.sqrt(len(tr2))
    assert np.array_equal(sample_gue(3, 7), sample_gue(3, 7))


def test_corners_process():
    assert ks_test(sample_gue_corners_batch(1, 20_000, seed=8)[:, 0], normal_cdf).pvalue > 0.001
    flat = sample_gue_corners_batch(4, 100_000, seed=9)
    p = RealPattern.from_flat(flat[0])
    assert p.n == 4 and p.interlaces()
    worst = max(RealPattern.from_flat(f, 4).interlacing_violation() for f in flat[:2000])
    assert worst <= 1e-9
    # vectorised check over all samples
    for k in range(2, 5):
        lam, mu = flat[:, row_slice(k)], flat[:, row_slice(k - 1)]
        assert np.all(lam[:, :-1] - mu <= 1e-9) and np.all(mu - lam[:, 1:] <= 1e-9)
    inc = increments(flat, 4)
    M = len(inc)
    assert np.all(np.abs(inc.mean(axis=0)) < 3 / np.sqrt(M))
    assert np.all(np.abs(inc.var(axis=0) - 1) < 3 * np.sqrt(2 / M))
    c = np.corrcoef(inc.T)
    assert np.all(np.abs(c[np.triu_indices(4, 1)]) < 3 / np.sqrt(M))
    assert sample_gue_corners(3, 1).n == 3


def test_haar_unitary():
    u = haar_unitary_batch(4, 500, seed=10)
    eye = np.eye(4)
    assert np.allclose(u @ np.conj(np.swapaxes(u, 1, 2)), eye, atol=1e-12)
    # Haar: |u_11|^2 ~ Beta(1, n - 1), mean 1/n
    assert abs(np.mean(np.abs(u[:, 0, 0]) ** 2) - 0.25) < 0.03


def test_orbital_examples():
    p = orbital_corners_sample([2.0, 2.0, 2.0], seed=0)
    assert all(np.allclose(r, 2.0, atol=1e-12) for r in p.rows)
    flat = orbital_corners_batch(np.tile([0.0, 1.0], (100_000, 1)), seed=1)
    assert ks_test(flat[:, 0], lambda x: np.clip(x, 0, 1)).pvalue > 0.001
    lam = np.array([-1.5, 0.2, 0.3, 4.0])
    flat = orbital_corners_batch(np.tile(lam, (200, 1)), seed=2)
    assert np.max(np.abs(flat[:, row_slice(4)] - lam)) < 1e-9


def test_orbital_permutation_invariance():
    lam = np.array([0.0, 1.0, 3.0])
    a = orbital_corners_batch(np.tile(lam, (20_000, 1)), seed=3)
    b = orbital_corners_batch(np.tile(lam[[2, 0, 1]], (20_000, 1)), seed=4)
    for c in range(3):
        assert ks_test(a[:, c], b[:, c]).pvalue > 0.001


def test_characterization_positive_and_negative():
    flat = sample_gue_corners_batch(3, 20_000, seed=11)
    rep = verify_characterization(flat, 3, seed=12)
    assert rep.passed
    names = {c.name for c in rep.checks}
    assert {"increment_var_1", "increment_corr_1_3", "gibbs_u_1_1", "gibbs_u_2_2", "marginal_3_3"} <= names
    bad = verify_characterization(flat * np.sqrt(2), 3, seed=12)
    assert not bad.passed
    assert all(c.pvalue < 0.05 for c in bad.group("increment_var"))


def test_characterization_detects_broken_gibbs():
    # keep the top row and increments' law plausible but replace lower rows by the top row's midpoints
    flat = sample_gue_corners_batch(3, 20_000, seed=13).copy()
    top = flat[:, row_slice(3)]
    mid = (top[:, :-1] + top[:, 1:]) / 2
    flat[:, row_slice(2)] = mid
    rep = verify_characterization(flat, 3, seed=14)
    assert any(c.pvalue < rep.threshold for c in rep.group("gibbs"))


def test_characterization_shape_check():
    with pytest.raises(PreconditionViolated):
        verify_characterization(np.zeros((10, 5)), 3)


@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_property_interlacing(n, seed):
    p = sample_gue_corners(n, seed)
    assert p.interlaces()
    assert p.interlacing_violation() == 0.0 or p.interlacing_violation() < 1e-12
