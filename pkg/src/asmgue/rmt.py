"""GUE, GUE corners, orbital measures, and a statistical check of the
Gibbs-plus-Gaussian-increments characterisation of GUE corners.

Normalisation: density proportional to exp(-Tr X^2 / 2), so diagonal entries
are N(0, 1) and off-diagonal real and imaginary parts are N(0, 1/2).

Corner eigenvalues come from an in-house solver: Householder reduction of
the Hermitian block to a real symmetric tridiagonal matrix, then the
implicitly shifted QL iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numba as nb
import numpy as np
from scipy.stats import chi2, norm

from .errors import ConvergenceFailure, PreconditionViolated
from .stats import ks_test, normal_cdf

MAX_QL_ITERATIONS = 50


def flat_size(n: int) -> int:
    return n * (n + 1) // 2


def row_slice(k: int) -> slice:
    """Position of row k (1-based) in the flattened layout nu^1, nu^2, ..., nu^n."""
    return slice(k * (k - 1) // 2, k * (k + 1) // 2)


@dataclass(frozen=True, eq=False)
class RealPattern:
    rows: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return len(self.rows)

    @classmethod
    def from_flat(cls, flat, n: Optional[int] = None) -> "RealPattern":
        flat = np.asarray(flat, float)
        if n is None:
            n = int((math.isqrt(8 * flat.size + 1) - 1) // 2)
        if flat.size != flat_size(n):
            raise PreconditionViolated(f"flat pattern of length {flat.size} does not have rank {n}")
        return cls(tuple(flat[row_slice(k)].copy() for k in range(1, n + 1)))

    def flat(self) -> np.ndarray:
        return np.concatenate(self.rows)

    def row_sums(self) -> np.ndarray:
        return np.array([r.sum() for r in self.rows])

    def interlacing_violation(self) -> float:
        """Largest amount by which weak monotonicity or interlacing fails (0 when it holds)."""
        worst = 0.0
        for k, r in enumerate(self.rows):
            if r.size > 1:
                worst = max(worst, float(np.max(r[:-1] - r[1:])))
            if k:
                lam = self.rows[k]
                mu = self.rows[k - 1]
                worst = max(worst, float(np.max(lam[:-1] - mu)), float(np.max(mu - lam[1:])))
        return max(worst, 0.0)

    def interlaces(self, tol: float = 1e-9) -> bool:
        return self.interlacing_violation() <= tol


# ---------------------------------------------------------------------------
# eigensolver


@nb.njit(cache=True)
def _tridiagonalize(a):
    """Householder reduction of a Hermitian matrix; returns (diagonal, |off-diagonal|)."""
    n = a.shape[0]
    a = a.copy()
    for k in range(n - 2):
        norm2 = 0.0
        for i in range(k + 1, n):
            norm2 += a[i, k].real ** 2 + a[i, k].imag ** 2
        xnorm = math.sqrt(norm2)
        if xnorm == 0.0:
            continue
        x0 = a[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * xnorm
        v = np.empty(n - k - 1, dtype=np.complex128)
        for i in range(k + 1, n):
            v[i - k - 1] = a[i, k]
        v[0] -= alpha
        vn = 0.0
        for i in range(v.size):
            vn += v[i].real ** 2 + v[i].imag ** 2
        vn = math.sqrt(vn)
        if vn == 0.0:
            continue
        for i in range(v.size):
            v[i] /= vn
        # a <- (I - 2 v v^H) a (I - 2 v v^H) on the trailing block and the k-th row/column
        for col in range(k, n):
            s = 0.0j
            for i in range(v.size):
                s += v[i].conjugate() * a[k + 1 + i, col]
            for i in range(v.size):
                a[k + 1 + i, col] -= 2.0 * v[i] * s
        for row in range(k, n):
            s = 0.0j
            for i in range(v.size):
                s += a[row, k + 1 + i] * v[i]
            for i in range(v.size):
                a[row, k + 1 + i] -= 2.0 * s * v[i].conjugate()
    d = np.empty(n)
    e = np.zeros(n)
    for i in range(n):
        d[i] = a[i, i].real
    for i in range(n - 1):
        e[i] = abs(a[i + 1, i])
    return d, e


@nb.njit(cache=True)
def _tql(d, e, max_iter):
    """Eigenvalues of the symmetric tridiagonal (d, e) by implicit QL; e[i] couples i and i + 1.

    Returns (sorted eigenvalues, ok flag).
    """
    n = d.size
    d = d.copy()
    e = e.copy()
    eps = 2.220446049250313e-16
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            if it == max_iter:
                return np.sort(d), False
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(d), True


@nb.njit(cache=True)
def _eigvalsh(a, max_iter):
    d, e = _tridiagonalize(a)
    return _tql(d, e, max_iter)


@nb.njit(cache=True)
def _corners_batch(hs, max_iter):
    m, n, _ = hs.shape
    out = np.empty((m, n * (n + 1) // 2))
    ok = True
    for s in range(m):
        pos = 0
        for k in range(1, n + 1):
            w, good = _eigvalsh(hs[s, :k, :k].copy(), max_iter)
            ok = ok and good
            out[s, pos:pos + k] = w
            pos += k
    return out, ok


def eigvalsh(h: np.ndarray, max_iter: int = MAX_QL_ITERATIONS) -> np.ndarray:
    h = np.asarray(h, dtype=np.complex128)
    w, ok = _eigvalsh(h, max_iter)
    if not ok:
        raise ConvergenceFailure(f"QL iteration exceeded {max_iter} steps for one eigenvalue")
    return w


def corners_flat(hs: np.ndarray, max_iter: int = MAX_QL_ITERATIONS) -> np.ndarray:
    """Corner eigenvalues of a stack (M, n, n) of Hermitian matrices, flattened per sample."""
    hs = np.ascontiguousarray(hs, dtype=np.complex128)
    out, ok = _corners_batch(hs, max_iter)
    if not ok:
        raise ConvergenceFailure(f"QL iteration exceeded {max_iter} steps for one eigenvalue")
    return out


def check_hermitian(h: np.ndarray, tol: float = 0.0) -> None:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise PreconditionViolated("matrix must be square")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > tol:
        raise PreconditionViolated("matrix is not Hermitian")


def corners_eigenvalues(h: np.ndarray) -> RealPattern:
    check_hermitian(h, tol=1e-12 * max(1.0, float(np.abs(h).max(initial=0.0))))
    n = np.asarray(h).shape[0]
    return RealPattern.from_flat(corners_flat(np.asarray(h)[None])[0], n)


# ---------------------------------------------------------------------------
# samplers


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_gue_batch(n: int, count: int, seed=None) -> np.ndarray:
    if n < 1:
        raise PreconditionViolated("rank must be positive")
    rng = _rng(seed)
    z = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    return (z + np.conj(np.swapaxes(z, 1, 2))) / 2.0


def sample_gue(n: int, seed=None) -> np.ndarray:
    return sample_gue_batch(n, 1, seed)[0]


def sample_gue_corners_batch(n: int, count: int, seed=None) -> np.ndarray:
    return corners_flat(sample_gue_batch(n, count, seed))


def sample_gue_corners(n: int, seed=None) -> RealPattern:
    return RealPattern.from_flat(sample_gue_corners_batch(n, 1, seed)[0], n)


def haar_unitary_batch(n: int, count: int, seed=None) -> np.ndarray:
    """Haar unitaries: QR of a complex Ginibre matrix with the phases of diag(R) divided out."""
    rng = _rng(seed)
    z = (rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def orbital_corners_batch(lams: np.ndarray, seed=None) -> np.ndarray:
    """Corners of u diag(lam) u* with Haar u, one draw per row of ``lams``."""
    lams = np.atleast_2d(np.asarray(lams, float))
    count, n = lams.shape
    u = haar_unitary_batch(n, count, seed)
    m = (u * lams[:, None, :]) @ np.conj(np.swapaxes(u, 1, 2))
    m = (m + np.conj(np.swapaxes(m, 1, 2))) / 2.0
    return corners_flat(m)


def orbital_corners_sample(lam, seed=None) -> RealPattern:
    lam = np.sort(np.asarray(lam, float))
    if not np.all(np.isfinite(lam)):
        raise PreconditionViolated("eigenvalues must be finite")
    return RealPattern.from_flat(orbital_corners_batch(lam[None], seed)[0], lam.size)


# ---------------------------------------------------------------------------
# characterisation check


def increments(flat: np.ndarray, n: int) -> np.ndarray:
    """|nu^k| - |nu^(k-1)| for k = 1..n, per sample."""
    sums = np.stack([flat[:, row_slice(k)].sum(axis=1) for k in range(1, n + 1)], axis=1)
    return np.diff(sums, axis=1, prepend=0.0)


def relative_positions(flat: np.ndarray, n: int, gap: float = 1e-9) -> dict[str, np.ndarray]:
    """(nu^j_i - nu^(j+1)_i) / (nu^(j+1)_(i+1) - nu^(j+1)_i) for j < n; NaN where the gap is below ``gap``."""
    out = {}
    for j in range(1, n):
        lo_row = flat[:, row_slice(j)]
        up_row = flat[:, row_slice(j + 1)]
        for i in range(j):
            width = up_row[:, i + 1] - up_row[:, i]
            u = np.where(width > gap, (lo_row[:, i] - up_row[:, i]) / np.where(width > gap, width, 1.0), np.nan)
            out[f"u_{i + 1}_{j}"] = u
    return out


@dataclass
class CheckResult:
    name: str
    statistic: float
    pvalue: float

    def as_dict(self, alpha: float) -> dict:
        return {"name": self.name, "statistic": self.statistic, "pvalue": self.pvalue, "passed": self.pvalue >= alpha}


@dataclass
class CharacterizationReport:
    n: int
    samples: int
    alpha: float
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def threshold(self) -> float:
        """Per-check level after Bonferroni correction."""
        return self.alpha / max(1, len(self.checks))

    @property
    def passed(self) -> bool:
        return all(c.pvalue >= self.threshold for c in self.checks)

    def get(self, name: str) -> CheckResult:
        return next(c for c in self.checks if c.name == name)

    def group(self, prefix: str) -> list[CheckResult]:
        return [c for c in self.checks if c.name.startswith(prefix)]

    def as_dict(self) -> dict:
        return {
            "rank": self.n, "samples": self.samples, "alpha": self.alpha,
            "per_check_threshold": self.threshold, "passed": self.passed,
            "checks": [c.as_dict(self.threshold) for c in self.checks],
        }


def _two_sided(p_lower: float) -> float:
    return float(min(1.0, 2.0 * min(p_lower, 1.0 - p_lower)))


def verify_characterization(
    flat: np.ndarray,
    n: int,
    seed=None,
    alpha: float = 0.05,
    reference_count: Optional[int] = None,
    gibbs: bool = True,
    gap: float = 1e-9,
) -> CharacterizationReport:
    """Test a source of rank-n patterns against the GUE-corners characterisation.

    Checks: increments have mean 0 (z test), variance 1 (chi-square on the
    sum of squares), N(0, 1) law (KS) and zero pairwise correlation; lower
    rows relative to the top row match draws from the orbital measure with
    the same top row (two-sample KS, which tests the Gibbs property); each
    coordinate matches an independent GUE-corners reference (two-sample KS).
    """
    flat = np.asarray(flat, float)
    if flat.ndim != 2 or flat.shape[1] != flat_size(n):
        raise PreconditionViolated(f"expected an (M, {flat_size(n)}) array")
    rng = _rng(seed)
    M = flat.shape[0]
    rep = CharacterizationReport(n, M, alpha)
    inc = increments(flat, n)
    for k in range(n):
        x = inc[:, k]
        z = x.mean() * math.sqrt(M)
        rep.checks.append(CheckResult(f"increment_mean_{k + 1}", float(z), float(2 * norm.sf(abs(z)))))
        ss = float(np.sum(x * x))
        rep.checks.append(CheckResult(f"increment_var_{k + 1}", ss / M, _two_sided(float(chi2.cdf(ss, M)))))
        ks = ks_test(x, normal_cdf)
        rep.checks.append(CheckResult(f"increment_ks_{k + 1}", ks.statistic, ks.pvalue))
    for k in range(n):
        for l in range(k + 1, n):
            r = float(np.corrcoef(inc[:, k], inc[:, l])[0, 1])
            z = r * math.sqrt(M)
            rep.checks.append(CheckResult(f"increment_corr_{k + 1}_{l + 1}", r, float(2 * norm.sf(abs(z)))))
    if gibbs and n >= 2:
        top = flat[:, row_slice(n)]
        ok = np.all(np.diff(top, axis=1) > gap, axis=1)
        ref = orbital_corners_batch(top[ok], rng)
        src_u = relative_positions(flat[ok], n, gap)
        ref_u = relative_positions(ref, n, gap)
        for name in src_u:
            a = src_u[name][np.isfinite(src_u[name])]
            b = ref_u[name][np.isfinite(ref_u[name])]
            ks = ks_test(a, b)
            rep.checks.append(CheckResult(f"gibbs_{name}", ks.statistic, ks.pvalue))
    ref = sample_gue_corners_batch(n, reference_count or M, rng)
    for k in range(1, n + 1):
        for i in range(k):
            c = row_slice(k).start + i
            ks = ks_test(flat[:, c], ref[:, c])
            rep.checks.append(CheckResult(f"marginal_{i + 1}_{k}", ks.statistic, ks.pvalue))
    return rep
