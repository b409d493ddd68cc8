"""Boundary statistics of ASMs, the scaling map and goodness-of-fit tests."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import special
from scipy.stats import chi2

from .core import AsmMatrix, asm_to_triangle
from .errors import ExpectedTooSmall, InternalMismatch, PreconditionViolated, TooFewSamples

# ---------------------------------------------------------------------------
# boundary coordinates


@dataclass(frozen=True)
class BoundaryCoordinates:
    """eta[j-1][i-1] is the column of the i-th 1 in row j, or None when row j has fewer than i ones."""

    n: int
    k: int
    eta: tuple[tuple[Optional[int], ...], ...]

    @property
    def n_absent(self) -> int:
        return sum(v is None for row in self.eta for v in row)


@dataclass(frozen=True)
class ScaledPattern:
    n: int
    k: int
    rows: tuple[tuple[float, ...], ...]
    n_absent: int


def _entries(a) -> np.ndarray:
    return a.entries if isinstance(a, AsmMatrix) else np.asarray(a)


def _check_depth(n, k):
    if not 1 <= k <= n:
        raise PreconditionViolated(f"depth k={k} must lie in 1..{n}")


def extract_eta(a, k: int) -> BoundaryCoordinates:
    e = _entries(a)
    n = e.shape[0]
    _check_depth(n, k)
    rows = []
    for j in range(1, k + 1):
        ones = [int(c) + 1 for c in np.flatnonzero(e[j - 1] == 1)]
        rows.append(tuple(ones[i] if i < len(ones) else None for i in range(j)))
    return BoundaryCoordinates(n, k, tuple(rows))


def count_minus_ones(a, k: int) -> tuple[int, bool]:
    """Total number of -1 entries in the first k rows, and whether row j has j - 1 of them for every j <= k."""
    e = _entries(a)
    _check_depth(e.shape[0], k)
    per_row = (e[:k] == -1).sum(axis=1)
    return int(per_row.sum()), bool(np.all(per_row == np.arange(k)))


def psi(a, k: int) -> int:
    """Signed column sum of row k, checked against the difference of triangle row sums."""
    e = _entries(a)
    n = e.shape[0]
    _check_depth(n, k)
    direct = int(np.dot(np.arange(1, n + 1), e[k - 1]))
    t = asm_to_triangle(a if isinstance(a, AsmMatrix) else AsmMatrix(e))
    via_triangle = sum(t.rows[k - 1]) - (sum(t.rows[k - 2]) if k > 1 else 0)
    if direct != via_triangle:
        raise InternalMismatch(f"psi_{k}: row formula gives {direct}, triangle gives {via_triangle}")
    return direct


def scale(x, n: int):
    """sqrt(8 / (3 n)) * (x - n / 2); applied to eta and to psi alike."""
    return np.sqrt(8.0 / (3.0 * n)) * (np.asarray(x, dtype=float) - n / 2.0)


def scale_pattern(b: BoundaryCoordinates) -> ScaledPattern:
    rows = tuple(tuple(float(scale(v, b.n)) for v in row if v is not None) for row in b.eta)
    return ScaledPattern(b.n, b.k, rows, b.n_absent)


# --- vectorised versions over stacks of matrices (M, n, n)


def eta_array(mats: np.ndarray, k: int) -> np.ndarray:
    """(M, k(k+1)/2) float array of eta values, rows laid out j = 1..k; NaN marks absent entries."""
    mats = np.asarray(mats)
    M, n, _ = mats.shape
    _check_depth(n, k)
    out = np.full((M, k * (k + 1) // 2), np.nan)
    cols = np.arange(1, n + 1)
    pos = 0
    for j in range(1, k + 1):
        ones = mats[:, j - 1, :] == 1
        rank = np.cumsum(ones, axis=1)
        for i in range(1, j + 1):
            hit = ones & (rank == i)
            present = hit.any(axis=1)
            out[present, pos] = cols[hit[present].argmax(axis=1)]
            pos += 1
    return out


def psi_array(mats: np.ndarray, k: int) -> np.ndarray:
    mats = np.asarray(mats)
    n = mats.shape[1]
    _check_depth(n, k)
    cols = np.arange(1, n + 1)
    direct = mats[:, k - 1, :].astype(np.int64) @ cols
    partial = np.cumsum(mats[:, :k, :].astype(np.int64), axis=1)
    sums = partial @ cols
    via_triangle = sums[:, k - 1] - (sums[:, k - 2] if k > 1 else 0)
    if not np.array_equal(direct, via_triangle):
        raise InternalMismatch(f"psi_{k} formulas disagree on {int((direct != via_triangle).sum())} samples")
    return direct


def maximal_array(mats: np.ndarray, k: int) -> np.ndarray:
    mats = np.asarray(mats)
    _check_depth(mats.shape[1], k)
    per_row = (mats[:, :k, :] == -1).sum(axis=2)
    return np.all(per_row == np.arange(k), axis=1)


def coordinate_names(k: int, prefix: str = "eta") -> list[str]:
    return [f"{prefix}_{i}_{j}" for j in range(1, k + 1) for i in range(1, j + 1)]


def boundary_table(mats: np.ndarray, k: int) -> dict[str, np.ndarray]:
    n = np.asarray(mats).shape[1]
    eta = eta_array(mats, k)
    cols = {name: eta[:, c] for c, name in enumerate(coordinate_names(k))}
    for j in range(1, k + 1):
        cols[f"psi_{j}"] = psi_array(mats, j)
    scaled = scale(eta, n)
    cols.update({name: scaled[:, c] for c, name in enumerate(coordinate_names(k, "scaled"))})
    return cols


def write_csv(path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*(columns[c] for c in names)):
            w.writerow(["" if (isinstance(v, float) and math.isnan(v)) else _fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if not float(v).is_integer() else str(int(v))
    return str(v)


# ---------------------------------------------------------------------------
# goodness of fit


@dataclass(frozen=True)
class GofResult:
    statistic: float
    pvalue: float
    dof: Optional[int] = None


def kolmogorov_sf(x: float, terms: int = 100) -> float:
    """P(K > x) for the Kolmogorov limit distribution.

    For x >= 1 the alternating series 2 sum (-1)^(k-1) exp(-2 k^2 x^2) is
    truncated at ``terms``; below 1 the theta-function form of the CDF
    converges faster and is used instead.
    """
    if x <= 0:
        return 1.0
    if x < 1.0:
        s = sum(math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8 * x * x)) for k in range(1, terms + 1))
        return max(0.0, 1.0 - math.sqrt(2 * math.pi) / x * s)
    s = sum((-1) ** (k - 1) * math.exp(-2 * k * k * x * x) for k in range(1, terms + 1))
    return min(1.0, max(0.0, 2.0 * s))


def normal_cdf(x):
    return special.ndtr(x)


def ks_test(sample: Sequence[float], reference: Union[Callable, Sequence[float]]) -> GofResult:
    """Two-sided Kolmogorov-Smirnov test with asymptotic p-value.

    ``reference`` is either a CDF (one-sample test) or a second sample.
    Tied observations enter the empirical CDF as a single jump; statistics
    are evaluated on both sides of every jump, so ties need no tie-breaking.
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 8:
        raise TooFewSamples(f"need at least 8 observations, got {n}")
    if callable(reference):
        f = np.asarray(reference(x), dtype=float)
        i = np.arange(1, n + 1)
        d = max(np.max(i / n - f), np.max(f - (i - 1) / n))
        return GofResult(float(d), kolmogorov_sf(math.sqrt(n) * d))
    y = np.sort(np.asarray(reference, dtype=float))
    m = y.size
    if m < 8:
        raise TooFewSamples(f"need at least 8 reference observations, got {m}")
    grid = np.union1d(x, y)
    fx = np.searchsorted(x, grid, side="right") / n
    fy = np.searchsorted(y, grid, side="right") / m
    d = float(np.max(np.abs(fx - fy)))
    return GofResult(d, kolmogorov_sf(math.sqrt(n * m / (n + m)) * d))


def chi_square_uniform(counts: Sequence[float], expected: Optional[Sequence[float]] = None) -> GofResult:
    """Pearson goodness of fit against ``expected`` counts (uniform when omitted)."""
    obs = np.asarray(counts, dtype=float)
    total = obs.sum()
    if expected is None:
        exp = np.full(obs.shape, total / obs.size)
    else:
        exp = np.asarray(expected, dtype=float)
        exp = exp * (total / exp.sum())
    if np.any(exp < 5):
        raise ExpectedTooSmall(f"smallest expected count is {exp.min():.3g} < 5")
    dof = obs.size - 1
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return GofResult(stat, float(chi2.sf(stat, dof)) if dof > 0 else 1.0, dof)


def chi_square_two_sample(c1: Sequence[float], c2: Sequence[float]) -> GofResult:
    """Homogeneity test for two count vectors over the same cells."""
    table = np.vstack([np.asarray(c1, float), np.asarray(c2, float)])
    table = table[:, table.sum(axis=0) > 0]
    exp = table.sum(axis=1, keepdims=True) * table.sum(axis=0, keepdims=True) / table.sum()
    if np.any(exp < 5):
        raise ExpectedTooSmall(f"smallest expected count is {exp.min():.3g} < 5")
    dof = table.shape[1] - 1
    stat = float(np.sum((table - exp) ** 2 / exp))
    return GofResult(stat, float(chi2.sf(stat, dof)) if dof > 0 else 1.0, dof)


def binned_counts(values, support) -> np.ndarray:
    index = {v: i for i, v in enumerate(support)}
    out = np.zeros(len(support), dtype=np.int64)
    for v in values:
        out[index[v]] += 1
    return out


# ---------------------------------------------------------------------------
# histograms


def text_histogram(values, bins: int = 20, width: int = 50) -> str:
    v = np.asarray(values, float)
    v = v[np.isfinite(v)]
    counts, edges = np.histogram(v, bins=bins)
    top = max(1, counts.max())
    lines = []
    for c, lo, hi in zip(counts, edges, edges[1:]):
        lines.append(f"[{lo:9.4f}, {hi:9.4f}) {c:7d} {'#' * int(round(width * c / top))}")
    return "\n".join(lines)


def svg_histogram(values, bins: int = 30, title: str = "", density_fn: Optional[Callable] = None) -> str:
    v = np.asarray(values, float)
    v = v[np.isfinite(v)]
    counts, edges = np.histogram(v, bins=bins, density=True)
    W, H, pad = 480, 300, 30
    x0, x1 = edges[0], edges[-1]
    ymax = counts.max() if counts.size else 1.0
    if density_fn is not None:
        xs = np.linspace(x0, x1, 200)
        ys = density_fn(xs)
        ymax = max(ymax, float(np.max(ys)))
    ymax = ymax or 1.0

    def sx(x):
        return pad + (x - x0) / (x1 - x0 or 1) * (W - 2 * pad)

    def sy(y):
        return H - pad - y / ymax * (H - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>']
    for c, lo, hi in zip(counts, edges, edges[1:]):
        parts.append(f'<rect x="{sx(lo):.1f}" y="{sy(c):.1f}" width="{sx(hi) - sx(lo):.1f}" '
                     f'height="{sy(0) - sy(c):.1f}" fill="#8ab" stroke="#345"/>')
    if density_fn is not None:
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#c33" stroke-width="1.5"/>')
    parts.append(f'<line x1="{pad}" y1="{sy(0)}" x2="{W - pad}" y2="{sy(0)}" stroke="black"/>')
    parts.append("</svg>")
    return "\n".join(parts)
