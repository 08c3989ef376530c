"""Return-distribution analysis: weighted price, normalized log-returns, PDFs,
kurtosis, avalanche statistics and q-Gaussian fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DegenerateSeriesError, InputError

DEFAULT_BIN_WIDTH = 0.2
Q_GRID = np.round(np.arange(1.0, 2.0 + 1e-9, 0.05), 10)
Q_BOUNDS = (1.0, 2.5)
LOG_BETA_BOUNDS = (-12.0, 12.0)
# below this |q - 1| the q-logarithm is replaced by its Gaussian limit
_Q_EPS = 1e-7


def weighted_average_price(p1, p2, q1_0: float, q2_0: float) -> np.ndarray:
    """Portfolio-weighted price with weights fixed by the initial endowments."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise InputError(f"price series lengths differ: {p1.shape} vs {p2.shape}")
    total = q1_0 + q2_0
    if total <= 0:
        raise InputError("initial endowments must sum to a positive quantity")
    return p1 * (q1_0 / total) + p2 * (q2_0 / total)


@dataclass(frozen=True)
class ReturnsSeries:
    raw: np.ndarray
    normalized: np.ndarray
    r_av: float
    r_stdev: float


def normalized_returns(prices) -> ReturnsSeries:
    """Log-returns standardized by their own mean and population standard deviation."""
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 1 or prices.size < 3:
        raise DegenerateSeriesError("need at least 3 prices to normalize returns")
    if np.any(prices <= 0):
        raise InputError("prices must be strictly positive")
    raw = np.diff(np.log(prices))
    r_av = float(raw.mean())
    r_stdev = float(raw.std())
    if r_stdev == 0.0 or r_stdev < 1e-14 * max(abs(r_av), 1.0):
        raise DegenerateSeriesError("returns have zero standard deviation")
    normalized = (raw - r_av) / r_stdev
    # re-centre and rescale once more so the invariants hold to round-off
    normalized = normalized - normalized.mean()
    normalized = normalized / normalized.std()
    return ReturnsSeries(raw, normalized, r_av, r_stdev)


def empirical_pdf(samples, bin_width: float = DEFAULT_BIN_WIDTH) -> tuple[np.ndarray, np.ndarray]:
    """Histogram density on bins of ``bin_width`` centred on multiples of it.

    The range is symmetric about zero and just wide enough for every sample;
    densities integrate to one.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if samples.size == 0:
        raise InputError("empirical_pdf needs at least one sample")
    reach = float(np.max(np.abs(samples)))
    m = max(0, math.ceil(reach / bin_width - 0.5))
    n_bins = 2 * m + 1
    edges = np.linspace(-(m + 0.5) * bin_width, (m + 0.5) * bin_width, n_bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    centers = np.arange(-m, m + 1) * bin_width
    widths = np.diff(edges)
    density = counts / (samples.size * widths)
    return centers, density


def excess_kurtosis(samples) -> float:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 4:
        raise DegenerateSeriesError("excess kurtosis needs at least 4 samples")
    d = x - x.mean()
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        raise DegenerateSeriesError("zero variance")
    m4 = float(np.mean(d ** 4))
    return m4 / (m2 * m2) - 3.0


@dataclass(frozen=True)
class QGaussianFit:
    q: float
    beta_fit: float
    amp: float
    residual: float
    converged: bool = True
    n_bins: int = 0


def qgaussian_log(x, q: float, beta: float) -> np.ndarray:
    """log of (1 - (1-q) beta x^2)^(1/(1-q)) for q >= 1, without the amplitude."""
    z = beta * np.square(np.asarray(x, dtype=float))
    if abs(q - 1.0) < _Q_EPS:
        return -z
    return -np.log1p((q - 1.0) * z) / (q - 1.0)


def qgaussian(x, q: float, beta: float, amp: float) -> np.ndarray:
    return amp * np.exp(qgaussian_log(x, q, beta))


def qgaussian_norm(q: float, beta: float) -> float:
    """Amplitude that makes the q-Gaussian a probability density (1 <= q < 3)."""
    if not 1.0 <= q < 3.0:
        raise ValueError("normalization defined here for 1 <= q < 3")
    if abs(q - 1.0) < _Q_EPS:
        c_q = math.sqrt(math.pi)
    else:
        c_q = (math.sqrt(math.pi) * math.exp(special.gammaln((3 - q) / (2 * (q - 1)))
                                             - special.gammaln(1 / (q - 1)))
               / math.sqrt(q - 1))
    return math.sqrt(beta) / c_q


def _profile(x, logy, w, q, log_beta):
    """Weighted residual sum of squares with the log-amplitude solved in closed form."""
    shape = qgaussian_log(x, q, math.exp(log_beta))
    log_amp = float(np.sum(w * (logy - shape)) / np.sum(w))
    resid = logy - shape - log_amp
    return float(np.sum(w * resid * resid)), log_amp


def _prepare(centers, densities, weighted):
    x = np.asarray(centers, dtype=float)
    y = np.asarray(densities, dtype=float)
    mask = y > 0
    x, y = x[mask], y[mask]
    # a bin's log-density has variance ~ 1/count, and count is proportional
    # to density on a uniform grid
    w = y / y.max() if weighted else np.ones_like(y)
    return x, np.log(y), w


def _best_log_beta(x, logy, w, q):
    res = optimize.minimize_scalar(lambda lb: _profile(x, logy, w, q, lb)[0],
                                   bounds=LOG_BETA_BOUNDS, method="bounded",
                                   options={"xatol": 1e-9})
    return float(res.fun), float(res.x), bool(res.success)


def fit_qgaussian(centers, densities, weighted: bool = True, max_iter: int = 2000) -> QGaussianFit:
    """Least-squares fit of ``A (1 - (1-q) beta x^2)^(1/(1-q))`` to log-densities.

    Only bins with positive density enter. With ``weighted`` (the default)
    each squared log residual is weighted by the bin's density, i.e. by the
    inverse variance of a log-count; unweighted fits over-trust the sparse
    outermost bins and drift towards large q. For every q on a 0.05 grid over
    [1, 2] the width is optimized with the amplitude profiled out; the best
    grid point seeds a bounded joint refinement of (q, log beta) on [1, 2.5].
    """
    x, logy, w = _prepare(centers, densities, weighted)
    if x.size < 8:
        raise InputError(f"need at least 8 non-empty bins to fit, got {x.size}")

    best = (math.inf, 1.0, 0.0)
    for q in Q_GRID:
        ssr, lb, _ = _best_log_beta(x, logy, w, q)
        if ssr < best[0]:
            best = (ssr, float(q), lb)

    _, q0, lb0 = best
    refine = optimize.minimize(
        lambda v: _profile(x, logy, w, v[0], v[1])[0],
        x0=np.array([q0, lb0]),
        method="L-BFGS-B",
        bounds=[Q_BOUNDS, LOG_BETA_BOUNDS],
        options={"maxiter": max_iter},
    )
    q, log_beta = (float(v) for v in refine.x)
    ssr, log_amp = _profile(x, logy, w, q, log_beta)
    converged = bool(refine.success)
    if ssr > best[0]:
        # refinement wandered off; keep the grid optimum
        _, q, log_beta = best
        ssr, log_amp = _profile(x, logy, w, q, log_beta)
        converged = False
    return QGaussianFit(q=q, beta_fit=math.exp(log_beta), amp=math.exp(log_amp),
                        residual=ssr, converged=converged, n_bins=int(x.size))


def fit_gaussian_log(centers, densities, weighted: bool = True) -> QGaussianFit:
    """The same objective with q pinned at 1, for nested-model comparisons."""
    x, logy, w = _prepare(centers, densities, weighted)
    _, log_beta, ok = _best_log_beta(x, logy, w, 1.0)
    ssr, log_amp = _profile(x, logy, w, 1.0, log_beta)
    return QGaussianFit(q=1.0, beta_fit=math.exp(log_beta), amp=math.exp(log_amp),
                        residual=ssr, converged=ok, n_bins=int(x.size))


@dataclass(frozen=True)
class AvalancheStats:
    edges: np.ndarray
    counts: np.ndarray
    max: int
    min: int
    mean: float
    decade_span: float

    def to_dict(self) -> dict:
        return {"max": self.max, "min": self.min, "mean": self.mean,
                "decade_span": self.decade_span,
                "bin_edges": self.edges.tolist(), "counts": self.counts.tolist()}


def avalanche_statistics(sizes, bins_per_decade: int = 5) -> AvalancheStats:
    """Log-binned histogram of avalanche sizes plus summary scalars."""
    s = np.asarray(sizes, dtype=np.int64).ravel()
    if s.size == 0:
        raise InputError("avalanche_statistics needs at least one size")
    if np.any(s < 1):
        raise InputError("avalanche sizes must be >= 1")
    lo, hi = int(s.min()), int(s.max())
    decades = math.log10(hi) - math.log10(lo)
    n_bins = max(1, math.ceil(decades * bins_per_decade))
    edges = np.logspace(math.log10(lo), math.log10(hi), n_bins + 1)
    edges[0], edges[-1] = lo, hi
    counts, _ = np.histogram(s, bins=edges) if hi > lo else (np.array([s.size]), None)
    return AvalancheStats(edges=edges, counts=counts, max=hi, min=lo,
                          mean=float(s.mean()), decade_span=decades)
