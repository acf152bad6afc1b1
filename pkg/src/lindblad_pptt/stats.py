"""Empirical PPTT distributions: summaries, bootstrap intervals, ECDFs,
three-parameter Gamma/Lognormal maximum likelihood, and scaling fits.

Censored draws (no PPT crossing before the horizon) are excluded from
moments and fits and enter ECDFs as ``+inf``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import optimize, special

THRESHOLD_GAP = 1e-4
THRESHOLD_GRID = 200
MIN_FIT_SAMPLES = 50


def _split(samples):
    """``(uncensored values, censored count, all values with inf for censored)``."""
    if hasattr(samples, "samples"):
        x, c = samples.x, samples.censored
    else:
        x = np.asarray(samples, dtype=float).ravel()
        c = ~np.isfinite(x)
    full = np.where(c, np.inf, x)
    return x[~c], int(c.sum()), full


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    median: float
    minimum: float
    stdev: float
    n: int
    censored_count: int

    def to_dict(self) -> dict:
        return dict(asdict(self), stdev_convention="sample (n-1)")


def summarize(samples) -> SummaryStats:
    """Mean, median, minimum and sample standard deviation of the uncensored times."""
    x, n_cens, _ = _split(samples)
    if x.size == 0:
        raise ValueError("no uncensored samples to summarize")
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    return SummaryStats(float(np.mean(x)), float(np.median(x)), float(np.min(x)), sd, int(x.size), n_cens)


_STATISTICS: dict = {
    "mean": lambda a: np.mean(a, axis=-1),
    "median": lambda a: np.median(a, axis=-1),
    "min": lambda a: np.min(a, axis=-1),
    "stdev": lambda a: np.std(a, axis=-1, ddof=1),
}


def bootstrap_ci(samples, statistic: Union[str, Callable] = "mean", B: int = 1000,
                 level: float = 0.95, seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval; ``statistic`` maps ``(..., n)`` arrays to ``(...)``."""
    if B < 100:
        raise ValueError("need at least 100 bootstrap resamples")
    x, _, _ = _split(samples)
    if x.size == 0:
        raise ValueError("no uncensored samples")
    stat = _STATISTICS[statistic] if isinstance(statistic, str) else statistic
    rng = np.random.default_rng(seed)
    reps = stat(x[rng.integers(0, x.size, size=(B, x.size))])
    a = (1 - level) / 2
    lo, hi = np.quantile(reps, [a, 1 - a])
    return float(lo), float(hi)


def bootstrap_diff_ci(a, b, statistic: Union[str, Callable] = "median", B: int = 1000,
                      level: float = 0.95, seed: int = 0) -> tuple[float, float]:
    """Percentile interval for ``stat(a) - stat(b)`` with independent resampling."""
    xa, _, _ = _split(a)
    xb, _, _ = _split(b)
    stat = _STATISTICS[statistic] if isinstance(statistic, str) else statistic
    rng = np.random.default_rng(seed)
    ra = stat(xa[rng.integers(0, xa.size, size=(B, xa.size))])
    rb = stat(xb[rng.integers(0, xb.size, size=(B, xb.size))])
    q = (1 - level) / 2
    lo, hi = np.quantile(ra - rb, [q, 1 - q])
    return float(lo), float(hi)


class Ecdf:
    """Right-continuous empirical CDF; ``+inf`` entries never count as crossed."""

    def __init__(self, samples):
        _, _, full = _split(samples)
        if full.size == 0:
            raise ValueError("empty sample")
        self.values = np.sort(full)
        self.n = full.size

    @property
    def breakpoints(self) -> np.ndarray:
        v = self.values
        return np.unique(v[np.isfinite(v)])

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.n


class ProductEcdf:
    """Pointwise product of ECDFs: the distribution of the maximum of independent draws."""

    def __init__(self, parts: Sequence[Ecdf]):
        if not parts:
            raise ValueError("need at least one ECDF")
        self.parts = list(parts)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([p.breakpoints for p in self.parts]))

    def __call__(self, x):
        out = np.ones_like(np.asarray(x, dtype=float))
        for p in self.parts:
            out = out * p(x)
        return out


def ecdf(samples) -> Ecdf:
    return Ecdf(samples)


def histogram(samples, bins=50) -> tuple[np.ndarray, np.ndarray]:
    """Density histogram of the uncensored times: ``(density, edges)``, unit area."""
    x, _, _ = _split(samples)
    return np.histogram(x, bins=bins, density=True)


def ks_distance(a, b) -> float:
    """Sup-norm distance between two step CDFs (``Ecdf``, ``ProductEcdf`` or raw samples)."""
    a = a if callable(a) else Ecdf(a)
    b = b if callable(b) else Ecdf(b)
    pts = np.union1d(a.breakpoints, b.breakpoints)
    if pts.size == 0:
        return 0.0
    left = np.nextafter(pts, -np.inf)
    d = max(np.max(np.abs(a(pts) - b(pts))), np.max(np.abs(a(left) - b(left))))
    # mass at +inf (censoring) shows up as a gap above every finite point
    return float(d)


# --- three-parameter fits ----------------------------------------------------------

@dataclass(frozen=True)
class FitParams3PGamma:
    shape: float
    scale: float
    threshold: float
    log_likelihood: float

    @property
    def mean(self) -> float:
        return self.threshold + self.shape * self.scale

    @property
    def stdev(self) -> float:
        return self.scale * math.sqrt(self.shape)

    def to_dict(self) -> dict:
        return dict(asdict(self), implied_mean=self.mean, implied_stdev=self.stdev)


@dataclass(frozen=True)
class FitParams3PLognormal:
    location: float
    scale: float
    threshold: float
    log_likelihood: float

    @property
    def mean(self) -> float:
        return self.threshold + math.exp(self.location + 0.5 * self.scale**2)

    @property
    def stdev(self) -> float:
        s2 = self.scale**2
        return math.exp(self.location + 0.5 * s2) * math.sqrt(math.expm1(s2))

    def to_dict(self) -> dict:
        return dict(asdict(self), implied_mean=self.mean, implied_stdev=self.stdev)


def _fit_input(samples) -> np.ndarray:
    x, _, _ = _split(samples)
    if x.size < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} uncensored samples, got {x.size}")
    if np.ptp(x) <= 1e-12 * max(1.0, abs(x[0])):
        raise ValueError("degenerate sample: all values equal")
    return x


def _gamma_profile(x: np.ndarray, mu: float) -> tuple[float, float, float]:
    """``(loglik, shape, scale)`` maximized over shape and scale at fixed threshold."""
    y = x - mu
    ly = np.log(y)
    m = y.mean()
    s = math.log(m) - ly.mean()
    # log(b) - digamma(b) = s is decreasing in b; bracket generously
    f = lambda b: math.log(b) - special.digamma(b) - s
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    lo = hi / 2 if hi > 1 else 1e-8
    while f(lo) < 0:
        lo /= 2
    b = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
    sc = m / b
    n = x.size
    ll = (b - 1) * ly.sum() - n * b - n * b * math.log(sc) - n * special.gammaln(b)
    return float(ll), b, sc


def _lognormal_profile(x: np.ndarray, mu: float) -> tuple[float, float, float]:
    ly = np.log(x - mu)
    nu = ly.mean()
    sg = ly.std()
    n = x.size
    ll = -ly.sum() - n * math.log(sg) - 0.5 * n * math.log(2 * math.pi) - 0.5 * n
    return float(ll), nu, sg


def _threshold_search(x: np.ndarray, profile) -> float:
    """Grid profile of the threshold below ``min - gap``, then bounded refinement."""
    top = x.min() - THRESHOLD_GAP
    lo = max(0.0, x.min() - 10 * x.std())
    if top <= lo:
        return max(0.0, top)
    grid = np.linspace(lo, top, THRESHOLD_GRID)
    ll = np.array([profile(x, m)[0] for m in grid])
    i = int(np.argmax(ll))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if b - a <= 0:
        return float(grid[i])
    res = optimize.minimize_scalar(lambda m: -profile(x, m)[0], bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-10 * max(1.0, abs(top))})
    return float(res.x) if -res.fun >= ll[i] else float(grid[i])


def fit_gamma3(samples) -> FitParams3PGamma:
    """Maximum likelihood fit of a Gamma law shifted by a threshold ``mu``."""
    x = _fit_input(samples)
    mu = _threshold_search(x, _gamma_profile)
    ll, b, sc = _gamma_profile(x, mu)
    return FitParams3PGamma(b, sc, mu, ll)


def fit_lognormal3(samples) -> FitParams3PLognormal:
    x = _fit_input(samples)
    mu = _threshold_search(x, _lognormal_profile)
    ll, nu, sg = _lognormal_profile(x, mu)
    return FitParams3PLognormal(nu, sg, mu, ll)


# --- scaling laws ---------------------------------------------------------------

def _points(points) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if p.shape[0] < 1:
        raise ValueError("need at least one point")
    return p[:, 0], p[:, 1]


def fit_log_scaling(points) -> float:
    """Least-squares ``theta`` in ``value = log2(theta D)``."""
    d, v = _points(points)
    return float(2.0 ** np.mean(v - np.log2(d)))


def fit_inverse_scaling(points) -> float:
    """Least-squares ``theta`` in ``sigma = theta / D``."""
    d, s = _points(points)
    return float(np.sum(s / d) / np.sum(1.0 / d**2))


def fit_power_law(ds, ts, exponent: float = 6.0) -> dict:
    """Prefactor of ``T = theta D^exponent`` (least squares in log space) and free log-log slope."""
    ds, ts = np.asarray(ds, dtype=float), np.asarray(ts, dtype=float)
    lt, ld = np.log(ts), np.log(ds)
    theta = float(np.exp(np.mean(lt - exponent * ld)))
    slope = float(np.polyfit(ld, lt, 1)[0]) if ds.size > 1 else float("nan")
    return {"theta1": theta, "exponent": exponent, "loglog_slope": slope}


def fit_report(samples, B: int = 1000, seed: int = 0) -> dict:
    """JSON-ready ``{stats, bootstrap_cis, gamma3, lognormal3}`` for one sample set."""
    out = {"stats": summarize(samples).to_dict(), "bootstrap_cis": {}}
    x, _, _ = _split(samples)
    for name in ("mean", "median", "stdev"):
        if x.size > 1:
            out["bootstrap_cis"][name] = list(bootstrap_ci(x, name, B, 0.95, seed))
    for key, fn in (("gamma3", fit_gamma3), ("lognormal3", fit_lognormal3)):
        try:
            out[key] = fn(x).to_dict()
        except ValueError as exc:
            out[key] = {"error": str(exc)}
    return out
