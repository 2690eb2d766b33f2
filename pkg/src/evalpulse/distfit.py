"""Maximum-likelihood fits of heavy-tailed candidates to like/dislike counts.

Four continuous families are supported on the support ``[xmin, inf)``:
power law, log-normal, truncated power law (power law with exponential
cutoff) and exponential.  All densities are normalized on that support, so
log-likelihoods of different families are directly comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import mpmath
import numpy as np
from scipy import optimize, special, stats

__all__ = [
    "Family",
    "FitError",
    "DistFit",
    "LLRResult",
    "DistFitReport",
    "BinnedPDF",
    "fit_distribution",
    "compare_fits",
    "ks_distance",
    "best_fit",
    "exponential_binned_pdf",
]

SIGNIFICANCE = 0.05

# Exponent range for the truncated power law.  The lower bound keeps the
# family from collapsing onto the exponential (a = 0) so that exponential
# samples can be told apart from it.
TPL_EXPONENT_BOUNDS = (1.0, 20.0)
TPL_LOG_RATE_BOUNDS = (math.log(1e-12), math.log(1e3))


class Family(str, Enum):
    POWER_LAW = "power_law"
    LOGNORMAL = "lognormal"
    TRUNCATED_POWER_LAW = "truncated_power_law"
    EXPONENTIAL = "exponential"


FAMILY_ORDER = (
    Family.POWER_LAW,
    Family.LOGNORMAL,
    Family.TRUNCATED_POWER_LAW,
    Family.EXPONENTIAL,
)


class FitError(ValueError):
    """Raised when a family cannot be fitted to the given samples."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


def _as_samples(samples, xmin=None, min_n=1):
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < min_n:
        raise FitError(f"need at least {min_n} samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise FitError("samples must be finite")
    if np.any(x <= 0):
        raise FitError("samples must be positive")
    if xmin is not None and np.any(x < xmin):
        raise FitError(f"all samples must be >= xmin={xmin}; smallest is {x.min()}")
    return x


def _fsum(values):
    # Correctly rounded, so the result does not depend on summation order.
    return math.fsum(np.asarray(values, dtype=float).tolist())


# --------------------------------------------------------------------------
# Densities and CDFs conditioned on x >= xmin
# --------------------------------------------------------------------------


def _log_upper_gamma(s, y):
    """ln Gamma(s, y) for any real s and y > 0."""
    return float(mpmath.log(mpmath.gammainc(s, y)))


def _tpl_log_norm(a, lam, xmin):
    # integral_xmin^inf x^-a e^(-lam x) dx = lam^(a-1) Gamma(1-a, lam xmin)
    return (a - 1.0) * math.log(lam) + _log_upper_gamma(1.0 - a, lam * xmin)


def _logpdf(family, params, xmin, x):
    x = np.asarray(x, dtype=float)
    if family is Family.LOGNORMAL:
        mu, sigma = params["mu"], params["sigma"]
        lx = np.log(x)
        log_surv = stats.norm.logsf((math.log(xmin) - mu) / sigma)
        return (
            -lx
            - math.log(sigma)
            - 0.5 * math.log(2 * math.pi)
            - (lx - mu) ** 2 / (2 * sigma**2)
            - log_surv
        )
    if family is Family.POWER_LAW:
        a = params["alpha"]
        return math.log(a - 1.0) - math.log(xmin) - a * np.log(x / xmin)
    if family is Family.EXPONENTIAL:
        lam = params["lambda"]
        return math.log(lam) - lam * (x - xmin)
    if family is Family.TRUNCATED_POWER_LAW:
        a, lam = params["alpha"], params["lambda"]
        return -a * np.log(x) - lam * x - _tpl_log_norm(a, lam, xmin)
    raise ValueError(f"unknown family {family!r}")


def _cdf(family, params, xmin, x):
    x = np.asarray(x, dtype=float)
    if family is Family.LOGNORMAL:
        mu, sigma = params["mu"], params["sigma"]
        z = (np.log(x) - mu) / sigma
        z0 = (math.log(xmin) - mu) / sigma
        return -np.expm1(stats.norm.logsf(z) - stats.norm.logsf(z0))
    if family is Family.POWER_LAW:
        a = params["alpha"]
        return -np.expm1((1.0 - a) * np.log(x / xmin))
    if family is Family.EXPONENTIAL:
        return -np.expm1(-params["lambda"] * (x - xmin))
    if family is Family.TRUNCATED_POWER_LAW:
        a, lam = params["alpha"], params["lambda"]
        base = _log_upper_gamma(1.0 - a, lam * xmin)
        flat = x.ravel()
        uniq, inverse = np.unique(flat, return_inverse=True)
        tail = np.array([_log_upper_gamma(1.0 - a, lam * u) - base for u in uniq])
        return (-np.expm1(tail))[inverse].reshape(x.shape)
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class DistFit:
    """A fitted distribution on ``[xmin, inf)``.

    ``params`` keys: lognormal ``mu``/``sigma``, power law ``alpha``,
    truncated power law ``alpha``/``lambda``, exponential ``lambda``.
    """

    family: Family
    params: dict
    xmin: float
    loglik: float
    n: int

    def logpdf(self, x):
        return _logpdf(self.family, self.params, self.xmin, x)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        return np.clip(_cdf(self.family, self.params, self.xmin, x), 0.0, 1.0)

    def to_dict(self):
        return {
            "family": self.family.value,
            "params": dict(self.params),
            "xmin": self.xmin,
            "loglik": self.loglik,
            "n": self.n,
        }


# --------------------------------------------------------------------------
# Fitting
# --------------------------------------------------------------------------


def _fit_tpl(x, xmin):
    n = x.size
    mean_log = _fsum(np.log(x)) / n
    mean_x = _fsum(x) / n
    trace = []

    def objective(theta):
        a, log_lam = theta
        lam = math.exp(log_lam)
        value = a * mean_log + lam * mean_x + _tpl_log_norm(a, lam, xmin)
        trace.append((float(a), lam, value))
        return value

    denom = mean_log - math.log(xmin)
    a0 = 1.0 + 1.0 / denom if denom > 0 else TPL_EXPONENT_BOUNDS[1]
    a0 = min(max(a0, TPL_EXPONENT_BOUNDS[0] + 1e-3), TPL_EXPONENT_BOUNDS[1])
    t0 = min(max(-math.log(mean_x), TPL_LOG_RATE_BOUNDS[0]), TPL_LOG_RATE_BOUNDS[1])
    try:
        res = optimize.minimize(
            objective,
            x0=np.array([a0, t0]),
            method="L-BFGS-B",
            bounds=[TPL_EXPONENT_BOUNDS, TPL_LOG_RATE_BOUNDS],
            options={"maxiter": 500, "ftol": 1e-13, "gtol": 1e-9},
        )
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise FitError(f"truncated power law optimizer failed: {exc}", trace) from exc
    if not res.success or not np.all(np.isfinite(res.x)):
        raise FitError(
            f"truncated power law did not converge: {res.message}", trace
        )
    a, log_lam = (float(v) for v in res.x)
    return {"alpha": a, "lambda": math.exp(log_lam)}


def fit_distribution(samples, family, xmin=1.0):
    """Fit one family by maximum likelihood.

    Closed forms are used for the log-normal, power law and exponential
    families; the truncated power law is maximized numerically with a
    bounded quasi-Newton search started from the power-law exponent and
    ``1/mean``.

    Parameters
    ----------
    samples : array_like
        Positive values, all ``>= xmin``; at least 3 of them.
    family : Family or str
    xmin : float
        Lower bound of the support.

    Returns
    -------
    DistFit
    """
    family = Family(family)
    xmin = float(xmin)
    if not xmin > 0:
        raise FitError("xmin must be positive")
    x = _as_samples(samples, xmin=xmin, min_n=3)
    n = x.size

    if family is Family.LOGNORMAL:
        lx = np.log(x)
        mu = _fsum(lx) / n
        var = _fsum((lx - mu) ** 2) / n
        if var <= 0:
            raise FitError("degenerate sample: all values identical")
        params = {"mu": mu, "sigma": math.sqrt(var)}
    elif family is Family.POWER_LAW:
        s = _fsum(np.log(x / xmin))
        if s <= 0:
            raise FitError("degenerate sample: all values equal xmin")
        params = {"alpha": 1.0 + n / s}
    elif family is Family.EXPONENTIAL:
        excess = _fsum(x) / n - xmin
        if excess <= 0:
            raise FitError("degenerate sample: all values equal xmin")
        params = {"lambda": 1.0 / excess}
    else:
        if np.all(x == x[0]):
            raise FitError("degenerate sample: all values identical")
        params = _fit_tpl(x, xmin)

    loglik = _fsum(_logpdf(family, params, xmin, x))
    if not math.isfinite(loglik):
        raise FitError(f"non-finite log-likelihood for {family.value}")
    return DistFit(family=family, params=params, xmin=xmin, loglik=loglik, n=n)


# --------------------------------------------------------------------------
# Model comparison
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LLRResult:
    """Log-likelihood ratio ``r = ln(L_first / L_second)``; r > 0 favors ``first``."""

    first: Family
    second: Family
    r: float
    p: float

    def to_dict(self):
        return {"first": self.first.value, "second": self.second.value, "r": self.r, "p": self.p}


def compare_fits(fit_a, fit_b, samples):
    """Vuong-normalized log-likelihood ratio test between two fits.

    The p-value is two-sided, from ``r / (sd * sqrt(n))`` against the
    standard normal, where ``sd`` is the sample standard deviation of the
    per-point log-likelihood differences.
    """
    if fit_a.xmin != fit_b.xmin:
        raise FitError(f"xmin mismatch: {fit_a.xmin} vs {fit_b.xmin}")
    x = _as_samples(samples, xmin=fit_a.xmin, min_n=2)
    diff = fit_a.logpdf(x) - fit_b.logpdf(x)
    n = diff.size
    r = _fsum(diff)
    sd = float(np.std(diff, ddof=1))
    if sd == 0.0:
        p = 1.0 if r == 0.0 else 0.0
    else:
        p = float(special.erfc(abs(r) / (sd * math.sqrt(2.0 * n))))
    return LLRResult(first=fit_a.family, second=fit_b.family, r=r, p=min(max(p, 0.0), 1.0))


def ks_distance(fit, samples):
    """Largest gap between the empirical CDF and ``fit.cdf`` over the sample points.

    Both one-sided limits of the empirical CDF are checked at every
    distinct value, so ties are handled exactly.
    """
    x = _as_samples(samples, min_n=1)
    x = x[x >= fit.xmin]
    if x.size == 0:
        raise FitError("no samples at or above xmin")
    uniq, counts = np.unique(x, return_counts=True)
    cum = np.cumsum(counts)
    n = x.size
    upper = cum / n
    lower = (cum - counts) / n
    model = fit.cdf(uniq)
    d = max(float(np.max(upper - model)), float(np.max(model - lower)))
    return min(max(d, 0.0), 1.0)


@dataclass
class DistFitReport:
    fits: dict
    comparisons: list
    pairwise: list
    best: Family
    significant: bool
    ks: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "fits": {fam.value: f.to_dict() for fam, f in self.fits.items()},
            "comparisons": [c.to_dict() for c in self.comparisons],
            "pairwise": [c.to_dict() for c in self.pairwise],
            "best": self.best.value,
            "significant_winner": self.significant,
            "ks": self.ks,
            "notes": list(self.notes),
        }


def best_fit(samples, xmin=1.0):
    """Fit all four families and pick the one that wins every pairwise test.

    A family wins a comparison when its log-likelihood ratio is positive at
    p < 0.05.  If no family wins all of its comparisons, the family with the
    highest log-likelihood is reported and ``significant`` is False.
    """
    x = _as_samples(samples, xmin=xmin, min_n=3)
    fits = {}
    notes = []
    for family in FAMILY_ORDER:
        try:
            fits[family] = fit_distribution(x, family, xmin)
        except FitError as exc:
            if family is not Family.TRUNCATED_POWER_LAW:
                raise
            notes.append(f"truncated_power_law excluded: {exc}")

    pairwise = []
    families = list(fits)
    for i, fa in enumerate(families):
        for fb in families[i + 1:]:
            pairwise.append(compare_fits(fits[fa], fits[fb], x))

    comparisons = []
    if Family.LOGNORMAL in fits:
        for family in families:
            if family is not Family.LOGNORMAL:
                comparisons.append(compare_fits(fits[Family.LOGNORMAL], fits[family], x))

    best = None
    for family in families:
        wins = True
        for res in pairwise:
            if family not in (res.first, res.second):
                continue
            signed = res.r if res.first is family else -res.r
            if not (signed > 0 and res.p < SIGNIFICANCE):
                wins = False
                break
        if wins:
            best = family
            break
    significant = best is not None
    if best is None:
        best = max(families, key=lambda f: (fits[f].loglik, -FAMILY_ORDER.index(f)))
        notes.append("no significant winner")

    return DistFitReport(
        fits=fits,
        comparisons=comparisons,
        pairwise=pairwise,
        best=best,
        significant=significant,
        ks=ks_distance(fits[best], x),
        notes=notes,
    )


# --------------------------------------------------------------------------
# Exponentially binned density
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BinnedPDF:
    edges: np.ndarray
    centers: np.ndarray
    densities: np.ndarray
    counts: np.ndarray

    def to_dict(self):
        return {
            "edges": self.edges.tolist(),
            "centers": self.centers.tolist(),
            "densities": self.densities.tolist(),
            "counts": self.counts.tolist(),
        }


def _decade_index(value, per_decade):
    k = math.floor(per_decade * math.log10(value))
    # guard against log10 round-off at exact edges
    while 10.0 ** (k / per_decade) > value:
        k -= 1
    while 10.0 ** ((k + 1) / per_decade) <= value:
        k += 1
    return k


def exponential_binned_pdf(samples, bins_per_decade=10):
    """Histogram density on logarithmically spaced bins.

    Bin edges are ``10**(k / bins_per_decade)``; bins are half-open
    ``[lo, hi)`` so the maximum sits inside the last bin.  Densities are
    ``count / (n * width)`` and integrate to one.
    """
    if bins_per_decade < 1:
        raise ValueError("bins_per_decade must be >= 1")
    x = _as_samples(samples, min_n=1)
    k0 = _decade_index(float(x.min()), bins_per_decade)
    k1 = _decade_index(float(x.max()), bins_per_decade) + 1
    edges = np.array([10.0 ** (k / bins_per_decade) for k in range(k0, k1 + 1)])
    idx = np.searchsorted(edges, x, side="right") - 1
    counts = np.bincount(idx, minlength=edges.size - 1)[: edges.size - 1]
    widths = np.diff(edges)
    densities = counts / (x.size * widths)
    centers = np.sqrt(edges[:-1] * edges[1:])
    return BinnedPDF(edges=edges, centers=centers, densities=densities, counts=counts)
