"""Single-knot hinge regression of log-dislikes on log-likes.

The dual model is

    ln D = I + alpha1 * max(0, ln L - c) + alpha2 * max(0, c - ln L)

so the local exponent (below the knot) is ``-alpha2`` and the global
exponent (above it) is ``alpha1``.  It is compared against a straight OLS
line by GCV, R^2 and k-fold cross-validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .rng import stream

OLS_ENP = 2.0
KNOT_PENALTY = 2.0
# 3 coefficients plus the per-knot penalty
SINGLE_KNOT_ENP = 3.0 + KNOT_PENALTY * 1
MIN_SEGMENT_POINTS = 10


class RegressionError(ValueError):
    """Raised when a regression cannot be fitted to the given points."""


class RegimeLabel(str, Enum):
    LOCAL = "local"
    GLOBAL = "global"


@dataclass(frozen=True)
class LogLogPoints:
    x: np.ndarray
    y: np.ndarray
    ids: tuple = ()

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise RegressionError("x and y must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise RegressionError("log-log points must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", tuple(self.ids))

    def __len__(self):
        return self.x.size

    def take(self, idx):
        ids = tuple(self.ids[i] for i in idx) if self.ids else ()
        return LogLogPoints(self.x[idx], self.y[idx], ids)


def points_from_counts(likes, dislikes, ids=()):
    likes = np.asarray(likes)
    dislikes = np.asarray(dislikes)
    if likes.size and (likes.min() < 1 or dislikes.min() < 1):
        raise RegressionError("log-log points need likes >= 1 and dislikes >= 1")
    return LogLogPoints(np.log(likes.astype(float)), np.log(dislikes.astype(float)), ids)


def to_loglog(ds):
    """``(ln likes, ln dislikes)`` for every item of a vote-filtered dataset."""
    for item in ds.items:
        if item.likes < 1 or item.dislikes < 1:
            raise RegressionError(f"item {item.id!r} has a zero count; filter the dataset first")
    return points_from_counts(
        [it.likes for it in ds.items],
        [it.dislikes for it in ds.items],
        [it.id for it in ds.items],
    )


def gcv(rss, n, enp):
    """Generalized cross-validation score ``rss / (n * (1 - enp/n)**2)``."""
    if rss < 0:
        raise ValueError("rss must be non-negative")
    if enp < 0 or enp >= n:
        raise ValueError(f"need 0 <= enp < n, got enp={enp}, n={n}")
    return rss / (n * (1.0 - enp / n) ** 2)


def _r2(rss, y):
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        return 1.0 if rss == 0.0 else float("nan")
    return 1.0 - rss / tss


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    slope: float
    rss: float
    r2: float
    gcv: float
    n: int

    def predict(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "rss": self.rss,
            "r2": self.r2,
            "gcv": self.gcv,
            "n": self.n,
        }


def fit_ols(points):
    x, y = points.x, points.y
    n = x.size
    if n < 3:
        raise RegressionError(f"OLS needs at least 3 points, got {n}")
    if np.all(x == x[0]):
        raise RegressionError("x is constant")
    design = np.column_stack([np.ones(n), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    rss = float(resid @ resid)
    return LinearFit(
        intercept=float(coef[0]),
        slope=float(coef[1]),
        rss=rss,
        r2=_r2(rss, y),
        gcv=gcv(rss, n, OLS_ENP),
        n=n,
    )


@dataclass(frozen=True)
class DualRegimeFit:
    intercept: float
    alpha1: float
    alpha2: float
    knot: float
    rss: float
    r2: float
    gcv: float
    n: int

    @property
    def Lc(self):
        return math.exp(self.knot)

    @property
    def d_at_lc(self):
        # fitted ln D at the knot
        return self.intercept

    @property
    def lambda_(self):
        return -self.alpha2

    @property
    def gamma(self):
        return self.alpha1

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        return (
            self.intercept
            + self.alpha1 * np.maximum(0.0, x - self.knot)
            + self.alpha2 * np.maximum(0.0, self.knot - x)
        )

    def to_dict(self):
        return {
            "I": self.intercept,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "knot": self.knot,
            "Lc": self.Lc,
            "Lc_display": int(round(self.Lc)),
            "d_at_lc": self.d_at_lc,
            "lambda": self.lambda_,
            "gamma": self.gamma,
            "rss": self.rss,
            "r2": self.r2,
            "gcv": self.gcv,
            "n": self.n,
        }


def _hinge_design(x, c):
    return np.column_stack([np.ones(x.size), np.maximum(0.0, x - c), np.maximum(0.0, c - x)])


def _candidate_rss(xs, ys, min_side):
    """RSS of the hinge fit at every admissible knot (x sorted ascending).

    Uses prefix sums over sorted, centered data so each candidate costs a
    3x3 solve.  Returns (knots, rss).
    """
    n = xs.size
    shift_x, shift_y = xs.mean(), ys.mean()
    x = xs - shift_x
    y = ys - shift_y

    uniq, start = np.unique(x, return_index=True)
    end = np.append(start[1:], n)
    n_left = start
    n_right = n - end
    ok = (n_left >= min_side) & (n_right >= min_side)
    if not np.any(ok):
        return np.empty(0), np.empty(0)
    c = uniq[ok]
    lo, hi = start[ok], end[ok]

    def prefix(v):
        return np.concatenate([[0.0], np.cumsum(v)])

    p1, p2, py, pxy = prefix(x), prefix(x * x), prefix(y), prefix(x * y)
    nl, nr = lo.astype(float), (n - hi).astype(float)
    s1l, s2l, syl, sxyl = p1[lo], p2[lo], py[lo], pxy[lo]
    s1r, s2r, syr, sxyr = p1[n] - p1[hi], p2[n] - p2[hi], py[n] - py[hi], pxy[n] - pxy[hi]

    h1 = s1r - c * nr
    h11 = s2r - 2 * c * s1r + c * c * nr
    h1y = sxyr - c * syr
    h2 = c * nl - s1l
    h22 = c * c * nl - 2 * c * s1l + s2l
    h2y = c * syl - sxyl
    sy = py[n]

    gram = np.zeros((c.size, 3, 3))
    gram[:, 0, 0] = n
    gram[:, 0, 1] = gram[:, 1, 0] = h1
    gram[:, 0, 2] = gram[:, 2, 0] = h2
    gram[:, 1, 1] = h11
    gram[:, 2, 2] = h22
    rhs = np.stack([np.full(c.size, sy), h1y, h2y], axis=1)
    beta = np.linalg.solve(gram, rhs[..., None])[..., 0]
    rss = float(y @ y) - np.einsum("ij,ij->i", beta, rhs)
    return c + shift_x, np.maximum(rss, 0.0)


def fit_single_knot(points, min_segment_frac=0.05):
    """Exhaustive single-knot hinge regression.

    Candidate knots are the distinct x values with at least
    ``max(10, ceil(min_segment_frac * n))`` points strictly on each side.
    The candidate with the smallest RSS wins; ties go to the smaller knot.
    """
    n = len(points)
    if n < 20:
        raise RegressionError(f"single-knot fit needs at least 20 points, got {n}")
    if np.unique(points.x).size < 3:
        raise RegressionError("single-knot fit needs at least 3 distinct x values")
    min_side = max(MIN_SEGMENT_POINTS, math.ceil(min_segment_frac * n))
    order = np.argsort(points.x, kind="stable")
    knots, rss = _candidate_rss(points.x[order], points.y[order], min_side)
    if knots.size == 0:
        raise RegressionError(
            f"insufficient spread: no knot leaves {min_side} points on each side"
        )
    best = int(np.argmin(rss))
    knot = float(knots[best])

    design = _hinge_design(points.x, knot)
    coef, *_ = np.linalg.lstsq(design, points.y, rcond=None)
    resid = points.y - design @ coef
    final_rss = float(resid @ resid)
    return DualRegimeFit(
        intercept=float(coef[0]),
        alpha1=float(coef[1]),
        alpha2=float(coef[2]),
        knot=knot,
        rss=final_rss,
        r2=_r2(final_rss, points.y),
        gcv=gcv(final_rss, n, SINGLE_KNOT_ENP),
        n=n,
    )


_MODELS = {
    "ols": lambda pts, frac: fit_ols(pts),
    "single_knot": fit_single_knot,
}


def kfold_cv_error(points, model="ols", k=10, seed=0, min_segment_frac=0.05):
    """Mean held-out squared error over a seeded k-fold split."""
    if model not in _MODELS:
        raise ValueError(f"unknown model {model!r}")
    n = len(points)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points ({n})")
    perm = stream(seed, "kfold_cv_error").permutation(n)
    folds = np.array_split(perm, k)
    errors = []
    for i, test in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        fit = _MODELS[model](points.take(train), min_segment_frac)
        resid = points.y[test] - fit.predict(points.x[test])
        errors.append(float(np.mean(resid**2)))
    return float(np.mean(errors))


def classify_regime(item, fit):
    """Global iff ln L is above the knot and ln D above the fitted D(L_c)."""
    if math.log(item.likes) > fit.knot and math.log(item.dislikes) > fit.d_at_lc:
        return RegimeLabel.GLOBAL
    return RegimeLabel.LOCAL


def global_mask(points, fit):
    """Vectorized ``classify_regime``: True where a point is in the global regime."""
    return (points.x > fit.knot) & (points.y > fit.d_at_lc)


@dataclass(frozen=True)
class Hist2D:
    x_edges: np.ndarray
    y_edges: np.ndarray
    counts: np.ndarray

    def to_dict(self):
        return {
            "x_edges": self.x_edges.tolist(),
            "y_edges": self.y_edges.tolist(),
            "counts": self.counts.astype(int).tolist(),
        }


def hist2d_loglog(points, bins=50):
    """Equal-width ``bins x bins`` histogram over the range of each axis."""
    if len(points) < 1:
        raise RegressionError("histogram needs at least one point")
    counts, xe, ye = np.histogram2d(
        points.x,
        points.y,
        bins=bins,
        range=[_span(points.x), _span(points.y)],
    )
    return Hist2D(x_edges=xe, y_edges=ye, counts=counts.astype(np.int64))


def _span(v):
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


@dataclass(frozen=True)
class DualRegimeReport:
    ols: LinearFit
    dual: DualRegimeFit
    cv_ols: float
    cv_dual: float
    n_local: int
    n_global: int

    @property
    def confirmed(self):
        """Dual regime preferred on both GCV and R^2."""
        return self.dual.gcv < self.ols.gcv and self.dual.r2 > self.ols.r2

    def to_dict(self):
        ols = self.ols.to_dict()
        ols["cv_error"] = self.cv_ols
        dual = self.dual.to_dict()
        dual["cv_error"] = self.cv_dual
        return {
            "ols": ols,
            "dual": dual,
            "dual_regime_confirmed": self.confirmed,
            "regime_counts": {"local": self.n_local, "global": self.n_global},
        }


def analyze_dual_regime(points, k=10, seed=0, min_segment_frac=0.05):
    """OLS and single-knot fits, both CV errors, and the regime split."""
    ols = fit_ols(points)
    dual = fit_single_knot(points, min_segment_frac)
    glob = global_mask(points, dual)
    return DualRegimeReport(
        ols=ols,
        dual=dual,
        cv_ols=kfold_cv_error(points, "ols", k, seed),
        cv_dual=kfold_cv_error(points, "single_knot", k, seed, min_segment_frac),
        n_local=int(np.sum(~glob)),
        n_global=int(np.sum(glob)),
    )
