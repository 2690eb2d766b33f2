"""Correlation screening, regression models and the polarization measure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

MAX_IRLS_ITER = 100
DEVIANCE_TOL = 1e-8
SEPARATION_BOUND = 15.0


class ModelError(ValueError):
    """Raised when a model cannot be fitted to the given data."""


# --------------------------------------------------------------------------
# Spearman screening
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple
    rho: np.ndarray
    p: np.ndarray
    n: int
    flags: tuple = ()

    def to_dict(self):
        def clean(m):
            return [[None if not np.isfinite(v) else float(v) for v in row] for row in m]

        return {
            "names": list(self.names),
            "n": self.n,
            "rho": clean(self.rho),
            "p": clean(self.p),
            "flags": list(self.flags),
        }


def _rank_p(rho, n):
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return float(2.0 * stats.t.sf(abs(t), n - 2))


def spearman_matrix(columns):
    """Pairwise Spearman coefficients with t-approximation p-values.

    ``columns`` maps names to equal-length vectors with no missing values.
    Constant columns get NaN correlations and a flag.
    """
    names = tuple(columns)
    if len(names) < 2:
        raise ValueError("need at least 2 columns")
    data = [np.asarray(columns[k], dtype=float) for k in names]
    n = data[0].size
    if any(col.size != n for col in data):
        raise ValueError("columns must have equal length")
    if n < 3:
        raise ValueError("need at least 3 rows")
    if any(not np.all(np.isfinite(col)) for col in data):
        raise ValueError("columns must be complete; drop rows with missing values first")

    ranks = []
    flags = []
    for name, col in zip(names, data):
        r = stats.rankdata(col, method="average")
        if np.all(r == r[0]):
            flags.append(f"{name}: constant column, correlations undefined")
            ranks.append(None)
        else:
            ranks.append((r - r.mean()) / np.sqrt(np.sum((r - r.mean()) ** 2)))

    k = len(names)
    rho = np.full((k, k), np.nan)
    p = np.full((k, k), np.nan)
    for i in range(k):
        if ranks[i] is None:
            continue
        rho[i, i], p[i, i] = 1.0, 0.0
        for j in range(i + 1, k):
            if ranks[j] is None:
                continue
            r = float(np.clip(ranks[i] @ ranks[j], -1.0, 1.0))
            if 1.0 - abs(r) < 1e-12:
                r = math.copysign(1.0, r)
            rho[i, j] = rho[j, i] = r
            p[i, j] = p[j, i] = _rank_p(r, n)
    return CorrelationMatrix(names=names, rho=rho, p=p, n=n, flags=tuple(flags))


# --------------------------------------------------------------------------
# Regression
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    name: str
    estimate: float
    std_error: float
    statistic: float
    p: float

    def to_dict(self):
        return {"name": self.name, "estimate": self.estimate, "se": self.std_error,
                "stat": self.statistic, "p": self.p}


@dataclass(frozen=True)
class RegressionResult:
    kind: str
    terms: tuple
    n: int
    loglik_full: float
    loglik_null: float
    chi2: float
    df: int
    chi2_p: float
    formula: str = ""
    notes: tuple = field(default_factory=tuple)

    def term(self, name):
        for t in self.terms:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def estimates(self):
        return np.array([t.estimate for t in self.terms])

    @property
    def std_errors(self):
        return np.array([t.std_error for t in self.terms])

    def to_dict(self):
        return {
            "formula": self.formula,
            "kind": self.kind,
            "terms": [t.to_dict() for t in self.terms],
            "n": self.n,
            "loglik_full": self.loglik_full,
            "loglik_null": self.loglik_null,
            "chi2": self.chi2,
            "df": self.df,
            "chi2_p": self.chi2_p,
        }


def likelihood_ratio_test(loglik_full, loglik_null, df):
    """``chi2 = 2 (l_full - l_null)`` and its upper-tail p-value."""
    if df < 1:
        raise ValueError("df must be >= 1")
    diff = loglik_full - loglik_null
    if diff < -1e-8:
        raise ModelError("full model log-likelihood below the null; models are not nested")
    chi2 = max(0.0, 2.0 * diff)
    return chi2, float(stats.chi2.sf(chi2, df))


def _design(predictors, n=None):
    if predictors is None:
        if n is None:
            raise ValueError("need predictors or n")
        return np.ones((n, 1))
    X = np.asarray(predictors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return np.column_stack([np.ones(X.shape[0]), X])


def _names(names, k):
    if names is None:
        names = [f"x{i + 1}" for i in range(k)]
    if len(names) != k:
        raise ValueError(f"expected {k} predictor names, got {len(names)}")
    return ["(Intercept)", *names]


def _formula(response, names):
    rhs = " + ".join(names[1:]) if len(names) > 1 else "1"
    return f"{response} ~ {rhs}"


def _bernoulli_loglik(y, eta):
    # y*eta - log(1 + e^eta), stable for large |eta|
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(predictors, y, names=None, response="y"):
    """Logistic regression by iteratively reweighted least squares.

    An intercept is added to ``predictors`` (shape ``(n, k)``; pass
    ``None`` for an intercept-only model).  Standard errors come from the
    inverse Fisher information; the likelihood-ratio test is against the
    intercept-only model.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    X = _design(predictors, n)
    if X.shape[0] != n:
        raise ValueError("predictors and y differ in length")
    labels = _names(names, X.shape[1] - 1)
    if not np.all((y == 0) | (y == 1)):
        raise ModelError("y must be binary 0/1")
    if y.min() == y.max():
        raise ModelError("y contains a single class")
    if n <= X.shape[1]:
        raise ModelError(f"need more observations ({n}) than parameters ({X.shape[1]})")

    beta = np.zeros(X.shape[1])
    ybar = y.mean()
    beta[0] = math.log(ybar / (1.0 - ybar))
    dev_old = -2.0 * _bernoulli_loglik(y, X @ beta)
    notes = []
    for it in range(MAX_IRLS_ITER):
        eta = X @ beta
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = np.maximum(mu * (1.0 - mu), 1e-12)
        z = eta + (y - mu) / w
        XtW = X.T * w
        try:
            beta = np.linalg.solve(XtW @ X, XtW @ z)
        except np.linalg.LinAlgError as exc:
            raise ModelError("singular information matrix") from exc
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            raise ModelError("separation: coefficients diverge")
        dev = -2.0 * _bernoulli_loglik(y, X @ beta)
        if abs(dev_old - dev) < DEVIANCE_TOL:
            break
        dev_old = dev
    else:
        notes.append(f"IRLS stopped after {MAX_IRLS_ITER} iterations")

    eta = X @ beta
    mu = 1.0 / (1.0 + np.exp(-eta))
    info = (X.T * (mu * (1.0 - mu))) @ X
    cov = np.linalg.inv(info)
    se = np.sqrt(np.diag(cov))
    zstat = beta / se
    pvals = 2.0 * stats.norm.sf(np.abs(zstat))

    ll_full = _bernoulli_loglik(y, eta)
    ll_null = float(n * (ybar * math.log(ybar) + (1 - ybar) * math.log(1 - ybar)))
    df = X.shape[1] - 1
    if df:
        chi2, chi2_p = likelihood_ratio_test(ll_full, ll_null, df)
    else:
        chi2, chi2_p = 0.0, 1.0
    return RegressionResult(
        kind="logistic",
        terms=tuple(Term(nm, float(b), float(s), float(zs), float(pv))
                    for nm, b, s, zs, pv in zip(labels, beta, se, zstat, pvals)),
        n=n,
        loglik_full=ll_full,
        loglik_null=ll_null,
        chi2=chi2,
        df=df,
        chi2_p=chi2_p,
        formula=_formula(f"logit({response})", labels),
        notes=tuple(notes),
    )


def _collinear_columns(X, labels):
    bad = []
    kept = []
    for j in range(X.shape[1]):
        trial = X[:, kept + [j]]
        if np.linalg.matrix_rank(trial) < len(kept) + 1:
            bad.append(labels[j])
        else:
            kept.append(j)
    return bad


def _gaussian_loglik(rss, n):
    # profile likelihood with sigma^2 = rss / n
    return -0.5 * n * (math.log(2.0 * math.pi * rss / n) + 1.0)


def fit_linear(predictors, y, names=None, response="y"):
    """OLS with t-tests and a Gaussian likelihood-ratio test against the intercept-only model."""
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    X = _design(predictors, n)
    if X.shape[0] != n:
        raise ValueError("predictors and y differ in length")
    labels = _names(names, X.shape[1] - 1)
    p = X.shape[1]
    if n <= p:
        raise ModelError(f"need more observations ({n}) than parameters ({p})")
    if np.linalg.matrix_rank(X) < p:
        bad = _collinear_columns(X, labels)
        raise ModelError(f"rank-deficient design; collinear column(s): {', '.join(bad)}")

    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    rss = float(resid @ resid)
    dof = n - p
    sigma2 = rss / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(se > 0, beta / se, np.sign(beta) * np.inf)
    pvals = 2.0 * stats.t.sf(np.abs(tstat), dof)

    tss = float(np.sum((y - y.mean()) ** 2))
    df = p - 1
    notes = []
    if rss == 0.0 or tss == 0.0:
        ll_full = ll_null = float("nan")
        chi2, chi2_p = (float("inf"), 0.0) if rss == 0.0 and tss > 0 else (0.0, 1.0)
        notes.append("degenerate residuals; Gaussian likelihood undefined")
    else:
        ll_full = _gaussian_loglik(rss, n)
        ll_null = _gaussian_loglik(tss, n)
        if df:
            chi2, chi2_p = likelihood_ratio_test(ll_full, ll_null, df)
        else:
            chi2, chi2_p = 0.0, 1.0
    return RegressionResult(
        kind="linear",
        terms=tuple(Term(nm, float(b), float(s), float(t), float(pv))
                    for nm, b, s, t, pv in zip(labels, beta, se, tstat, pvals)),
        n=n,
        loglik_full=ll_full,
        loglik_null=ll_null,
        chi2=chi2,
        df=df,
        chi2_p=chi2_p,
        formula=_formula(response, labels),
        notes=tuple(notes),
    )


# --------------------------------------------------------------------------
# Polarization
# --------------------------------------------------------------------------


def _zscore(values, name):
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least 2 values to standardize")
    if np.any(v < 1):
        raise ValueError(f"{name} counts must be >= 1")
    lv = np.log(v)
    sd = lv.std(ddof=1)
    if sd == 0.0:
        raise ValueError(f"{name} has zero spread")
    return (lv - lv.mean()) / sd


def standardize_logcounts(likes, dislikes):
    """Z-scores of ln(likes) and ln(dislikes) using the sample (n-1) SD."""
    return _zscore(likes, "likes"), _zscore(dislikes, "dislikes")


def polarization(z_l, z_d):
    """Geometric mean of the positive parts of two z-scores.

    Zero whenever either score is <= 0.  Accepts scalars or arrays.
    """
    out = np.sqrt(np.maximum(z_l, 0.0) * np.maximum(z_d, 0.0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PolarizationScore:
    z_l: float
    z_d: float
    pol: float


def polarization_summary(pol):
    pol = np.asarray(pol, dtype=float)
    q = np.quantile(pol, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {
        "n": int(pol.size),
        "mean": float(pol.mean()),
        "quantiles": {k: float(v) for k, v in zip(("q05", "q25", "q50", "q75", "q95"), q)},
        "fraction_zero": float(np.mean(pol == 0.0)),
    }
