"""Seeded synthetic datasets with planted ground truth.

Presets carry published per-platform values (log-normal parameters of
likes/dislikes, like thresholds, regime exponents and regression
coefficients) so that each analysis stage can be checked against a known
answer.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .core import EvaluationDataset, FilterState, Item
from .fileio import atomic_write
from .rng import stream

# Log-normal (mu, sigma) of likes and dislikes per platform.
LOGNORMAL_PRESETS = {
    "urban_dictionary": {"likes": (4.092, 1.705), "dislikes": (3.657, 1.435)},
    "youtube": {"likes": (5.492, 2.28), "dislikes": (1.405, 2.528)},
    "reddit": {"likes": (2.197, 1.332), "dislikes": (0.492, 1.35)},
    "imgur": {"likes": (4.668, 2.46), "dislikes": (1.821, 1.447)},
}

# Like thresholds L_c of the dual-regime fits.
THRESHOLD_PRESETS = {"urban_dictionary": 155, "youtube": 131, "reddit": 7, "imgur": 27}

YOUTUBE_EXPONENTS = {"lambda": 0.29, "gamma": 0.93}

# (intercept, first, second) coefficients.
LOGISTIC_PRESETS = {
    "VA": {
        "urban_dictionary": (-2.071, 0.976, 0.584),
        "youtube": (-0.305, 0.618, -0.049),
        "reddit": (-0.111, -0.262, -0.006),
        "imgur": (0.228, -0.209, 0.300),
    },
    "PN": {
        "urban_dictionary": (-1.369, 1.019, 0.170),
        "youtube": (-0.115, 0.581, 0.218),
        "reddit": (-0.259, -0.166, -0.006),
        "imgur": (0.261, -0.296, 0.191),
    },
}
LINEAR_PRESETS = {
    "VA": {
        "urban_dictionary": (2.0508, 0.3132, 0.2662),
        "youtube": (1.4543, 0.2980, 0.1005),
        "reddit": (1.3511, -0.1954, -0.0327),
        "imgur": (1.7623, -0.1908, 0.2399),
    },
    "PN": {
        "urban_dictionary": (2.2744, 0.4889, 0.1194),
        "youtube": (1.5896, 0.3059, 0.1698),
        "reddit": (1.2220, -0.1107, 0.0077),
        "imgur": (1.7625, -0.1484, 0.1672),
    },
}

DEFAULT_AS_OF = datetime(2016, 1, 1, tzinfo=timezone.utc)

# Vocabulary for synthetic titles: demo-lexicon words plus English fillers.
_CONTENT_WORDS = (
    "amazing angry awful bad beautiful boring calm cat dog funny good great hate "
    "happy horrible love music quiet sad song terrible video war wonderful"
).split()
_FILLERS = "the a this is my of and it so very not".split()


def _round_counts(values):
    return np.maximum(np.rint(values), 1).astype(np.int64)


def gen_lognormal_counts(n, mu, sigma, seed):
    """Counts ``exp(Normal(mu, sigma))`` rounded to the nearest integer, at least 1."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rng = stream(seed, "gen_lognormal_counts")
    return _round_counts(np.exp(rng.normal(mu, sigma, size=n)))


def gibrat_growth(n, steps, shock_sd, seed, initial=1000.0):
    """Multiplicative growth: each item is scaled by ``exp(Normal(0, shock_sd))`` per step.

    ``ln(size)`` ends up close to ``Normal(ln(initial), shock_sd * sqrt(steps))``.
    Sizes are rounded to integer counts of at least 1.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not initial > 0:
        raise ValueError("initial size must be positive")
    rng = stream(seed, "gibrat_growth")
    log_size = np.full(n, math.log(initial))
    for _ in range(steps):
        log_size += rng.normal(0.0, shock_sd, size=n)
    return _round_counts(np.exp(log_size))


def dual_regime_curve(log_likes, knot, lambda_, gamma, intercept):
    """Continuous piecewise line: slope ``lambda_`` below the knot, ``gamma`` above, value ``intercept`` at it."""
    x = np.asarray(log_likes, dtype=float)
    return intercept + lambda_ * (np.minimum(x, knot) - knot) + gamma * np.maximum(0.0, x - knot)


def dual_regime_log_points(n, knot, lambda_, gamma, intercept, noise_sd, like_mu, like_sigma, seed):
    """Exact (pre-rounding) ``(ln L, ln D)`` pairs of the planted dual-regime model."""
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = stream(seed, "gen_dual_regime")
    log_l = rng.normal(like_mu, like_sigma, size=n)
    noise = rng.normal(0.0, noise_sd, size=n) if noise_sd > 0 else np.zeros(n)
    log_d = dual_regime_curve(log_l, knot, lambda_, gamma, intercept) + noise
    return log_l, log_d


def _titles(n, seed):
    rng = stream(seed, "synthetic_titles")
    lengths = rng.integers(3, 8, size=n)
    titles = []
    for k in lengths:
        # a leading function word keeps every title above the stopword threshold
        words = [_FILLERS[int(rng.integers(len(_FILLERS)))]]
        for _ in range(int(k) - 1):
            pool = _CONTENT_WORDS if rng.random() < 0.5 else _FILLERS
            words.append(pool[int(rng.integers(len(pool)))])
        if rng.random() < 0.15:
            words[-1] += "!!"
        titles.append(" ".join(words))
    return titles


def _created(n, seed, as_of):
    rng = stream(seed, "synthetic_created_at")
    ages = rng.integers(366, 2000, size=n)
    return [as_of - timedelta(days=int(a)) for a in ages]


def _dataset(likes, dislikes, seed, as_of, label):
    n = len(likes)
    titles = _titles(n, seed)
    created = _created(n, seed, as_of)
    items = tuple(
        Item(id=f"s{i:07d}", text=titles[i], likes=int(likes[i]), dislikes=int(dislikes[i]), created_at=created[i])
        for i in range(n)
    )
    return EvaluationDataset(items=items, source_label=label, as_of=as_of, filter_state=FilterState.RAW)


def gen_dual_regime(
    n,
    knot=math.log(THRESHOLD_PRESETS["youtube"]),
    lambda_=YOUTUBE_EXPONENTS["lambda"],
    gamma=YOUTUBE_EXPONENTS["gamma"],
    intercept=3.5,
    noise_sd=0.5,
    like_mu=LOGNORMAL_PRESETS["youtube"]["likes"][0],
    like_sigma=LOGNORMAL_PRESETS["youtube"]["likes"][1],
    seed=0,
    as_of=DEFAULT_AS_OF,
):
    """Dataset whose ln D follows a planted single-knot relation to ln L.

    Items carry synthetic English titles and creation dates older than one
    year before ``as_of``, so they pass every filter.
    """
    log_l, log_d = dual_regime_log_points(n, knot, lambda_, gamma, intercept, noise_sd, like_mu, like_sigma, seed)
    return _dataset(_round_counts(np.exp(log_l)), _round_counts(np.exp(log_d)), seed, as_of, "synthetic:dual_regime")


def gen_emotion_effect(n, kind, coefs, noise_sd=0.0, seed=0):
    """Uniform [0, 1] predictors and an outcome with planted coefficients.

    ``coefs[0]`` is the intercept.  Returns ``(predictors, y)`` where
    ``predictors`` has shape ``(n, len(coefs) - 1)`` without the intercept
    column.
    """
    coefs = np.asarray(coefs, dtype=float)
    rng = stream(seed, f"gen_emotion_effect:{kind}")
    X = rng.random((n, coefs.size - 1))
    eta = coefs[0] + X @ coefs[1:]
    if kind == "logistic":
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    elif kind == "linear":
        y = eta + rng.normal(0.0, noise_sd, size=n) if noise_sd > 0 else eta
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return X, y


@dataclass
class SynthConfig:
    kind: str = "dual_regime"  # dual_regime | lognormal | gibrat
    n: int = 10_000
    seed: int = 0
    preset: str = "youtube"
    as_of: str = "2016-01-01T00:00:00+00:00"
    noise_sd: float = 0.5
    intercept: float = 3.5
    knot: Optional[float] = None
    lambda_: float = YOUTUBE_EXPONENTS["lambda"]
    gamma: float = YOUTUBE_EXPONENTS["gamma"]
    steps: int = 100
    shock_sd: float = 0.2
    initial: float = 1000.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.preset not in LOGNORMAL_PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.kind not in ("dual_regime", "lognormal", "gibrat"):
            raise ValueError(f"unknown kind {self.kind!r}")


def synthesize(config):
    """Build a dataset and a truth record from a :class:`SynthConfig`."""
    as_of = datetime.fromisoformat(config.as_of)
    if as_of.tzinfo is None:
        as_of = as_of.replace(tzinfo=timezone.utc)
    preset = LOGNORMAL_PRESETS[config.preset]
    truth = {"kind": config.kind, "seed": config.seed, "n": config.n, "preset": config.preset}
    if config.kind == "dual_regime":
        knot = config.knot if config.knot is not None else math.log(THRESHOLD_PRESETS[config.preset])
        ds = gen_dual_regime(
            config.n, knot, config.lambda_, config.gamma, config.intercept, config.noise_sd,
            preset["likes"][0], preset["likes"][1], config.seed, as_of,
        )
        truth.update(knot=knot, Lc=math.exp(knot), lambda_=config.lambda_, gamma=config.gamma,
                     intercept=config.intercept, noise_sd=config.noise_sd,
                     like_mu=preset["likes"][0], like_sigma=preset["likes"][1])
    elif config.kind == "lognormal":
        likes = gen_lognormal_counts(config.n, *preset["likes"], seed=config.seed)
        dislikes = gen_lognormal_counts(config.n, *preset["dislikes"], seed=config.seed + 1)
        ds = _dataset(likes, dislikes, config.seed, as_of, "synthetic:lognormal")
        truth.update(likes=dict(zip(("mu", "sigma"), preset["likes"])),
                     dislikes=dict(zip(("mu", "sigma"), preset["dislikes"])))
    else:
        likes = gibrat_growth(config.n, config.steps, config.shock_sd, config.seed, config.initial)
        dislikes = gibrat_growth(config.n, config.steps, config.shock_sd, config.seed + 1, config.initial)
        ds = _dataset(likes, dislikes, config.seed, as_of, "synthetic:gibrat")
        truth.update(steps=config.steps, shock_sd=config.shock_sd, initial=config.initial)
    truth["as_of"] = as_of.isoformat()
    return ds, truth


def _item_record(item):
    rec = {"id": item.id, "text": item.text, "likes": item.likes, "dislikes": item.dislikes}
    if item.created_at is not None:
        rec["created_at"] = item.created_at.isoformat()
    return rec


def truth_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".truth.json")


def write_synth(ds, truth, path):
    """Write the dataset as JSONL plus a ``<stem>.truth.json`` sidecar."""
    lines = "".join(json.dumps(_item_record(it), ensure_ascii=False) + "\n" for it in ds.items)
    atomic_write(path, lines)
    atomic_write(truth_path(path), json.dumps(truth, indent=2) + "\n")
    return Path(path), truth_path(path)


def config_dict(config):
    return asdict(config)
