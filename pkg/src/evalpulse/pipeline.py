"""Batch analysis pipeline and report/plot-data emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .core import DatasetError, filter_items, load_dataset, parse_timestamp
from .distfit import DistFit, Family, FitError, best_fit, exponential_binned_pdf
from .dualreg import RegimeLabel, RegressionError, analyze_dual_regime, global_mask, hist2d_loglog, to_loglog
from .fileio import atomic_write
from .inference import (
    ModelError,
    fit_linear,
    fit_logistic,
    polarization,
    polarization_summary,
    spearman_matrix,
    standardize_logcounts,
)
from .sentiment import LexiconError, PnLexicon, VadLexicon, detect_english, english_stopwords, score_text

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

STAGES = (
    "ingest",
    "filter",
    "sentiment",
    "distfit",
    "dualreg",
    "correlations",
    "polarization",
    "regressions",
)

# stage -> stages whose output it reads
DEPENDS = {
    "filter": ("ingest",),
    "sentiment": ("filter",),
    "distfit": ("filter",),
    "dualreg": ("filter",),
    "correlations": ("sentiment",),
    "polarization": ("filter",),
    "regressions": ("sentiment", "dualreg", "polarization"),
}

EMOTION_STAGES = ("sentiment", "correlations", "regressions")


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class InputError(RuntimeError):
    """Input file missing, unreadable or malformed."""


@dataclass
class RunConfig:
    input: Optional[str] = None
    format: str = "jsonl"
    as_of: Optional[str] = None
    vad_lexicon: Optional[str] = None
    pn_lexicon: Optional[str] = None
    negators: Optional[str] = None
    boosters: Optional[str] = None
    assume_english: bool = False
    skip_emotions: bool = False
    min_age_days: int = 365
    min_likes: int = 1
    min_dislikes: int = 1
    stopword_threshold: float = 0.10
    xmin: float = 1.0
    bins_per_decade: int = 10
    cv_folds: int = 10
    min_segment_frac: float = 0.05
    hist_bins: int = 50
    seed: int = 0
    stages: Optional[tuple] = None

    @classmethod
    def from_mapping(cls, mapping, source="config"):
        known = {f.name for f in fields(cls)}
        values = {}
        for key, value in mapping.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(name, f"unknown key in {source}")
            values[name] = value
        return cls(**values)

    def merged(self, overrides):
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def enabled(self, stage):
        if self.skip_emotions and stage in EMOTION_STAGES:
            return False
        return self.stages is None or stage in self.stages

    def validate(self):
        if not self.input:
            raise ConfigError("input", "an input file is required")
        if self.format not in ("jsonl", "csv"):
            raise ConfigError("format", f"must be 'jsonl' or 'csv', got {self.format!r}")
        if self.as_of is None:
            raise ConfigError("as_of", "a reference timestamp is required for the age filter")
        try:
            parse_timestamp(self.as_of)
        except (TypeError, ValueError):
            raise ConfigError("as_of", f"not an ISO-8601 timestamp: {self.as_of!r}") from None
        ints = {
            "min_age_days": 0, "min_likes": 0, "min_dislikes": 0,
            "bins_per_decade": 1, "cv_folds": 2, "hist_bins": 1,
        }
        for name, lo in ints.items():
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < lo:
                raise ConfigError(name, f"must be an integer >= {lo}, got {value!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError("seed", f"must be an integer, got {self.seed!r}")
        for name, lo, hi in (("stopword_threshold", 0.0, 1.0), ("min_segment_frac", 0.0, 0.5)):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not lo <= value <= hi:
                raise ConfigError(name, f"must be a number in [{lo}, {hi}], got {value!r}")
        if not isinstance(self.xmin, (int, float)) or not self.xmin > 0:
            raise ConfigError("xmin", f"must be positive, got {self.xmin!r}")
        if self.enabled("sentiment"):
            for name in ("vad_lexicon", "pn_lexicon"):
                if not getattr(self, name):
                    raise ConfigError(name, "required unless emotion stages are skipped")
        if self.stages is not None:
            unknown = set(self.stages) - set(STAGES)
            if unknown:
                raise ConfigError("stages", f"unknown stage(s): {', '.join(sorted(unknown))}")
        return self


# --------------------------------------------------------------------------
# JSON helpers
# --------------------------------------------------------------------------


def _plain(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps_report(report):
    return json.dumps(_plain(report), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_report(report, path):
    atomic_write(path, dumps_report(report))


def _skipped(reason):
    return {"skipped": True, "reason": reason}


# --------------------------------------------------------------------------
# Stages
# --------------------------------------------------------------------------


def _load_lexicons(cfg):
    vad = VadLexicon.load(cfg.vad_lexicon)
    pn = PnLexicon.load(cfg.pn_lexicon, negators=cfg.negators, boosters=cfg.boosters)
    return vad, pn


def _distfit_section(values, cfg):
    report = best_fit(values, xmin=cfg.xmin)
    section = report.to_dict()
    section["histogram"] = exponential_binned_pdf(values, cfg.bins_per_decade).to_dict()
    return section


def _column(items, attr):
    return np.array(
        [np.nan if getattr(it.emotions, attr) is None else getattr(it.emotions, attr) for it in items],
        dtype=float,
    )


def _complete_rows(*cols):
    mask = np.ones(cols[0].size, dtype=bool)
    for c in cols:
        mask &= np.isfinite(c)
    return mask


def _regressions(items, is_global, pol):
    v, a, p, n = (_column(items, k) for k in ("v", "a", "p", "n"))
    g = is_global.astype(float)
    models = {}
    failed = []
    specs = (
        ("G~V+A", fit_logistic, g, (v, a), ("V", "A"), "G"),
        ("G~P+N", fit_logistic, g, (p, n), ("P", "N"), "G"),
        ("Pol~V+A", fit_linear, pol, (v, a), ("V", "A"), "Pol"),
        ("Pol~P+N", fit_linear, pol, (p, n), ("P", "N"), "Pol"),
    )
    for key, fitter, y, preds, names, response in specs:
        rows = _complete_rows(*preds)
        try:
            if rows.sum() == 0:
                raise ModelError("no rows with complete predictors")
            res = fitter(np.column_stack([c[rows] for c in preds]), y[rows], names=list(names), response=response)
            models[key] = res.to_dict()
        except (ModelError, ValueError, np.linalg.LinAlgError) as exc:
            models[key] = {"error": str(exc)}
            failed.append(f"{key}: {exc}")
    return models, failed


def run_pipeline(cfg):
    """Run every enabled stage in fixed order.

    Returns ``(report, exit_code)``: 0 when all enabled stages succeed, 1
    when any stage fails.  Raises :class:`ConfigError` or
    :class:`InputError` for problems that prevent a run from starting.
    """
    cfg.validate()
    status = {}
    report = {
        "schema": SCHEMA_VERSION,
        "metadata": {
            "tool": "evalpulse",
            "tool_version": __version__,
            "input": str(cfg.input),
            "format": cfg.format,
            "as_of": parse_timestamp(cfg.as_of).isoformat(),
            "seed": cfg.seed,
            "config": asdict(cfg),
        },
        "stages": [],
    }

    def mark(stage, state, reason=None):
        status[stage] = state
        entry = {"name": stage, "status": state}
        if reason:
            entry["reason"] = reason
        if state == "failed":
            log.warning("stage %s failed: %s", stage, reason)
        report["stages"].append(entry)

    def blocked(stage):
        """Reason a stage cannot run, or None."""
        if not cfg.enabled(stage):
            return "disabled by configuration"
        for dep in DEPENDS.get(stage, ()):
            if status.get(dep) != "ok":
                return f"depends on '{dep}' which is {status.get(dep, 'missing')}"
        return None

    # ingest
    try:
        ds = load_dataset(cfg.input, cfg.format, as_of=cfg.as_of)
    except OSError as exc:
        raise InputError(f"cannot read input {cfg.input}: {exc}") from exc
    except DatasetError as exc:
        raise InputError(f"malformed input {cfg.input}: {exc}") from exc
    mark("ingest", "ok")

    # filter
    if cfg.assume_english:
        language_check = None
    else:
        stopwords = english_stopwords()

        def language_check(text):
            return detect_english(text, stopwords, cfg.stopword_threshold)

    filtered, frep = filter_items(ds, cfg.min_age_days, cfg.min_likes, cfg.min_dislikes, language_check)
    report["filter_report"] = frep.to_dict()
    if frep.n_ld == 0:
        mark("filter", "failed", "no items survived filtering")
    else:
        mark("filter", "ok")
    items = list(filtered.items)

    sections = {}

    stage = "sentiment"
    reason = blocked(stage)
    if reason:
        mark(stage, "skipped", reason)
        sections[stage] = _skipped(reason)
    else:
        try:
            vad, pn = _load_lexicons(cfg)
        except (OSError, LexiconError) as exc:
            mark(stage, "failed", str(exc))
            sections[stage] = _skipped(f"failed: {exc}")
        else:
            items = [replace(it, emotions=score_text(it.text, vad, pn)) for it in items]
            summary = {"n_items": len(items)}
            for k in ("v", "a", "d", "p", "n"):
                col = _column(items, k)
                ok = np.isfinite(col)
                summary[f"n_{k}"] = int(ok.sum())
                summary[f"mean_{k}"] = float(col[ok].mean()) if ok.any() else None
            sections[stage] = summary
            mark(stage, "ok")

    stage = "distfit"
    reason = blocked(stage)
    if reason:
        mark(stage, "skipped", reason)
        sections[stage] = _skipped(reason)
    else:
        try:
            sections[stage] = {
                "likes": _distfit_section(np.array([it.likes for it in items], dtype=float), cfg),
                "dislikes": _distfit_section(np.array([it.dislikes for it in items], dtype=float), cfg),
            }
            mark(stage, "ok")
        except (FitError, ValueError) as exc:
            mark(stage, "failed", str(exc))
            sections[stage] = _skipped(f"failed: {exc}")

    stage = "dualreg"
    is_global = None
    reason = blocked(stage)
    if reason:
        mark(stage, "skipped", reason)
        sections[stage] = _skipped(reason)
    else:
        try:
            points = to_loglog(filtered)
            dual = analyze_dual_regime(points, cfg.cv_folds, cfg.seed, cfg.min_segment_frac)
            is_global = global_mask(points, dual.dual)
            items = [
                replace(it, regime=RegimeLabel.GLOBAL if g else RegimeLabel.LOCAL)
                for it, g in zip(items, is_global)
            ]
            section = dual.to_dict()
            section["hist2d"] = hist2d_loglog(points, cfg.hist_bins).to_dict()
            sections[stage] = section
            mark(stage, "ok")
        except (RegressionError, ValueError) as exc:
            mark(stage, "failed", str(exc))
            sections[stage] = _skipped(f"failed: {exc}")

    stage = "correlations"
    reason = blocked(stage)
    if reason:
        mark(stage, "skipped", reason)
        sections[stage] = _skipped(reason)
    else:
        cols = {k.upper(): _column(items, k) for k in ("v", "a", "d", "p", "n")}
        rows = _complete_rows(*cols.values())
        try:
            cm = spearman_matrix({k: c[rows] for k, c in cols.items()})
            sections[stage] = cm.to_dict()
            mark(stage, "ok")
        except ValueError as exc:
            mark(stage, "failed", str(exc))
            sections[stage] = _skipped(f"failed: {exc}")

    stage = "polarization"
    pol = None
    reason = blocked(stage)
    if reason:
        mark(stage, "skipped", reason)
        sections[stage] = _skipped(reason)
    else:
        try:
            z_l, z_d = standardize_logcounts([it.likes for it in items], [it.dislikes for it in items])
            pol = polarization(z_l, z_d)
            sections[stage] = polarization_summary(pol)
            mark(stage, "ok")
        except ValueError as exc:
            mark(stage, "failed", str(exc))
            sections[stage] = _skipped(f"failed: {exc}")

    stage = "regressions"
    reason = blocked(stage)
    if reason:
        mark(stage, "skipped", reason)
        sections[stage] = _skipped(reason)
    else:
        models, failed = _regressions(items, is_global, pol)
        sections[stage] = models
        if failed:
            mark(stage, "failed", "; ".join(failed))
        else:
            mark(stage, "ok")

    for name in ("sentiment", "distfit", "dualreg", "correlations", "polarization", "regressions"):
        report[name] = sections[name]

    exit_code = 1 if any(s == "failed" for s in status.values()) else 0
    return report, exit_code


# --------------------------------------------------------------------------
# Plot data
# --------------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    atomic_write(path, buf.getvalue())


def _available(section):
    return isinstance(section, dict) and not section.get("skipped")


def lognormal_pdf(x, mu, sigma, xmin):
    """Log-normal density conditioned on ``x >= xmin`` (the fitted model's density)."""
    fit = DistFit(Family.LOGNORMAL, {"mu": mu, "sigma": sigma}, xmin, 0.0, 0)
    return fit.pdf(np.asarray(x, dtype=float))


def emit_plot_data(report, out_dir):
    """Write tabular plot data for the density and joint-distribution figures.

    Produces ``pdf_likes.csv``, ``pdf_dislikes.csv``, ``hist2d.csv``,
    ``regime_lines.csv`` and a ``manifest.json`` listing what was written or
    skipped.  Returns the list of written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written, skipped = [], []

    distfit = report.get("distfit")
    for var in ("likes", "dislikes"):
        name = f"pdf_{var}.csv"
        if not _available(distfit) or var not in distfit:
            skipped.append({"file": name, "reason": "distfit section not available"})
            continue
        sec = distfit[var]
        hist = sec["histogram"]
        ln = sec["fits"]["lognormal"]
        centers = np.array(hist["centers"], dtype=float)
        curve = lognormal_pdf(centers, ln["params"]["mu"], ln["params"]["sigma"], ln["xmin"])
        edges = hist["edges"]
        rows = [
            (float(edges[i]), float(edges[i + 1]), float(centers[i]), int(hist["counts"][i]),
             float(hist["densities"][i]), float(curve[i]))
            for i in range(len(centers))
        ]
        _write_csv(out / name, ("bin_left", "bin_right", "center", "count", "density", "lognormal_pdf"), rows)
        written.append(out / name)

    dual = report.get("dualreg")
    if _available(dual) and "hist2d" in dual:
        h = dual["hist2d"]
        xe, ye, counts = h["x_edges"], h["y_edges"], h["counts"]
        rows = [
            (i, j, float(xe[i]), float(xe[i + 1]), float(ye[j]), float(ye[j + 1]), int(counts[i][j]))
            for i in range(len(xe) - 1)
            for j in range(len(ye) - 1)
        ]
        _write_csv(out / "hist2d.csv", ("x_bin", "y_bin", "lnL_left", "lnL_right", "lnD_left", "lnD_right", "count"), rows)
        written.append(out / "hist2d.csv")

        d = dual["dual"]
        x0, x1 = float(xe[0]), float(xe[-1])
        y0, y1 = float(ye[0]), float(ye[-1])
        knot, level = d["knot"], d["d_at_lc"]

        def line(x):
            return level + d["alpha1"] * max(0.0, x - knot) + d["alpha2"] * max(0.0, knot - x)

        rows = [
            ("local", x0, line(x0), knot, level),
            ("global", knot, level, x1, line(x1)),
            ("threshold_likes", knot, y0, knot, y1),
            ("threshold_dislikes", x0, level, x1, level),
        ]
        _write_csv(out / "regime_lines.csv", ("line", "lnL_start", "lnD_start", "lnL_end", "lnD_end"), rows)
        written.append(out / "regime_lines.csv")
    else:
        for name in ("hist2d.csv", "regime_lines.csv"):
            skipped.append({"file": name, "reason": "dualreg section not available"})

    manifest = {"written": [p.name for p in written], "skipped": skipped}
    atomic_write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return written
