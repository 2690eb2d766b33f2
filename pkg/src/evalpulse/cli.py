"""Command-line entry point: ``evalpulse <command> ...``.

Exit codes: 0 success, 1 a stage failed (a partial report is still
written), 2 invalid configuration or unreadable input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .core import DatasetError, load_dataset
from .fileio import atomic_write
from .pipeline import (
    ConfigError,
    InputError,
    RunConfig,
    dumps_report,
    emit_plot_data,
    run_pipeline,
    write_report,
)
from .sentiment import LexiconError, PnLexicon, VadLexicon, score_text
from .synthgen import SynthConfig, synthesize, write_synth

CONFIG_ENV = "EVALPULSE_CONFIG"

SUBSET_STAGES = {
    "distfit": ("ingest", "filter", "distfit"),
    "dualreg": ("ingest", "filter", "dualreg"),
}


def _add_input(p):
    p.add_argument("--input", help="JSONL or CSV file of evaluated items")
    p.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p.add_argument("--as-of", dest="as_of", help="reference ISO-8601 time for the age filter")
    p.add_argument("--min-age-days", dest="min_age_days", type=int, default=None)
    p.add_argument("--assume-english", dest="assume_english", action="store_true", default=None,
                   help="skip the stopword language heuristic")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")


def _add_lexicons(p):
    p.add_argument("--vad-lexicon", dest="vad_lexicon")
    p.add_argument("--pn-lexicon", dest="pn_lexicon")
    p.add_argument("--negators")
    p.add_argument("--boosters")


def build_parser():
    parser = argparse.ArgumentParser(prog="evalpulse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the full pipeline and write a JSON report")
    _add_input(p)
    _add_lexicons(p)
    p.add_argument("--skip-emotions", dest="skip_emotions", action="store_true", default=None)
    p.add_argument("--out", required=True, help="report path")
    p.add_argument("--plots", help="directory for tabular plot data")

    for name, text in (("distfit", "fit count distributions"), ("dualreg", "fit the dual-regime model")):
        p = sub.add_parser(name, help=text)
        _add_input(p)
        p.add_argument("--out", required=True)
        p.add_argument("--plots")

    p = sub.add_parser("emotions", help="score item texts and write JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    _add_lexicons(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with a truth sidecar")
    p.add_argument("--kind", choices=("dual_regime", "lognormal", "gibrat"), default="dual_regime")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", default="youtube")
    p.add_argument("--noise-sd", dest="noise_sd", type=float, default=0.5)
    p.add_argument("--intercept", type=float, default=3.5)
    p.add_argument("--knot", type=float, default=None, help="ln of the like threshold")
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--shock-sd", dest="shock_sd", type=float, default=0.2)
    p.add_argument("--initial", type=float, default=1000.0)
    p.add_argument("--as-of", dest="as_of", default="2016-01-01T00:00:00+00:00")
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="merge key results of several reports side by side")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", help="write JSON here instead of stdout")
    return parser


def _load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must contain a JSON object")
    return RunConfig.from_mapping(data, source=str(path))


def _run_config(args):
    path = args.config or os.environ.get(CONFIG_ENV)
    base = _load_config_file(path) if path else RunConfig()
    overrides = {
        name: getattr(args, name, None)
        for name in (
            "input", "format", "as_of", "min_age_days", "assume_english", "seed",
            "vad_lexicon", "pn_lexicon", "negators", "boosters", "skip_emotions",
        )
    }
    cfg = base.merged(overrides)
    if args.command in SUBSET_STAGES:
        cfg = cfg.merged({"stages": SUBSET_STAGES[args.command]})
    return cfg.validate()


def _cmd_pipeline(args):
    cfg = _run_config(args)
    report, code = run_pipeline(cfg)
    write_report(report, args.out)
    if args.plots:
        emit_plot_data(report, args.plots)
    for stage in report["stages"]:
        if stage["status"] == "failed":
            print(f"evalpulse: stage {stage['name']} failed: {stage.get('reason', '')}", file=sys.stderr)
    return code


def _cmd_emotions(args):
    for name in ("vad_lexicon", "pn_lexicon"):
        if not getattr(args, name):
            raise ConfigError(name, "required for the emotions command")
    try:
        vad = VadLexicon.load(args.vad_lexicon)
        pn = PnLexicon.load(args.pn_lexicon, negators=args.negators, boosters=args.boosters)
    except (OSError, LexiconError) as exc:
        raise ConfigError("lexicon", str(exc)) from None
    try:
        ds = load_dataset(args.input, args.format)
    except (OSError, DatasetError) as exc:
        raise InputError(f"cannot read input {args.input}: {exc}") from None
    lines = []
    for item in ds.items:
        rec = {"id": item.id}
        rec.update(score_text(item.text, vad, pn).to_dict())
        lines.append(json.dumps(rec, ensure_ascii=False) + "\n")
    atomic_write(args.out, "".join(lines))
    return 0


def _cmd_synth(args):
    values = {
        k: getattr(args, k)
        for k in ("kind", "n", "seed", "preset", "noise_sd", "intercept", "knot", "lambda_",
                  "gamma", "steps", "shock_sd", "initial", "as_of")
        if getattr(args, k) is not None
    }
    try:
        config = SynthConfig(**values)
        ds, truth = synthesize(config)
    except ValueError as exc:
        raise ConfigError("synth", str(exc)) from None
    data_path, sidecar = write_synth(ds, truth, args.out)
    print(f"wrote {data_path} and {sidecar}")
    return 0


def _summary(report):
    out = {"input": report.get("metadata", {}).get("input")}
    frep = report.get("filter_report")
    if frep:
        out["n_ld"] = frep.get("n_ld")
    dist = report.get("distfit", {})
    if not dist.get("skipped"):
        for var in ("likes", "dislikes"):
            if var in dist:
                ln = dist[var]["fits"]["lognormal"]["params"]
                out[f"{var}_best"] = dist[var]["best"]
                out[f"{var}_mu"] = ln["mu"]
                out[f"{var}_sigma"] = ln["sigma"]
    dual = report.get("dualreg", {})
    if not dual.get("skipped") and "dual" in dual:
        for key in ("Lc", "lambda", "gamma", "gcv", "r2"):
            out[f"dual_{key}"] = dual["dual"][key]
        out["ols_gcv"] = dual["ols"]["gcv"]
        out["dual_regime_confirmed"] = dual["dual_regime_confirmed"]
    pol = report.get("polarization", {})
    if not pol.get("skipped") and "mean" in pol:
        out["pol_mean"] = pol["mean"]
    return out


def _cmd_compare(args):
    merged = {}
    for path in args.reports:
        try:
            with open(path, encoding="utf-8") as fh:
                report = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read report {path}: {exc}") from None
        merged[Path(path).stem] = _summary(report)
    text = dumps_report({"schema": 1, "reports": merged})
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "analyze": _cmd_pipeline,
    "distfit": _cmd_pipeline,
    "dualreg": _cmd_pipeline,
    "emotions": _cmd_emotions,
    "synth": _cmd_synth,
    "compare": _cmd_compare,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"evalpulse: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"evalpulse: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
