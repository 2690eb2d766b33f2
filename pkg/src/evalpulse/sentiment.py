"""Lexicon-based emotion scoring of item titles.

Two scorers are provided:

* ``score_vad`` averages valence/arousal/dominance norms over matched words
  and rescales them to [0, 1];
* ``score_pn`` assigns discrete positive ([1, 5]) and negative ([-5, -1])
  strengths using term strengths plus negation, booster, elongation and
  exclamation rules.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

_TOKEN_RE = re.compile(r"(?P<word>[^\W_]+(?:'[^\W_]+)*)|(?P<punct>[^\w\s]+)")
_ELONGATION_RE = re.compile(r"([^\W\d_])\1{2,}")

MAX_STRENGTH = 5


class LexiconError(ValueError):
    """Malformed lexicon file."""


@dataclass(frozen=True)
class Token:
    text: str
    kind: str = "word"  # "word" or "punct"
    elongated: bool = False
    # lookup forms, most specific first
    variants: tuple = ()

    @property
    def forms(self):
        return self.variants or (self.text,)


def tokenize(text):
    """Split text into lowercase word tokens and punctuation-run markers.

    Apostrophes inside words are kept ("don't").  A letter repeated three or
    more times is collapsed to two and the token is flagged as elongated;
    the single-letter collapse is kept as a fallback lookup form, so
    "sooooo" is looked up as "soo" and then "so".
    """
    tokens = []
    for m in _TOKEN_RE.finditer(text.lower().replace("’", "'")):
        if m.group("punct"):
            tokens.append(Token(m.group("punct"), kind="punct"))
            continue
        word = m.group("word")
        double = _ELONGATION_RE.sub(r"\1\1", word)
        if double != word:
            single = _ELONGATION_RE.sub(r"\1", word)
            tokens.append(Token(double, elongated=True, variants=(double, single)))
        else:
            tokens.append(Token(word))
    return tokens


def _words(tokens):
    return [t for t in tokens if t.kind == "word"]


def _lookup(mapping, token):
    for form in token.forms:
        if form in mapping:
            return mapping[form]
    return None


# --------------------------------------------------------------------------
# Lexicons
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VadLexicon:
    entries: dict
    scale_min: float = 1.0
    scale_max: float = 9.0

    def __post_init__(self):
        if not self.scale_max > self.scale_min:
            raise LexiconError("scale_max must exceed scale_min")
        for term, scores in self.entries.items():
            if term != term.lower():
                raise LexiconError(f"term {term!r} is not lowercase")
            for s in scores:
                if not self.scale_min <= s <= self.scale_max:
                    raise LexiconError(f"score {s} for {term!r} outside [{self.scale_min}, {self.scale_max}]")

    @classmethod
    def load(cls, path):
        """Read ``term<TAB>valence<TAB>arousal<TAB>dominance`` rows.

        The first line must be ``#scale <min> <max>``; other ``#`` lines and
        a ``term`` column header are skipped.
        """
        entries = {}
        scale = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n\r")
                if not line.strip():
                    continue
                if line.startswith("#"):
                    parts = line[1:].split()
                    if parts and parts[0] == "scale":
                        try:
                            scale = (float(parts[1]), float(parts[2]))
                        except (IndexError, ValueError) as exc:
                            raise LexiconError(f"{path}:{lineno}: bad #scale header") from exc
                    continue
                cols = line.split("\t")
                if cols[0].strip().lower() == "term":
                    continue
                if len(cols) != 4:
                    raise LexiconError(f"{path}:{lineno}: expected 4 tab-separated columns")
                term = cols[0].strip().lower()
                if term in entries:
                    raise LexiconError(f"{path}:{lineno}: duplicate term {term!r}")
                try:
                    entries[term] = tuple(float(c) for c in cols[1:])
                except ValueError as exc:
                    raise LexiconError(f"{path}:{lineno}: non-numeric score") from exc
        if scale is None:
            raise LexiconError(f"{path}: missing '#scale <min> <max>' header")
        return cls(entries=entries, scale_min=scale[0], scale_max=scale[1])


@dataclass(frozen=True)
class PnLexicon:
    entries: dict
    negators: frozenset = frozenset()
    boosters: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "negators", frozenset(self.negators))
        for term, strength in self.entries.items():
            if not isinstance(strength, int) or not 2 <= abs(strength) <= MAX_STRENGTH:
                raise LexiconError(f"strength of {term!r} must be an integer in -5..-2 or 2..5, got {strength!r}")
        for term, inc in self.boosters.items():
            if not isinstance(inc, int) or inc < 1:
                raise LexiconError(f"booster increment of {term!r} must be an integer >= 1")

    @classmethod
    def load(cls, path, negators=None, boosters=None):
        entries = {}
        for lineno, cols in _read_tsv(path):
            if cols[0].lower() == "term":
                continue
            if len(cols) != 2:
                raise LexiconError(f"{path}:{lineno}: expected term<TAB>strength")
            try:
                entries[cols[0].lower()] = int(cols[1])
            except ValueError as exc:
                raise LexiconError(f"{path}:{lineno}: strength must be an integer") from exc
        neg = set()
        if negators is not None:
            neg = {cols[0].lower() for _, cols in _read_tsv(negators)}
        boost = {}
        if boosters is not None:
            for lineno, cols in _read_tsv(boosters):
                try:
                    boost[cols[0].lower()] = int(cols[1]) if len(cols) > 1 else 1
                except ValueError as exc:
                    raise LexiconError(f"{boosters}:{lineno}: increment must be an integer") from exc
        return cls(entries=entries, negators=frozenset(neg), boosters=boost)


def _read_tsv(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, [c.strip() for c in line.split("\t")]


def data_path(name):
    """Path of a file shipped in ``evalpulse/data``."""
    return Path(str(resources.files("evalpulse") / "data" / name))


def load_demo_lexicons():
    """Small illustrative lexicons bundled for demos and tests."""
    vad = VadLexicon.load(data_path("demo_vad.tsv"))
    pn = PnLexicon.load(
        data_path("demo_pn.tsv"),
        negators=data_path("demo_negators.txt"),
        boosters=data_path("demo_boosters.tsv"),
    )
    return vad, pn


_STOPWORDS = None


def english_stopwords():
    global _STOPWORDS
    if _STOPWORDS is None:
        text = data_path("english_stopwords.txt").read_text(encoding="utf-8")
        _STOPWORDS = frozenset(w.strip() for w in text.splitlines() if w.strip())
    return _STOPWORDS


# --------------------------------------------------------------------------
# Scoring
# --------------------------------------------------------------------------


def score_vad(text, lex):
    """Mean V, A, D over matched words, rescaled to [0, 1].

    Returns ``(None, None, None)`` when no word matches.
    """
    hits = [s for s in (_lookup(lex.entries, t) for t in _words(tokenize(text))) if s is not None]
    if not hits:
        return None, None, None
    span = lex.scale_max - lex.scale_min
    return tuple(
        (sum(h[k] for h in hits) / len(hits) - lex.scale_min) / span for k in range(3)
    )


def _clamp(value):
    return max(-MAX_STRENGTH, min(MAX_STRENGTH, value))


def _sign(value):
    return 1 if value > 0 else -1


def score_pn(text, lex):
    """Positive and negative strengths ``(raw_p, raw_n)`` of a text.

    Rules are applied in order: a negator right before a sentiment word
    reduces it to strength +-1; a booster right before adds its increment;
    an elongated sentiment word gains one unit; a trailing run containing
    "!" adds one unit to the strongest word of each polarity.  Magnitudes
    are clamped at 5.  Negated words take no further adjustments.
    """
    tokens = tokenize(text)
    strengths = [
        _lookup(lex.entries, t) if t.kind == "word" else None for t in tokens
    ]
    negated = set()

    for i, s in enumerate(strengths):
        if s is None or i == 0:
            continue
        prev = tokens[i - 1]
        if prev.kind == "word" and any(f in lex.negators for f in prev.forms):
            strengths[i] = _sign(s)
            negated.add(i)

    for i, s in enumerate(strengths):
        if s is None or i in negated or i == 0:
            continue
        prev = tokens[i - 1]
        inc = _lookup(lex.boosters, prev) if prev.kind == "word" else None
        if inc:
            strengths[i] = _clamp(s + _sign(s) * inc)

    for i, s in enumerate(strengths):
        if s is not None and i not in negated and tokens[i].elongated:
            strengths[i] = _clamp(s + _sign(s))

    if tokens and tokens[-1].kind == "punct" and "!" in tokens[-1].text:
        for polarity in (1, -1):
            best = None
            for i, s in enumerate(strengths):
                if s is None or i in negated or _sign(s) != polarity:
                    continue
                if best is None or abs(s) > abs(strengths[best]):
                    best = i
            if best is not None:
                strengths[best] = _clamp(strengths[best] + polarity)

    raw_p = max((s for s in strengths if s is not None and s > 0), default=1)
    raw_n = min((s for s in strengths if s is not None and s < 0), default=-1)
    return raw_p, raw_n


def normalize_emotions(raw_p, raw_n):
    """Map ``raw_p`` from [1, 5] and ``raw_n`` from [-1, -5] onto [0, 1]."""
    if not 1 <= raw_p <= 5:
        raise ValueError(f"raw_p must be in [1, 5], got {raw_p}")
    if not -5 <= raw_n <= -1:
        raise ValueError(f"raw_n must be in [-5, -1], got {raw_n}")
    return (raw_p - 1) / 4, (abs(raw_n) - 1) / 4


def detect_english(text, stopword_set=None, threshold=0.10):
    """Stopword-ratio language heuristic; texts under 3 words always pass."""
    if stopword_set is None:
        stopword_set = english_stopwords()
    words = _words(tokenize(text))
    if len(words) < 3:
        return True
    hits = sum(1 for w in words if any(f in stopword_set for f in w.forms))
    return hits / len(words) >= threshold


@dataclass(frozen=True)
class EmotionScores:
    v: Optional[float] = None
    a: Optional[float] = None
    d: Optional[float] = None
    p: Optional[float] = None
    n: Optional[float] = None
    raw_p: Optional[int] = None
    raw_n: Optional[int] = None

    def to_dict(self):
        return {k: getattr(self, k) for k in ("v", "a", "d", "p", "n", "raw_p", "raw_n")}


def score_text(text, vad=None, pn=None):
    """Score one text with whichever lexicons are given."""
    v = a = d = None
    if vad is not None:
        v, a, d = score_vad(text, vad)
    p = n = raw_p = raw_n = None
    if pn is not None and text.strip():
        raw_p, raw_n = score_pn(text, pn)
        p, n = normalize_emotions(raw_p, raw_n)
    return EmotionScores(v=v, a=a, d=d, p=p, n=n, raw_p=raw_p, raw_n=raw_n)
