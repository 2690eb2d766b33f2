"""Evaluated items, dataset loading and the language/age/vote filter pipeline."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Optional

if TYPE_CHECKING:
    from .dualreg import RegimeLabel
    from .sentiment import EmotionScores

log = logging.getLogger(__name__)

REQUIRED_FIELDS = ("id", "text", "likes", "dislikes")


class DatasetError(ValueError):
    """Malformed input data."""


class FilterState(str, Enum):
    RAW = "raw"
    LANGUAGE_AND_AGE_FILTERED = "language_and_age_filtered"
    VOTE_FILTERED = "vote_filtered"


_STATE_RANK = {s: i for i, s in enumerate(FilterState)}


@dataclass(frozen=True)
class Item:
    id: str
    text: str
    likes: int
    dislikes: int
    created_at: Optional[datetime] = None
    emotions: Optional["EmotionScores"] = None
    regime: Optional["RegimeLabel"] = None

    def __post_init__(self):
        for name in ("likes", "dislikes"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise DatasetError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise DatasetError(f"negative count for {name} in item {self.id!r}")


@dataclass(frozen=True)
class EvaluationDataset:
    items: tuple
    source_label: str = ""
    as_of: Optional[datetime] = None
    filter_state: FilterState = FilterState.RAW

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise DatasetError(f"duplicate item id {item.id!r}")
            seen.add(item.id)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def advance(self, items, state):
        """Return a copy holding ``items`` at a later (or equal) filter state."""
        if _STATE_RANK[FilterState(state)] < _STATE_RANK[self.filter_state]:
            raise ValueError(f"cannot move from {self.filter_state.value} back to {state}")
        return replace(self, items=tuple(items), filter_state=FilterState(state))


@dataclass(frozen=True)
class FilterReport:
    n_crawled: int
    n_year: int
    n_ld: int
    total_likes: int
    total_dislikes: int
    warnings: tuple = field(default_factory=tuple)

    def as_tuple(self):
        return (self.n_crawled, self.n_year, self.n_ld)

    def to_dict(self):
        return {
            "n_crawled": self.n_crawled,
            "n_year": self.n_year,
            "n_ld": self.n_ld,
            "total_likes": self.total_likes,
            "total_dislikes": self.total_dislikes,
            "warnings": list(self.warnings),
        }


def parse_timestamp(value):
    """Parse an ISO-8601 date or datetime; naive values are taken as UTC."""
    if isinstance(value, datetime):
        ts = value
    else:
        text = str(value).strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def _parse_count(value, name, lineno):
    if isinstance(value, bool):
        raise DatasetError(f"line {lineno}: field {name!r} must be an integer, got {value!r}")
    if isinstance(value, int):
        count = value
    elif isinstance(value, str) and value.strip().lstrip("+-").isdigit():
        count = int(value.strip())
    else:
        raise DatasetError(f"line {lineno}: field {name!r} must be an integer, got {value!r}")
    if count < 0:
        raise DatasetError(f"negative count at line {lineno}: field {name!r} = {count}")
    return count


def _record_to_item(record, lineno):
    if not isinstance(record, dict):
        raise DatasetError(f"line {lineno}: record must be an object")
    for name in REQUIRED_FIELDS:
        if name not in record or record[name] is None:
            raise DatasetError(f"line {lineno}: missing field {name!r}")
    if not isinstance(record["text"], str):
        raise DatasetError(f"line {lineno}: field 'text' must be a string")
    created = record.get("created_at")
    if created in (None, ""):
        created_at = None
    else:
        try:
            created_at = parse_timestamp(created)
        except (TypeError, ValueError) as exc:
            raise DatasetError(f"line {lineno}: field 'created_at' is not ISO-8601: {created!r}") from exc
    return Item(
        id=str(record["id"]),
        text=record["text"],
        likes=_parse_count(record["likes"], "likes", lineno),
        dislikes=_parse_count(record["dislikes"], "dislikes", lineno),
        created_at=created_at,
    )


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            yield lineno, record


def _iter_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        missing = [f for f in REQUIRED_FIELDS if f not in reader.fieldnames]
        if missing:
            raise DatasetError(f"line 1: header lacks field(s) {', '.join(missing)}")
        for record in reader:
            # reader.line_num is the physical line the record ended on
            yield reader.line_num, record


def load_dataset(path, format="jsonl", as_of=None):
    """Read items from a JSONL or CSV file, preserving record order."""
    path = Path(path)
    if format == "jsonl":
        records = _iter_jsonl(path)
    elif format == "csv":
        records = _iter_csv(path)
    else:
        raise DatasetError(f"unsupported format {format!r}")
    items = []
    seen = {}
    for lineno, record in records:
        item = _record_to_item(record, lineno)
        if item.id in seen:
            raise DatasetError(f"line {lineno}: duplicate id {item.id!r} (first seen at line {seen[item.id]})")
        seen[item.id] = lineno
        items.append(item)
    return EvaluationDataset(
        items=tuple(items),
        source_label=str(path),
        as_of=parse_timestamp(as_of) if as_of is not None else None,
        filter_state=FilterState.RAW,
    )


def filter_items(
    ds: EvaluationDataset,
    min_age_days: int = 365,
    min_likes: int = 1,
    min_dislikes: int = 1,
    language_check: Optional[Callable[[str], bool]] = None,
):
    """Apply the language, age and vote filters.

    Returns the surviving dataset (state ``vote_filtered``) and a report of
    the counts after each stage.  ``language_check=None`` admits every
    text.  Items without ``created_at`` fail the age check, as does every
    item when the dataset has no ``as_of`` reference time.
    """
    cutoff = ds.as_of - timedelta(days=min_age_days) if ds.as_of is not None else None

    def old_enough(item):
        return cutoff is not None and item.created_at is not None and item.created_at <= cutoff

    stage1 = [
        it
        for it in ds.items
        if (language_check is None or language_check(it.text)) and old_enough(it)
    ]
    stage2 = [it for it in stage1 if it.likes >= min_likes and it.dislikes >= min_dislikes]

    warnings = []
    n = len(ds.items)
    if n and len(stage2) < 0.01 * n:
        msg = f"filters removed {n - len(stage2)} of {n} items (>99%)"
        log.warning(msg)
        warnings.append(msg)

    report = FilterReport(
        n_crawled=n,
        n_year=len(stage1),
        n_ld=len(stage2),
        total_likes=sum(it.likes for it in stage2),
        total_dislikes=sum(it.dislikes for it in stage2),
        warnings=tuple(warnings),
    )
    return ds.advance(stage2, FilterState.VOTE_FILTERED), report
