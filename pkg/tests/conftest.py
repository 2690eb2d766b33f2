import json
from datetime import datetime, timedelta, timezone

import pytest

from evalpulse.sentiment import data_path

AS_OF = datetime(2016, 1, 1, tzinfo=timezone.utc)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def record(id, text="the cat is on the mat", likes=5, dislikes=2, age_days=400):
    return {
        "id": id,
        "text": text,
        "likes": likes,
        "dislikes": dislikes,
        "created_at": (AS_OF - timedelta(days=age_days)).isoformat(),
    }


@pytest.fixture
def lexicon_args():
    return [
        "--vad-lexicon", str(data_path("demo_vad.tsv")),
        "--pn-lexicon", str(data_path("demo_pn.tsv")),
        "--negators", str(data_path("demo_negators.txt")),
        "--boosters", str(data_path("demo_boosters.tsv")),
    ]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
