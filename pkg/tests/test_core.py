from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evalpulse.core import (
    DatasetError,
    EvaluationDataset,
    FilterState,
    Item,
    filter_items,
    load_dataset,
)

from conftest import AS_OF, record, write_jsonl


def test_load_three_records(tmp_path):
    path = write_jsonl(tmp_path / "d.jsonl", [record(str(i)) for i in range(3)])
    ds = load_dataset(path, "jsonl", as_of="2016-01-01")
    assert len(ds) == 3
    assert ds.filter_state is FilterState.RAW
    assert [it.id for it in ds] == ["0", "1", "2"]
    assert ds.as_of == AS_OF


def test_load_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert len(load_dataset(path)) == 0


def test_negative_count_names_line(tmp_path):
    path = write_jsonl(tmp_path / "d.jsonl", [record("a"), record("b", likes=-2)])
    with pytest.raises(DatasetError, match="negative count at line 2"):
        load_dataset(path)


def test_duplicate_id_rejected(tmp_path):
    path = write_jsonl(tmp_path / "d.jsonl", [record("a"), record("a")])
    with pytest.raises(DatasetError, match="duplicate"):
        load_dataset(path)


def test_missing_field(tmp_path):
    rec = record("a")
    del rec["dislikes"]
    path = write_jsonl(tmp_path / "d.jsonl", [rec])
    with pytest.raises(DatasetError, match="dislikes"):
        load_dataset(path)


def test_csv_matches_jsonl(tmp_path):
    recs = [record("a", likes=3), record("b", text="hello, world", dislikes=0)]
    jl = load_dataset(write_jsonl(tmp_path / "d.jsonl", recs))
    lines = ["id,text,likes,dislikes,created_at"]
    lines += [f'{r["id"]},"{r["text"]}",{r["likes"]},{r["dislikes"]},{r["created_at"]}' for r in recs]
    (tmp_path / "d.csv").write_text("\n".join(lines) + "\n")
    cs = load_dataset(tmp_path / "d.csv", "csv")
    assert [(i.id, i.text, i.likes, i.dislikes, i.created_at) for i in cs] == [
        (i.id, i.text, i.likes, i.dislikes, i.created_at) for i in jl
    ]


def test_item_rejects_non_integer_counts():
    with pytest.raises(DatasetError):
        Item("a", "x", 1.5, 2)
    with pytest.raises(DatasetError):
        Item("a", "x", True, 2)


def four_item_fixture():
    items = [
        Item("foreign", "der hund ist hier und da", 9, 4, AS_OF - timedelta(days=500)),
        Item("young", "the cat is on the mat", 9, 4, AS_OF - timedelta(days=10)),
        Item("nodislike", "this is the best of all", 9, 0, AS_OF - timedelta(days=500)),
        Item("ok", "it is a song for the ages", 9, 4, AS_OF - timedelta(days=500)),
    ]
    return EvaluationDataset(items, as_of=AS_OF)


def english(text):
    return "der" not in text.split()


def test_four_item_fixture():
    out, rep = filter_items(four_item_fixture(), language_check=english)
    assert rep.as_tuple() == (4, 2, 1)
    assert [it.id for it in out] == ["ok"]
    assert out.filter_state is FilterState.VOTE_FILTERED
    assert (rep.total_likes, rep.total_dislikes) == (9, 4)


def test_empty_dataset_report():
    out, rep = filter_items(EvaluationDataset((), as_of=AS_OF))
    assert rep.as_tuple() == (0, 0, 0)
    assert len(out) == 0


def test_age_boundary_inclusive():
    items = [Item("edge", "x", 1, 1, AS_OF - timedelta(days=365)),
             Item("late", "x", 1, 1, AS_OF - timedelta(days=365) + timedelta(seconds=1))]
    _, rep = filter_items(EvaluationDataset(items, as_of=AS_OF))
    assert rep.n_year == 1


def test_no_reference_time_drops_everything():
    ds = EvaluationDataset([Item("a", "x", 1, 1, AS_OF)])
    _, rep = filter_items(ds)
    assert rep.as_tuple() == (1, 0, 0)


def test_heavy_removal_warns(caplog):
    items = [Item(str(i), "x", 1, 0, AS_OF - timedelta(days=900)) for i in range(200)]
    _, rep = filter_items(EvaluationDataset(items, as_of=AS_OF))
    assert rep.warnings and "99%" in rep.warnings[0]
    assert "99%" in caplog.text


def test_state_cannot_move_back():
    out, _ = filter_items(four_item_fixture())
    with pytest.raises(ValueError):
        out.advance(out.items, FilterState.RAW)


item_st = st.builds(
    lambda i, likes, dislikes, age: Item(str(i), "text", likes, dislikes, AS_OF - timedelta(days=age)),
    st.integers(0, 10**6),
    st.integers(0, 5),
    st.integers(0, 5),
    st.integers(0, 800),
)


@settings(max_examples=100, deadline=None)
@given(st.lists(item_st, max_size=30, unique_by=lambda it: it.id))
def test_filter_idempotent_and_ordered(items):
    ds = EvaluationDataset(items, as_of=AS_OF)
    once, rep = filter_items(ds)
    twice, rep2 = filter_items(once)
    assert once.items == twice.items
    assert rep.n_crawled >= rep.n_year >= rep.n_ld >= 0
    assert rep2.as_tuple() == (rep.n_ld, rep.n_ld, rep.n_ld)
    assert all(it.likes >= 1 and it.dislikes >= 1 for it in once)
