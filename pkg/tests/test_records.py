import json

import pytest

from sqlcalib.records import (
    Alternative,
    DatasetError,
    PredictionRecord,
    RecordError,
    dataset_summary,
    load_dataset,
    make_dataset,
    write_dataset,
)


def _line(**overrides):
    obj = {"id": "q1", "schema_id": "concert_singer", "label": 1, "token_probs": [0.9, 0.8]}
    obj.update(overrides)
    return json.dumps(obj)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_load_valid_file_preserves_order(tmp_path):
    path = tmp_path / "data.jsonl"
    write_lines(path, [_line(id=f"q{i}", label=i % 2) for i in range(50)])
    ds = load_dataset(path)
    assert len(ds.records) == 50
    assert [r.id for r in ds.records] == [f"q{i}" for i in range(50)]


def test_empty_file_errors(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(DatasetError, match="empty dataset"):
        load_dataset(path)


def test_bad_label_names_record_and_field(tmp_path):
    path = tmp_path / "bad.jsonl"
    write_lines(path, [_line(), _line(id="q2", label=2)])
    with pytest.raises(RecordError) as err:
        load_dataset(path)
    assert err.value.record_id == "q2"
    assert err.value.field_name == "label"


def test_malformed_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    write_lines(path, [_line(), "{not json", _line(id="q3")])
    with pytest.raises(DatasetError, match=":2"):
        load_dataset(path)


def test_duplicate_id_rejected(tmp_path):
    path = tmp_path / "dup.jsonl"
    write_lines(path, [_line(), _line()])
    with pytest.raises(DatasetError, match="duplicate"):
        load_dataset(path)


@pytest.mark.parametrize(
    "field,value",
    [
        ("token_probs", []),
        ("token_probs", [0.5, 0.0]),
        ("token_probs", [1.2]),
        ("verbalized_prob", 1.3),
        ("verbalized_prob", -0.1),
    ],
)
def test_field_invariants(tmp_path, field, value):
    path = tmp_path / "bad.jsonl"
    write_lines(path, [_line(**{field: value})])
    with pytest.raises(RecordError) as err:
        load_dataset(path)
    assert err.value.field_name == field


def test_token_prob_of_exactly_one_is_legal():
    r = PredictionRecord(id="a", schema_id="s", label=0, token_probs=(1.0,))
    assert r.token_probs == (1.0,)


def test_self_check_must_not_both_be_zero():
    with pytest.raises(RecordError) as err:
        PredictionRecord(id="a", schema_id="s", label=0, self_check_bool=(0.0, 0.0))
    assert err.value.field_name == "self_check_bool"


def test_missing_optional_fields_are_legal(tmp_path):
    path = tmp_path / "minimal.jsonl"
    write_lines(path, [json.dumps({"id": "a", "schema_id": "s", "label": 0})])
    ds = load_dataset(path)
    record = ds.records[0]
    assert record.token_probs is None
    assert record.self_check_bool is None
    assert record.verbalized_prob is None
    assert record.alternatives is None


def test_round_trip_reproduces_records(tmp_path):
    path = tmp_path / "data.jsonl"
    write_lines(
        path,
        [
            _line(
                question="how many singers",
                self_check_bool={"p_true": 0.6, "p_false": 0.2},
                verbalized_prob=0.7,
                alternatives=[{"score": 0.5, "equivalent": False}],
                custom_tag="kept",
            ),
            _line(id="q2", label=0),
        ],
    )
    ds = load_dataset(path)
    out = tmp_path / "copy.jsonl"
    write_dataset(ds, out)
    again = load_dataset(out)
    assert again.records == ds.records
    assert ds.records[0].extra == {"custom_tag": "kept"}
    assert ds.records[0].alternatives == (Alternative(score=0.5, equivalent=False),)


def test_summary_counts_and_pct():
    records = [
        PredictionRecord(id=f"r{i}", schema_id=f"s{i % 3}", label=label)
        for i, label in enumerate([1, 0, 1, 0])
    ]
    summary = dataset_summary(make_dataset(records, "t"))
    assert summary.n_records == 4
    assert summary.n_schemas == 3
    assert summary.pct_correct == 50.0


def test_summary_all_correct():
    records = [PredictionRecord(id=f"r{i}", schema_id="s", label=1) for i in range(7)]
    assert dataset_summary(make_dataset(records, "t")).pct_correct == 100.0


def test_summary_matches_file_line_count(tmp_path):
    path = tmp_path / "data.jsonl"
    write_lines(path, [_line(id=f"q{i}", schema_id=f"db{i % 11}") for i in range(1034)])
    summary = dataset_summary(load_dataset(path))
    assert summary.n_records == 1034
    assert summary.n_schemas == 11
