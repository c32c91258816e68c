import json

import pytest

from revealed_loss.core import Action, BenchmarkCost, CostVector, Regime
from revealed_loss.exceptions import IntegrityError, ParseError, RangeError
from revealed_loss.io import load_catalog, load_dataset, record_from_dict, write_catalog, write_dataset
from revealed_loss.simulator import StudySpec, simulate_study

GOOD = [
    {"case_id": "c1", "domain": "cardiac", "p_elicited": 0.7, "p_true": 0.65, "theta": 1,
     "actions": {"baseline": "defer", "cost:fn4_d0.3": "yes"},
     "self_report_global": [1, 10, 2], "self_report_case": None,
     "belief_replicates": [0.7, 0.65, 0.7, 0.75, 0.7]},
    {"case_id": "c2", "domain": "cardiac", "p_elicited": 0.1, "actions": {"baseline": "no"}},
]


def write_lines(path, rows):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in rows))
    return path


def test_two_record_file(tmp_path):
    ds = load_dataset(write_lines(tmp_path / "d.jsonl", GOOD))
    assert len(ds.records) == 2
    first = ds.records[0]
    assert first.action("cost:fn4_d0.3") is Action.POSITIVE
    assert first.self_report_global == CostVector(1, 10, 2)
    assert ds.records[1].p_true is None and ds.records[1].theta is None
    assert ds.domains == ["cardiac"]
    assert ds.benchmark("fn4_d0.3").cost == CostVector(1, 4, 0.3)


def test_probability_out_of_range_names_field(tmp_path):
    bad = dict(GOOD[1], p_elicited=1.3)
    with pytest.raises(RangeError) as err:
        load_dataset(write_lines(tmp_path / "d.jsonl", [GOOD[0], bad]))
    assert err.value.field == "p_elicited"
    assert err.value.line == 2 and err.value.case_id == "c2"
    assert "p_elicited" in str(err.value)


def test_unknown_benchmark(tmp_path):
    bad = dict(GOOD[1], actions={"cost:fn3_d0.2": "yes"})
    with pytest.raises(IntegrityError) as err:
        load_dataset(write_lines(tmp_path / "d.jsonl", [bad]))
    assert "fn3_d0.2" in str(err.value)


def test_duplicate_case_id(tmp_path):
    with pytest.raises(IntegrityError) as err:
        load_dataset(write_lines(tmp_path / "d.jsonl", [GOOD[0], GOOD[0]]))
    assert err.value.case_id == "c1" and err.value.line == 2


def test_malformed_line_number(tmp_path):
    with pytest.raises(ParseError) as err:
        load_dataset(write_lines(tmp_path / "d.jsonl", [GOOD[0], "{not json", GOOD[1]]))
    assert err.value.line == 2


def test_collects_every_violation(tmp_path):
    rows = [dict(GOOD[1], p_elicited=2.0), "oops", GOOD[0], GOOD[0]]
    with pytest.raises(RangeError) as err:
        load_dataset(write_lines(tmp_path / "d.jsonl", rows))
    kinds = [(v["error"], v["line"]) for v in err.value.violations]
    assert kinds == [("RangeError", 1), ("ParseError", 2), ("IntegrityError", 4)]
    record = err.value.to_record()
    assert record["error"] == "RangeError" and len(record["violations"]) == 3


@pytest.mark.parametrize("patch, error", [
    ({"theta": 2}, RangeError),
    ({"theta": True}, RangeError),
    ({"actions": {"baseline": "maybe"}}, ParseError),
    ({"actions": {"sideways": "yes"}}, ParseError),
    ({"self_report_case": [1, 2]}, ParseError),
    ({"self_report_case": [1, -2, 3]}, RangeError),
    ({"belief_replicates": [0.5, 1.5]}, RangeError),
    ({"p_true": "high"}, ParseError),
    ({"colour": "red"}, ParseError),
])
def test_record_validation(patch, error):
    with pytest.raises(error):
        record_from_dict(dict(GOOD[1], **patch))


def test_missing_required_field():
    row = dict(GOOD[1])
    del row["domain"]
    with pytest.raises(ParseError) as err:
        record_from_dict(row)
    assert err.value.field == "domain"


def test_round_trip(tmp_path):
    records, catalog = simulate_study(StudySpec(n_cases_per_domain=25, seed=4))
    data = write_dataset(tmp_path / "d.jsonl", records)
    cat = write_catalog(tmp_path / "c.csv", catalog)
    loaded = load_dataset(data, cat)
    assert loaded.records == records
    assert loaded.benchmark_catalog == catalog
    again = write_dataset(tmp_path / "e.jsonl", loaded.records)
    assert again.read_bytes() == data.read_bytes()


def test_catalog_formats(tmp_path):
    csv_path = tmp_path / "c.csv"
    csv_path.write_text("id,c_fp,c_fn,c_defer\nk1,1,4,0.5\n")
    json_path = tmp_path / "c.json"
    json_path.write_text(json.dumps([{"id": "k1", "c_fp": 1, "c_fn": 4, "c_defer": 0.5}]))
    expected = [BenchmarkCost("k1", CostVector(1, 4, 0.5))]
    assert load_catalog(csv_path) == expected == load_catalog(json_path)


@pytest.mark.parametrize("text, error", [
    ("id,c_fp,c_fn\nk1,1,4\n", ParseError),
    ("id,c_fp,c_fn,c_defer\nk1,1,x,0.5\n", ParseError),
    ("id,c_fp,c_fn,c_defer\nk1,1,-4,0.5\n", RangeError),
    ("id,c_fp,c_fn,c_defer\nk1,1,4,0.5\nk1,1,2,0.5\n", IntegrityError),
])
def test_catalog_errors(tmp_path, text, error):
    path = tmp_path / "c.csv"
    path.write_text(text)
    with pytest.raises(error):
        load_catalog(path)


def test_custom_catalog_resolves_regimes(tmp_path):
    row = dict(GOOD[1], actions={"cost:mine": "no"})
    ds = load_dataset(write_lines(tmp_path / "d.jsonl", [row]), [BenchmarkCost("mine", CostVector(2, 1, 1))])
    assert ds.regimes == [Regime("cost", "mine")]
