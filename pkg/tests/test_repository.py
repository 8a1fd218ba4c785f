import io
import json

import numpy as np
import pytest

from db.models import RunRecord, TensorRecord
from db.repository import (dump_json, load_run, load_spec, load_tensor_record, parse_json, read_samples,
                           save_run, save_tensor, write_samples)
from src.core.errors import ConflictingEntry, InputError
from src.core.tensor import canonical_tensor


def test_tensor_record_round_trip(tmp_path, canonical):
    record = TensorRecord.from_tensor(canonical, beta=np.eye(3))
    path = str(tmp_path / "t.json")
    save_tensor(record, path)
    loaded = load_tensor_record(path)
    assert loaded.to_tensor() == canonical
    np.testing.assert_array_equal(load_spec(path).beta, np.eye(3))


def test_defaults_fill_beta_and_mean(tensor_file, canonical_payload):
    spec = load_spec(tensor_file(canonical_payload))
    np.testing.assert_array_equal(spec.beta, np.eye(3))
    np.testing.assert_array_equal(spec.mean, np.zeros(3))
    assert spec.alpha == canonical_tensor(0.5)


@pytest.mark.parametrize("text", ['{"dimension": 3, "alpha": [{"index": [0, 0, 0], "value": NaN}]}',
                                  '{"dimension": 3, "alpha": [], "mean": [Infinity, 0, 0]}',
                                  '{"dimension": 3, "alpha": [',
                                  '[1, 2, 3]'])
def test_malformed_input_is_rejected(text):
    with pytest.raises(InputError):
        TensorRecord.from_dict(parse_json(text))


@pytest.mark.parametrize("payload", [
    {"alpha": []},
    {"dimension": 0, "alpha": []},
    {"dimension": 3, "alpha": [{"index": [0, 0], "value": 1.0}]},
    {"dimension": 3, "alpha": [{"index": [0, 0, 0]}]},
    {"dimension": 2, "alpha": [], "beta": [[1.0, 0.0]]},
])
def test_bad_fields_are_rejected(payload):
    with pytest.raises(InputError):
        TensorRecord.from_dict(payload)


def test_conflicts_surface_when_building(tensor_file):
    path = tensor_file({"dimension": 3, "alpha": [{"index": [0, 1, 2], "value": 1.0},
                                                  {"index": [2, 1, 0], "value": -1.0}]})
    with pytest.raises(ConflictingEntry):
        load_spec(path)


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        load_tensor_record(str(tmp_path / "nope.json"))


def test_dump_json_writes_null_for_non_finite():
    out = io.StringIO()
    dump_json({"b": float("inf"), "a": np.array([1.0, np.nan])}, stream=out)
    assert json.loads(out.getvalue()) == {"a": [1.0, None], "b": None}
    assert out.getvalue().index('"a"') < out.getvalue().index('"b"')


def test_csv_samples_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    blocks = [rng.standard_normal((4, 3)), rng.standard_normal((3, 3))]
    path = tmp_path / "samples.csv"
    with open(path, "w") as f:
        assert write_samples(blocks, "csv", f) == 7
    assert path.read_text().count("x1,x2,x3") == 1
    np.testing.assert_array_equal(read_samples(str(path)), np.vstack(blocks))


def test_jsonl_samples(tmp_path):
    blocks = [np.array([[0.5, -1.0, 2.0]]), np.array([[1.0, 0.0, -0.25]])]
    path = tmp_path / "samples.jsonl"
    with open(path, "w") as f:
        write_samples(blocks, "jsonl", f)
    lines = path.read_text().strip().splitlines()
    assert [json.loads(line) for line in lines] == [{"x1": 0.5, "x2": -1.0, "x3": 2.0},
                                                    {"x1": 1.0, "x2": 0.0, "x3": -0.25}]
    np.testing.assert_array_equal(read_samples(str(path)), np.vstack(blocks))


def test_unknown_sample_format():
    with pytest.raises(InputError):
        write_samples([], "parquet", io.StringIO())


def test_run_records(tmp_path):
    path = save_run(RunRecord(command="verify", seed=3, passed=True, result={"x": float("nan")}),
                    str(tmp_path))
    loaded = load_run(path)
    assert loaded.command == "verify" and loaded.seed == 3 and loaded.passed
    assert loaded.result == {"x": None}
    assert loaded.created_at is not None
