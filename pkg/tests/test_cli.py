import json
import os

import jsonschema
import pytest

from src.cli.main import EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_OK, EXIT_USAGE, run
from src.config import settings


def _schema(name):
    with open(os.path.join(settings.SCHEMA_DIR, f"{name}.schema.json")) as f:
        return json.load(f)


def _stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def _stderr_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_classify_canonical(capsys, tensor_file, canonical_payload):
    assert run(["classify", "--input", tensor_file(canonical_payload)]) == EXIT_OK
    payload = _stdout_json(capsys)
    jsonschema.validate(payload, _schema("classification"))
    assert payload['variant'] == "CaseI"
    assert payload['a'] == pytest.approx(0.5)


def test_classify_rejected_exits_one(capsys, tensor_file):
    path = tensor_file({"dimension": 3, "alpha": [
        {"index": [0, 0, 2], "value": 1.0},
        {"index": [1, 1, 2], "value": 1.0},
        {"index": [2, 2, 2], "value": 0.5},
    ]})
    assert run(["classify", "--input", path]) == EXIT_CHECK_FAILED
    payload = _stdout_json(capsys)
    jsonschema.validate(payload, _schema("classification"))
    assert payload['reason'] == "obstruction"


def test_conflicting_entries_exit_three(capsys, tensor_file):
    path = tensor_file({"dimension": 3, "alpha": [
        {"index": [0, 0, 2], "value": 0.5},
        {"index": [2, 0, 0], "value": 0.25},
    ]})
    assert run(["validate", "--input", path]) == EXIT_INPUT
    error = _stderr_json(capsys)
    jsonschema.validate(error, _schema("error"))
    assert error['error'] == "ConflictingEntry"


def test_nan_is_an_input_error(capsys, tensor_file):
    path = tensor_file('{"dimension": 3, "alpha": [{"index": [0, 0, 2], "value": NaN}]}')
    assert run(["validate", "--input", path]) == EXIT_INPUT
    assert _stderr_json(capsys)['error'] == "InputError"


def test_missing_file_is_an_input_error(capsys, tmp_path):
    assert run(["classify", "--input", str(tmp_path / "absent.json")]) == EXIT_INPUT
    jsonschema.validate(_stderr_json(capsys), _schema("error"))


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["moments", "--input", "x.json"],
    ["moments", "--input", "x.json", "--index", "1,0,0", "--max-degree", "3"],
    ["sample", "--a", "0.5", "--n", "ten"],
])
def test_usage_errors_exit_two(capsys, argv):
    assert run(argv) == EXIT_USAGE
    assert _stderr_json(capsys)['error'] == "UsageError"


def test_help_exits_zero(capsys):
    assert run(["--help"]) == EXIT_OK
    assert "exit codes" in capsys.readouterr().out


def test_validate_passes_and_fails(capsys, tensor_file, canonical_payload):
    assert run(["validate", "--input", tensor_file(canonical_payload)]) == EXIT_OK
    jsonschema.validate(_stdout_json(capsys), _schema("validate"))

    tampered = {"dimension": 3, "alpha": [
        {"index": [0, 0, 2], "value": 1.0},
        {"index": [1, 1, 2], "value": 1.0},
        {"index": [2, 2, 2], "value": 0.5},
    ]}
    assert run(["validate", "--input", tensor_file(tampered, "b.json")]) == EXIT_CHECK_FAILED
    payload = _stdout_json(capsys)
    assert payload['lcc']['passed'] and not payload['obstructions']['passed']


def test_moments_json(capsys, tensor_file, canonical_payload):
    path = tensor_file(canonical_payload)
    assert run(["moments", "--input", path, "--max-degree", "3", "--exact"]) == EXIT_OK
    payload = _stdout_json(capsys)
    jsonschema.validate(payload, _schema("moments"))
    rows = {tuple(r['index']): r for r in payload['moments']}
    assert rows[(2, 0, 1)]['exact'] == "1/1"
    assert rows[(0, 0, 3)]['value'] == 1.0
    assert len(rows) == 20


def test_moments_csv(capsys, tensor_file, canonical_payload):
    path = tensor_file(canonical_payload)
    assert run(["moments", "--input", path, "--index", "4,0,0", "--exact", "--format", "csv"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "index,value"
    assert lines[1] == '"4,0,0",4.5'


def test_laplace(capsys):
    assert run(["laplace", "--a", "0.5", "--at", "0,0,0.5"]) == EXIT_OK
    payload = _stdout_json(capsys)
    jsonschema.validate(payload, _schema("laplace"))
    assert payload['value'] == pytest.approx(1.16268, abs=1e-5)

    assert run(["laplace", "--a", "0.5", "--at", "0,0,3"]) == EXIT_OK
    payload = _stdout_json(capsys)
    assert payload['in_domain'] is False and payload['value'] is None


def test_sample_jsonl_rows_match_schema(capsys):
    assert run(["sample", "--a", "0.6", "--n", "50", "--seed", "3"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 50
    schema = _schema("sample_row")
    for line in lines:
        jsonschema.validate(json.loads(line), schema)


def test_sample_is_reproducible(capsys):
    run(["sample", "--a", "1", "--n", "20", "--seed", "8", "--format", "csv"])
    first = capsys.readouterr().out
    run(["sample", "--a", "1", "--n", "20", "--seed", "8", "--format", "csv", "--workers", "1"])
    assert capsys.readouterr().out == first
    assert first.splitlines()[0] == "x1,x2,x3"


def test_sample_rejects_bad_parameter(capsys):
    assert run(["sample", "--a", "1.5", "--n", "5"]) == EXIT_INPUT
    assert _stderr_json(capsys)['error'] == "InvalidParam"


def test_oracle_meixner1(capsys, tensor_file, canonical_payload):
    assert run(["oracle", "--input", tensor_file(canonical_payload), "--check", "meixner1"]) == EXIT_OK
    payload = _stdout_json(capsys)
    jsonschema.validate(payload, _schema("oracle"))
    assert payload['passed']


def test_output_file(tmp_path, tensor_file, canonical_payload):
    out = tmp_path / "result.json"
    assert run(["classify", "--input", tensor_file(canonical_payload), "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())['variant'] == "CaseI"


@pytest.mark.slow
def test_verify_canonical(capsys):
    assert run(["verify", "--a", "0.5", "--seed", "1"]) == EXIT_OK
    payload = _stdout_json(capsys)
    jsonschema.validate(payload, _schema("verify"))
    assert payload['passed'] and payload['seed'] == 1


def test_log_dir_keeps_audit_and_run_record(capsys, tmp_path, tensor_file, canonical_payload):
    log_dir = tmp_path / "logs"
    assert run(["classify", "--input", tensor_file(canonical_payload), "--log-dir", str(log_dir)]) == EXIT_OK
    events = [json.loads(line)['event_type'] for line in (log_dir / "audit.log").read_text().splitlines()]
    assert "CLI_RUN" in events
    runs = list((log_dir / "runs").glob("classify-*.json"))
    assert len(runs) == 1
    assert json.loads(runs[0].read_text())['result']['variant'] == "CaseI"
