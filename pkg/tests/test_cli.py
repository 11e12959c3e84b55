import json
import subprocess
import sys

import pytest

from twinreg.bench.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_data_round_trip(tmp_path, capsys):
    path = tmp_path / "wsb.csv"
    code, out, _ = run(["gen-data", "--dataset", "WSB", "--n", "25", "--out", str(path)], capsys)
    assert code == 0
    assert json.loads(out)["rows"] == 25
    header = path.read_text().splitlines()[0]
    assert header == "U,R1,R2,R3,y"


def test_run_writes_outputs(tmp_path, capsys):
    out_dir = tmp_path / "res"
    code, out, _ = run(["run", "--dataset", "WSB", "--method", "knn", "--param", "k=3",
                        "--seeds", "0", "1", "--out", str(out_dir)], capsys)
    assert code == 0
    summary = json.loads(out)
    assert summary["repetitions"] == 2
    assert (out_dir / "result.json").exists() and (out_dir / "result.csv").exists()


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": "TF", "method": "knn", "params": {"k": 2},
                               "repetitions": 4, "n_samples": 60}))
    code, out, _ = run(["run", "--config", str(cfg), "--repetitions", "2",
                        "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and json.loads(out)["repetitions"] == 2
    stored = json.loads((tmp_path / "o" / "result.json").read_text())["results"][0]["config"]
    assert stored["params"] == {"k": 2} and stored["repetitions"] == 2


def test_csv_dataset_and_split_counts(tmp_path, capsys):
    data = tmp_path / "d.csv"
    run(["gen-data", "--dataset", "TF", "--n", "50", "--out", str(data)], capsys)
    code, out, _ = run(["run", "--dataset", str(data), "--method", "rf", "--split-counts", "20", "20",
                        "--rf", "max_depth=[3]", "--rf", "max_features=[1.0]", "--rf", "min_samples_leaf=[1]",
                        "--rf", "min_samples_split=[2]", "--rf", "n_estimators=[2]",
                        "--repetitions", "1"], capsys)
    assert code == 0, out


def test_sweep_command(tmp_path, capsys):
    code, out, _ = run(["sweep", "--dataset", "WSB", "--method", "knn", "--axis", "neighbors",
                        "--values", "1", "5", "--seeds", "0", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert [r["sweep_value"] for r in json.loads(out)] == [1, 5]
    rows = (tmp_path / "result.csv").read_text().splitlines()
    assert rows[1].startswith("0,1,") and rows[2].startswith("0,5,")


def test_storage_report_command(capsys):
    code, out, _ = run(["storage-report", "--features", "13", "--ensemble-sizes", "1", "32"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "1,18433,20111"
    assert lines[2] == "32,589856,20545"
    assert lines[3].endswith(": 2")


def test_bv_diag_command(capsys):
    code, out, _ = run(["bv-diag", "--trials", "60", "--degree", "3"], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["trials"] == 60 and res["holds"] is True


def test_multiplier_check_command(capsys):
    code, out, _ = run(["multiplier-check", "--dataset", "TF", "--n-samples", "60", "--seeds", "0",
                        "--multipliers", "1", "2", "--mlp", "hidden=[4]", "--mlp", "max_epochs=2"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["verdict"] in ("ok", "reject-tnnr")
    assert len(report["rmse"]) == 2


@pytest.mark.parametrize("argv,kind", [
    (["run", "--method", "nope"], "invalid-argument"),
    (["sweep", "--method", "knn", "--axis", "lambda", "--values", "1"], "invalid-argument"),
    (["run", "--dataset", "/nonexistent/file.csv", "--method", "knn", "--repetitions", "1"], "experiment"),
    (["run", "--method", "knn", "--param", "k"], "invalid-argument"),
])
def test_errors_are_json(argv, kind, capsys):
    code, _, err = run(argv, capsys)
    assert code != 0
    payload = json.loads(err)
    assert payload["error"] == kind and payload["message"]


def test_usage_error_is_json_and_nonzero(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["frobnicate"])
    assert ei.value.code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "usage"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "twinreg", "storage-report", "--features", "2",
                           "--ensemble-sizes", "1"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "ensemble_size,ann_parameters,tnnr_parameters"
