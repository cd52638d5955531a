import csv
import io
import json
import subprocess
import sys

import pytest

from padyule import cli


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_pmf_csv(capsys):
    code, out, _ = run(["pmf", "--lambda1", "1", "--lambda2", "1", "--mu2", "0", "--jmax", "10"],
                       capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["j", "p_j"] and len(rows) == 12
    assert rows[2] == ["1", "0.5"]


def test_pmf_values_round_trip(capsys):
    from padyule import ModelParams, limit_pmf
    _, out, _ = run(["pmf", "--lambda2", "2", "--mu2", "1", "--jmax", "50"], capsys)
    vals = [float(r[1]) for r in list(csv.reader(io.StringIO(out)))[1:]]
    assert vals == limit_pmf(ModelParams(1, 2, 1), 50).values.tolist()


def test_moments_json(capsys):
    code, out, _ = run(["moments", "--lambda1", "1", "--lambda2", "1", "--mu2", "1"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["mean"] == 1 and doc["variance"] == 2


def test_moments_infinity_marker(capsys):
    _, out, _ = run(["moments", "--lambda1", "1", "--lambda2", "2", "--mu2", "0"], capsys)
    doc = json.loads(out)
    assert doc["mean"] == "inf" and doc["variance"] == "inf"


def test_tail(capsys):
    _, out, _ = run(["tail", "--lambda2", "1", "--mu2", "2", "--jmax", "100"], capsys)
    doc = json.loads(out)
    assert doc["geometric_ratio"] == 0.5 and doc["power_exponent"] == -2.0
    assert doc["constant"] == pytest.approx(4.0)
    assert 0 < doc["tail_mass_bound"] < 1e-20


def test_critical_decay(capsys):
    _, out, _ = run(["critical-decay", "--mu2", "1", "--jmax", "1024"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["j", "power_scaled", "exp_scaled", "log_p"]
    assert [int(r[0]) for r in rows[1:]] == [128, 256, 512, 1024]


def test_simulate_and_events(tmp_path, capsys):
    ev = tmp_path / "events.csv"
    code, out, _ = run(["simulate", "--lambda2", "2", "--mu2", "1", "--steps", "200",
                        "--seed", "3", "--events", str(ev)], capsys)
    assert code == 0
    assert out.splitlines()[0] == "j,mass"
    lines = ev.read_text().splitlines()
    assert lines[0] == "step,kind,vertex" and len(lines) == 201


def test_simulate_ensemble_json(capsys):
    _, out, _ = run(["simulate", "--steps", "100", "--runs", "5", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["num_runs"] == 5 and abs(sum(doc["mass"]) - 1) < 1e-12


def test_yule_csv(capsys):
    _, out, _ = run(["yule", "--censuses", "20", "--mu2", "0.5", "--seed", "9"], capsys)
    lines = out.splitlines()
    assert lines[0] == "census_index,clock,kind,household" and len(lines) == 21


def test_yule_json(capsys):
    _, out, _ = run(["yule", "--censuses", "20", "--format", "json"], capsys)
    doc = json.loads(out)
    assert doc["num_households"] == len(doc["sizes"]) == len(doc["formation_times"]) + 1


def test_verify_embedding_small_sample(capsys):
    code, out, err = run(["verify-embedding", "--samples", "999"], capsys)
    assert code != 0 and out == ""
    doc = json.loads(err)
    assert set(doc) == {"code", "message"} and doc["code"] == "domain_error"


def test_verify_embedding_runs(capsys):
    code, out, _ = run(["verify-embedding", "--lambda2", "2", "--mu2", "1", "--t", "30",
                        "--samples", "2000", "--seed", "4"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["report"]["verdict"] == "pass"


def test_compare_ensemble(capsys):
    _, out, _ = run(["compare", "--steps", "2000", "--runs", "20"], capsys)
    rep = json.loads(out)["report"]
    assert 0 <= rep["total_variation"] < 0.1


def test_compare_input_file(tmp_path, capsys):
    f = tmp_path / "h.csv"
    run(["simulate", "--steps", "5000", "--out", str(f)], capsys)
    code, out, _ = run(["compare", "--input", str(f)], capsys)
    assert code == 0 and json.loads(out)["report"]["chi_square_kind"] == "divergence"


@pytest.mark.parametrize("argv", [
    ["pmf", "--lambda1", "-1"],
    ["pmf", "--jmax", "0"],
    ["simulate", "--steps", "-5"],
    ["simulate", "--seed", "-1"],
    ["tail", "--mu2", "1"],
    ["critical-decay", "--mu2", "0"],
    ["compare", "--input", "/nonexistent/file.csv"],
])
def test_failures_emit_one_json_object(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 1 and out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1 and set(json.loads(lines[0])) == {"code", "message"}


@pytest.mark.parametrize("argv", [["nope"], ["pmf", "--bogus"], ["pmf", "--jmax", "x"], []])
def test_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and json.loads(err)["code"] == "usage_error"


def test_byte_reproducible(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"o{k}.csv"
        run(["simulate", "--steps", "3000", "--runs", "4", "--seed", "8", "--out", str(path)],
            capsys)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "padyule", "moments", "--mu2", "2"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["mean"] == 0.5
