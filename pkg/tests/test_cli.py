import json

import pytest

from csoclosure import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_weights_kakutani(capsys):
    code, out, _ = run(capsys, "weights", "--seq", "kakutani", "--n", "8")
    assert code == 0
    assert json.loads(out)["weights"] == ["1", "1/2", "1", "1/4", "1", "1/2", "1", "1/8"]


def test_weights_example_notations(capsys):
    _, out, _ = run(capsys, "weights", "--seq", "example", "--n", "3")
    assert json.loads(out)["weights"] == ["1", "1/2", "28/27"]
    _, out, _ = run(capsys, "weights", "--seq", "example", "--n", "3", "--notation", "triadic")
    assert json.loads(out)["weights"] == ["1", "1/2", "1+3^-3"]


def test_weights_from_file_csv(capsys, tmp_path):
    f = tmp_path / "w.txt"
    f.write_text("3/7\n2\n")
    code, out, _ = run(capsys, "weights", "--seq", f"file:{f}", "--n", "2", "--format", "csv")
    assert code == 0
    assert out == "n,weight\n1,3/7\n2,2\n"


def test_truncate(capsys):
    _, out, _ = run(capsys, "truncate", "--eps", "1/4", "--n", "15")
    doc = json.loads(out)
    assert doc["decomposition"]["zero_positions"] == [4, 8, 12]
    assert doc["palindromic"] is True
    assert doc["distance"] == "1/4"


def test_approximate_and_verify_via_out_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path))
    code, _, _ = run(capsys, "approximate", "--eps", "1/4", "--rounds", "2", "--out", "cert.json")
    assert code == 0
    path = tmp_path / "cert.json"
    first = path.read_text()
    assert json.loads(first)["plan"]["N"] == 32
    run(capsys, "approximate", "--eps", "1/4", "--rounds", "2", "--out", "cert.json")
    assert path.read_text() == first
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 0 and json.loads(out)["checks"] == "all passed"


def test_exit_codes(capsys):
    assert run(capsys, "weights", "--n", "0")[0] == 2
    assert run(capsys, "truncate", "--eps=-1/2")[0] == 2
    assert run(capsys, "weights", "--seq", "nope")[0] == 2
    code, _, err = run(capsys, "approximate", "--seq", "constant:1", "--eps", "1/2", "--n-cap", "100")
    assert code == 3 and "closest miss" in err
    code, _, _ = run(capsys, "corollary", "--n", "30", "--max-index", "64")
    assert code == 3
    with pytest.raises(SystemExit) as exc:
        cli.main(["weights", "--format", "xml"])
    assert exc.value.code == 2


def test_spectrum(capsys):
    _, out, _ = run(capsys, "spectrum", "--n", "64", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "center,multiplicity,accumulating"
    assert "1/2,16,True" in lines


def test_corollary_and_distinct(capsys):
    _, out, _ = run(capsys, "corollary", "--seq", "kakutani", "--n", "3")
    assert [r["defect"] for r in json.loads(out)["rows"]] == ["0", "0", "0"]
    _, out, _ = run(capsys, "distinct", "--seq", "kakutani", "--n", "4")
    assert json.loads(out)["witness"] == [1, 3]


def test_sst_and_fit(capsys, tmp_path):
    code, out, _ = run(capsys, "sst", "--dim", "4", "--seed", "1")
    doc = json.loads(out)
    assert code == 0
    assert all(r["witness_defect"] <= 1e-12 for r in doc["approximants"])
    assert all(r["norm"] <= doc["norm_T"] + 1e-10 for r in doc["approximants"])
    _, csv, _ = run(capsys, "sst", "--weights", "1,1/2", "--format", "csv")
    assert csv.splitlines()[0] == "n,i=1,i=2,i=3"
    m = tmp_path / "m.txt"
    m.write_text("3\n0 0 0\n1 0 0\n0 1 0\n")
    code, out, _ = run(capsys, "fit", "--matrix", str(m))
    assert code == 0 and json.loads(out)["residual"] < 1e-8


def test_sst_is_deterministic(capsys):
    a = run(capsys, "sst", "--dim", "3", "--seed", "5")[1]
    b = run(capsys, "sst", "--dim", "3", "--seed", "5")[1]
    assert a == b
