import json

import pytest

from carriergame.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bound_table(capsys):
    code, out, _ = run(capsys, "bound", "--M", "100", "--K", "1..32")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "K,gamma_star,p_nocoord_bound,p_nocoord_nash_exact,se_bound"
    assert len(lines) == 33
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[2]) == 1.0 and float(first[4]) == 0.0


def test_bound_json(capsys):
    code, out, _ = run(capsys, "bound", "--K", "2,4", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and [r["K"] for r in rows] == [2, 4]
    assert rows[0]["p_nocoord_bound"] == pytest.approx(0.1180, abs=1e-4)


def test_sweep_byte_identical(tmp_path, capsys):
    args = ["sweep", "--var", "K", "--values", "2,4", "--trials", "40", "--snr-db", "10", "--theta", "0",
            "--seed", "42"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("variable,value,trials,")


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--var", "theta", "--values", "0,1", "--trials", "10", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["variable"] == "theta" and len(data["rows"]) == 2


def test_solve_inline(capsys):
    code, out, _ = run(capsys, "solve", "--g1", "1,0.5,0.1", "--g2", "1,0.1,0.05", "--snr-db", "0")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 3
    header = lines[0].split(",")
    st = dict(zip(header, lines[1].split(",")))
    assert st["solver"] == "stackelberg" and st["branch"] == "W"
    assert st["carrier_leader"] == "0" and st["carrier_follower"] == "1"


def test_solve_from_file(tmp_path, capsys):
    path = tmp_path / "gains.txt"
    path.write_text("10 1\n10 1\n")
    code, out, _ = run(capsys, "solve", "--gains", str(path), "--format", "json")
    rows = json.loads(out)
    assert code == 0
    assert rows[1]["kind"] == "nash_infeasible" and rows[1]["utility_leader"] is None


def test_oracle_compare(capsys):
    code, out, _ = run(capsys, "oracle-compare", "--trials", "20", "--K", "4", "--format", "json")
    row = json.loads(out)
    assert code == 0 and row["max_rel_gap"] <= 0.005 and row["frac_within_tol"] == 1.0


@pytest.mark.parametrize("argv", [
    [],
    ["nope"],
    ["sweep", "--var", "K"],
    ["sweep", "--var", "K", "--values", "4,2"],
    ["sweep", "--var", "snr_db", "--values", "0,10", "--K", "2,4"],
    ["solve"],
    ["solve", "--g1", "1,2", "--g2", "1,x"],
    ["solve", "--g1", "1,2", "--g2", "1,2", "--theta", "2"],
    ["bound", "--K", "0..3"],
    ["oracle-compare", "--trials", "0"],
    ["solve", "--g1", "1,0", "--g2", "1,2"],
])
def test_invalid_arguments_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "usage" in err


def test_bad_gains_file(tmp_path, capsys):
    path = tmp_path / "g.txt"
    path.write_text("1 2 3\n")
    code, _, err = run(capsys, "solve", "--gains", str(path))
    assert code == 2 and "two lines" in err


def test_missing_gains_file_is_runtime_failure(tmp_path, capsys):
    code, _, _ = run(capsys, "solve", "--gains", str(tmp_path / "missing.txt"))
    assert code == 1
