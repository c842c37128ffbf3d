import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hyperent import cli


def _run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


def test_teleport_verify_exit_zero(capsys):
    code, out = _run(capsys, "teleport", "verify", "--trials", "10", "--no-timing")
    rep = json.loads(out)
    assert code == 0
    assert set(rep) == {"version", "command", "config", "results", "duration_ms"}
    assert rep["duration_ms"] is None
    assert rep["results"]["failed_invariants"] == []
    assert rep["results"]["correction_table_audit"]["mismatched_rows"] == ["psi- phi+"]
    assert all(f["min_fidelity"] >= 1 - 1e-10 for f in rep["results"]["fidelity"])


def test_teleport_verify_byte_identical(capsys):
    _, a = _run(capsys, "teleport", "verify", "--trials", "5", "--seed", "3", "--no-timing")
    _, b = _run(capsys, "teleport", "verify", "--trials", "5", "--seed", "3", "--no-timing")
    assert a == b


def test_teleport_run_fixed_input(capsys):
    s = 1 / math.sqrt(2)
    vec = f"{s},0,0,{s},1,0,0,0"
    code, out = _run(capsys, "teleport", "run", "--trials", "8", "--seed", "1", "--input", vec, "--no-timing")
    rep = json.loads(out)
    assert code == 0
    assert sum(rep["results"]["outcome_counts"].values()) == 8
    assert rep["results"]["min_fidelity"] >= 1 - 1e-10


def test_teleport_run_rejects_short_input():
    with pytest.raises(SystemExit):
        cli.main(["teleport", "run", "--trials", "1", "--seed", "1", "--input", "1,0"])


def test_qkd_run_json(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _ = _run(capsys, "qkd", "run", "--rounds", "50000", "--seed", "5", "--out", str(out))
    rep = json.loads(out.read_text())
    assert code == 0
    assert rep["config"]["seed"] == 5
    assert "PCG64" in rep["config"]["rng"]
    assert rep["results"]["verdict"]["overall"] == "secure"
    assert rep["results"]["failed_invariants"] == []
    assert isinstance(rep["duration_ms"], float)


def test_qkd_run_sharded_byte_identical(capsys):
    args = ["qkd", "run", "--rounds", "140000", "--seed", "9", "--no-timing"]
    _, a = _run(capsys, *args, "--shards", "3")
    _, b = _run(capsys, *args, "--shards", "3")
    assert a == b
    ra, rb = json.loads(a), json.loads(_run(capsys, *args)[1])
    assert ra["results"]["bell"] == rb["results"]["bell"]


def test_qkd_csv_rows_match_tallies(capsys):
    _, out = _run(capsys, "qkd", "run", "--rounds", "20000", "--seed", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    header, body = rows[0], rows[1:]
    assert header[-1] == "count"
    from hyperent import qkd

    sim = qkd.simulate(20000, seed=2)
    populated = np.count_nonzero(sim.tallies.pol) + np.count_nonzero(sim.tallies.oam)
    assert len(body) == populated
    assert sum(int(r[-1]) for r in body if r[0] == "pol") == 20000


def test_qkd_exact_values(capsys):
    code, out = _run(capsys, "qkd", "exact", "--no-timing")
    res = json.loads(out)["results"]
    assert code == 0
    assert round(res["S"], 10) == round(2 * math.sqrt(2), 10)
    assert round(res["S3"], 10) == round(4 / (6 * math.sqrt(3) - 9), 10)


def test_qkd_exact_eve_pol_insecure(capsys):
    _, out = _run(capsys, "qkd", "exact", "--eve", "pol", "--no-timing")
    res = json.loads(out)["results"]
    assert res["verdict"]["pol_channel"] == "insecure"
    assert res["pol_qber"] == pytest.approx(0.25)


def test_invalid_eve_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        cli.main(["qkd", "exact", "--eve", "bogus"])
    assert exc.value.code not in (0, None)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hyperent", "qkd", "exact", "--no-timing"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "qkd exact"
