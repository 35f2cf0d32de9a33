import csv
import io
import json
import math
import subprocess
import sys

import pytest

from scatmono.cli import main


def run(capsys, *argv):
    code = main(list(argv) + ["--quiet"])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_info(capsys):
    code, out, _ = run(capsys, "info", "--potential", "lorentzian", "--a", "20", "--b", "1", "--mu", "1")
    assert code == 0
    (row,) = rows(out)
    assert float(row["e_c"]) == 20.0
    assert float(row["p_c"]) == pytest.approx(6.324555, abs=1e-6)
    assert float(row["alpha"]) == pytest.approx(6.324555, abs=1e-6)


def test_orbit_head_on(capsys):
    code, out, _ = run(capsys, "orbit", "--l", "0", "--p", "2", "--format", "json")
    assert code == 0
    data = json.loads(out)
    (summary,) = data["orbits"]
    assert abs(summary["deflection"]) == pytest.approx(math.pi, abs=1e-6)
    assert summary["final_direction"] == "-y"
    assert data["samples"][-1]["y"] < 0


def test_orbit_csv_schema(capsys):
    code, out, _ = run(capsys, "orbit", "--l", "0.5,-0.5", "--p", "3,3")
    assert code == 0
    assert out.splitlines()[0] == "orbit,t,x,y,px,py"
    assert {r["orbit"] for r in rows(out)} == {"0", "1"}


def test_grid_schema(capsys):
    code, out, _ = run(capsys, "grid", "--which", "raw", "--nl", "3", "--np", "2")
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["l", "p", "value"]
    assert len(table) == 6


def test_phase_from_quantum_numbers(capsys):
    _, a, _ = run(capsys, "phase", "--m", "4", "--k", "9.797958971132712")
    _, b, _ = run(capsys, "phase", "--l", "1", "--p", "2.449489742783178")
    assert float(rows(a)[0]["delta"]) == pytest.approx(float(rows(b)[0]["delta"]), rel=1e-12)


def test_dwdl_limit(capsys):
    code, out, _ = run(capsys, "dwdl", "--p", "2.449489742783178", "--limit", "from_above")
    assert code == 0
    assert float(rows(out)[0]["value"]) == pytest.approx(math.pi, abs=1e-3)


def test_loop_json(capsys):
    code, out, _ = run(capsys, "loop", "--samples-per-leg", "20")
    assert code == 0
    data = json.loads(out)
    assert data["holonomy"] == pytest.approx(2 * math.pi, abs=1e-6)
    assert data["winding"] == 1


def test_transport_json(capsys):
    code, out, _ = run(capsys, "transport")
    assert code == 0
    data = json.loads(out)
    assert data["matrix"] == [[1, 0], [1, 1]]
    assert {"start_cell", "final_cell", "winding", "crossings"} <= set(data)


def test_verify_schema(capsys):
    code, out, _ = run(capsys, "verify", "--m", "3", "--k", "20")
    assert code == 0
    assert out.splitlines()[0] == "m,k,delta_wkb,delta_exact,abs_err,rel_err"


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# barrier\na = 10\nmu = 2\n")
    _, out, _ = run(capsys, "info", "--config", str(cfg))
    assert float(rows(out)[0]["e_c"]) == 10.0
    _, out, _ = run(capsys, "info", "--config", str(cfg), "--a", "5")
    row = rows(out)[0]
    assert float(row["e_c"]) == 5.0
    assert float(row["p_c"]) == pytest.approx(math.sqrt(20.0))


def test_out_file(capsys, tmp_path):
    target = tmp_path / "info.json"
    code, out, _ = run(capsys, "info", "--format", "json", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())[0]["e_c"] == 20.0


@pytest.mark.parametrize("argv", [
    ["action", "--l", "0", "--p", "6.324555320336759"],
    ["deflect", "--l", "0", "--p", "6.324555320336759"],
    ["info", "--a", "-1"],
    ["action", "--l", "1", "--p", "-2"],
])
def test_domain_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert "domain error" in err


@pytest.mark.parametrize("argv", [
    ["transport", "--start-n", "400"],
    ["verify", "--m", "3", "--k", "15", "--mesh-step", "3", "--r-match", "5"],
])
def test_numerical_failures_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "numerical failure" in err


@pytest.mark.parametrize("argv", [
    ["info", "--bogus"],
    ["nonsense"],
    ["action", "--p", "2"],
    ["info", "--format", "xml"],
    ["info", "--a", "abc"],
])
def test_usage_errors_exit_64(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 64


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    code, _, err = run(capsys, "info", "--config", str(cfg))
    assert code == 64
    assert "colour" in err


def test_nan_written_as_empty(capsys):
    _, out, _ = run(capsys, "action", "--l", "1", "--p", "2.449489742783178", "--portrait", "--nr", "5")
    # the first radius lies inside the barrier but outside the centrifugal turning point
    first = out.splitlines()[1].split(",")
    assert first[1] != "" and first[2] == ""


@pytest.mark.parametrize("argv", [
    ["grid", "--which", "smoothed", "--nl", "5", "--np", "4"],
    ["orbit", "--l", "0.5", "--p", "3"],
    ["lattice", "--mmin", "-2", "--mmax", "2", "--kmin", "10", "--kmax", "30"],
])
def test_deterministic(capsys, argv):
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b and a


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "scatmono.cli", "info", "--format", "json", "--quiet"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)[0]["alpha"] == pytest.approx(math.sqrt(40.0))
