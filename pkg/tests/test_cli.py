import csv
import io
import subprocess
import sys

import pytest

from thzvr.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# thzvr-")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_guaranteed_los_reliability_at_15ghz(capsys, tmp_path):
    out = tmp_path / "a.csv"
    code, _, _ = run(capsys, "analyze", "--mode", "guaranteed-los", "--set", "bandwidth=15e9",
                     "--delta", "0.020", "--out", str(out))
    assert code == 0
    r = {x["quantity"]: x for x in rows(out.read_text())}
    assert float(r["reliability@0.02"]["value"]) >= 0.99999
    assert r["reliability@0.02"]["units"] == "1"
    side = rows((tmp_path / "a.csv.cdf.csv").read_text())
    assert float(side[0]["cdf"]) == 0.0
    assert len(side) == 2**14


def test_tvar_rows_non_decreasing(capsys):
    code, out, _ = run(capsys, "analyze", "--alpha-c", "0.9,0.99")
    assert code == 0
    r = {x["quantity"]: float(x["value"]) for x in rows(out)}
    assert r["tvar@0.9"] <= r["tvar@0.99"]
    assert {"gev_location", "gev_scale", "gev_shape", "var@0.9", "var@0.99"} <= set(r)


def test_analyze_is_byte_identical(capsys):
    a = run(capsys, "analyze", "--alpha-c", "0.9", "--delta", "0.01")[1]
    b = run(capsys, "analyze", "--alpha-c", "0.9", "--delta", "0.01")[1]
    assert a == b


def test_validation_exit_code(capsys):
    code, _, err = run(capsys, "analyze", "--set", "service_rate=0.1")
    assert code == 3
    assert "mu1 > lambda1" in err


def test_parse_exit_codes(capsys, tmp_path):
    empty = tmp_path / "e.ini"
    empty.write_text("")
    assert run(capsys, "analyze", "-c", str(empty))[0] == 2
    assert run(capsys, "analyze", "--set", "nonsense=1")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "11", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_model_domain_exit_code(capsys):
    # a full-circle body sector leaves no LoS at all
    code, _, err = run(capsys, "simulate", "--runs", "1", "--set", "orientation=fixed",
                       "--set", "self_block_angle=6.283185307179586")
    assert code == 4
    assert "p_los > 0" in err


def test_data_exit_code(capsys, tmp_path):
    from thzvr.errors import DataError
    assert DataError("x").exit_code == 5


def test_traces_row_count(capsys):
    code, out, _ = run(capsys, "simulate", "--runs", "1", "--emit", "traces", "--seed", "3")
    assert code == 0
    n = len(rows(out))
    assert abs(n - 60) < 4 * 60**0.5


def test_simulate_deterministic_and_env_seed(capsys, monkeypatch):
    a = run(capsys, "simulate", "--runs", "20", "--seed", "4")[1]
    b = run(capsys, "simulate", "--runs", "20", "--seed", "4")[1]
    assert a == b
    monkeypatch.setenv("THZVR_SEED", "4")
    c = run(capsys, "simulate", "--runs", "20")[1]
    assert c == a
    r = {x["metric"]: x for x in rows(a)}
    assert r["mean_e2e"]["runs"] == "20" and r["mean_e2e"]["seed"] == "4"
    assert float(r["mean_e2e"]["stderr"]) > 0


def test_reproduce_writes_curves_and_manifest(capsys, tmp_path):
    code, out, _ = run(capsys, "reproduce", "8a", "--out", str(tmp_path), "--runs", "30")
    assert code == 0
    manifest = (tmp_path / "fig8a_manifest.txt").read_text()
    kv = dict(line.split(": ", 1) for line in manifest.splitlines())
    assert kv["figure"] == "8a" and kv["runs"] == "30"
    curve = rows((tmp_path / "fig8a_tvar.csv").read_text())
    assert list(curve[0]) == ["x", "analytic_y", "simulated_y", "stderr"]


def test_show_config(capsys):
    code, out, _ = run(capsys, "show-config", "-c", "table2_0p2thz")
    assert code == 0
    assert "frequency = 200000000000.0" in out
    code, out, _ = run(capsys, "show-config", "--fields")
    assert "mobility_period" in out


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "thzvr", "--version"], capture_output=True, text=True)
    assert p.returncode == 0
    assert "thzvr" in p.stdout
