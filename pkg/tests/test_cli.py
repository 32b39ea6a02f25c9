import json
import subprocess
import sys

import pytest

from cqtraj.cli import main, read_output


def run(tmp_path, *argv):
    out = tmp_path / "out.txt"
    code = main([*argv, "--out", str(out)])
    return code, out


def rows(path):
    manifest, body = read_output(str(path))
    lines = body.strip().splitlines()
    return manifest, lines[0].split(","), [l.split(",") for l in lines[1:]]


def test_trace_levels_gives_one_block_per_level(tmp_path):
    code, out = run(tmp_path, "trace", "--n", "1", "--levels", "0.2,0.5,1.0,1.5,3")
    assert code == 0
    manifest, header, data = rows(out)
    assert header == ["block", "t", "X_r", "X_i", "invariant_level"]
    assert sorted({r[0] for r in data}) == ["0", "1", "2", "3", "4"]
    assert all(b["closed"] for b in manifest["blocks"])
    for r in data:
        level = float(manifest["blocks"][int(r[0])]["label"].split("=")[1])
        assert float(r[4]) == pytest.approx(level, rel=1e-7)


def test_trace_separatrix_n2(tmp_path):
    code, out = run(tmp_path, "trace", "--n", "2", "--levels", "separatrix")
    assert code == 0
    manifest, _, data = rows(out)
    assert len(manifest["blocks"]) == 4
    assert all(float(r[4]) == pytest.approx(8.0, rel=1e-5) for r in data)


def test_trace_pole_start_is_numerical_failure(tmp_path, capsys):
    code, _ = run(tmp_path, "trace", "--n", "1", "--start", "0,0")
    assert code == 2
    assert "0.0,0.0" in capsys.readouterr().err


def test_negative_start_value_parses(tmp_path):
    code, out = run(tmp_path, "trace", "--n", "1", "--start", "-1.5,0.5")
    assert code == 0
    assert rows(out)[0]["start"] == [[-1.5, 0.5]]


def test_usage_errors_exit_1():
    for argv in (["trace", "--bogus"], ["density", "--grid", "1:0:5,0:1:3"], ["fraction", "--n", "-1"], []):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 1


def test_density_grid_size(tmp_path):
    code, out = run(tmp_path, "density", "--n", "1", "--method", "wyatt", "--grid", "-2:2:200,-1:1:100")
    assert code == 0
    _, header, data = rows(out)
    assert header == ["X_r", "X_i", "value", "method", "region", "masked"]
    assert len(data) == 20000


def test_density_masks_poles(tmp_path):
    code, out = run(tmp_path, "density", "--n", "1", "--method", "wyatt", "--grid", "-1:1:3,-1:1:3")
    _, _, data = rows(out)
    masked = [r for r in data if r[5] == "1"]
    assert [(r[0], r[1]) for r in masked] == [("0.0", "0.0")]


def test_combined_on_axis_equals_born(tmp_path):
    from cqtraj.eigenstate import OscillatorModel
    from cqtraj.probability import born_density

    m = OscillatorModel(n=1)
    code, out = run(tmp_path, "density", "--n", "1", "--method", "combined", "--grid", "-2:2:9,-0.5:0.5:3", "--jobs", "2")
    _, _, data = rows(out)
    for r in data:
        if float(r[1]) == 0.0 and r[5] == "0":
            assert float(r[2]) == pytest.approx(float(born_density(m, float(r[0]))), rel=1e-9)


def test_source_sign_pattern(tmp_path):
    code, out = run(tmp_path, "density", "--n", "1", "--method", "source", "--grid", "-1:1:2,-0.5:0.5:2")
    _, _, data = rows(out)
    signs = {(float(r[0]) > 0, float(r[1]) > 0): float(r[2]) > 0 for r in data}
    assert signs == {(True, True): True, (False, True): False, (False, False): True, (True, False): False}


def test_born_columns(tmp_path):
    code, out = run(tmp_path, "born", "--n", "2", "--grid", "-3:3:13")
    _, header, data = rows(out)
    assert header == ["x_r", "P_integral", "P_closed_form", "rel_error"]
    assert max(float(r[3]) for r in data) < 1e-6


def test_outputs_are_deterministic(tmp_path):
    # the output path is part of the manifest, so rerun into the same file
    path = tmp_path / "a.csv"
    blobs = []
    for _ in range(2):
        assert main(["trace", "--n", "2", "--start", "1.9,0.1", "--out", str(path)]) == 0
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_width_report_schema(tmp_path):
    code, out = run(tmp_path, "width", "--n", "1")
    manifest, body = read_output(str(out))
    rep = json.loads(body)
    assert {"claim", "paper_value", "computed_value", "tolerance", "pass", "grid_metadata"} <= set(rep)
    assert rep["pass"] is True and manifest["subcommand"] == "width"


def test_classical_si(tmp_path):
    code, out = run(tmp_path, "classical", "--n", "1", "--si", "--mass", "1", "--omega", "1")
    rep = json.loads(read_output(str(out))[1])
    assert rep["pass"] is True
    assert 1e-17 / 3 < rep["computed_value"] < 3e-17


def test_verify_rejudges_from_file(tmp_path, monkeypatch):
    import cqtraj.checks as checks

    small = {"6_net_source": checks.ACCEPTANCE["6_net_source"]}
    monkeypatch.setattr(checks, "ACCEPTANCE", small)
    monkeypatch.setattr(checks, "EXTRA", {})
    code, out = run(tmp_path, "verify", "--n", "1", "--quick")
    assert code == 0
    manifest, body = read_output(str(out))
    payload = json.loads(body)
    assert payload["6_net_source"]["pass"] is True


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "cqtraj", "width", "--n", "1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout.split("\n", 1)[1])["computed_value"] == pytest.approx(0.5)
