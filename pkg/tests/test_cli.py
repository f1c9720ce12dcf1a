import json
import shutil

import numpy as np
import pytest

from ellipspec import cli
from ellipspec.cli import ConfigError


def run_cli(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


# --- parsing helpers ------------------------------------------------------------------

def test_parse_ints_forms():
    assert cli.parse_ints("m", "0..4") == [0, 1, 2, 3, 4]
    assert cli.parse_ints("m", "1, 2,5") == [1, 2, 5]
    assert cli.parse_ints("m", 3) == [3]
    assert cli.parse_ints("m", [0, 2]) == [0, 2]
    for bad in ("4..1", "a..b", "x", "-1"):
        with pytest.raises(ConfigError) as exc:
            cli.parse_ints("m", bad)
        assert exc.value.field == "m"


def test_parse_floats_and_window():
    assert cli.parse_floats("h", "1.0,0.5") == [1.0, 0.5]
    for bad in ("0.5,-1", "nan", "a", ""):
        with pytest.raises(ConfigError):
            cli.parse_floats("h", bad)
    assert cli.parse_window("window", "0,2") == [0.0, 2.0]
    assert cli.parse_window("window", None) is None
    with pytest.raises(ConfigError):
        cli.parse_window("window", "2,1")
    with pytest.raises(ConfigError):
        cli.parse_window("window", "0,1,2")


def test_scan_points_reproducible():
    a = cli.scan_points(10, 0.2, 1.0, 3, extra=(1.0,))
    b = cli.scan_points(10, 0.2, 1.0, 3, extra=(1.0,))
    assert a == b and 1.0 in a
    assert all(0.2 <= x <= 1.0 for x in a)
    assert cli.scan_points(10, 0.2, 1.0, 4) != cli.scan_points(10, 0.2, 1.0, 3)


def test_lommel_draws_reproducible():
    assert cli.lommel_draws(5, 1) == cli.lommel_draws(5, 1)
    assert cli.lommel_draws(5, 1) != cli.lommel_draws(5, 2)


# --- artifacts --------------------------------------------------------------------------

def test_disk_spectrum_values(capsys):
    code, out, _ = run_cli(["disk-spectrum", "--count", "4"], capsys)
    assert code == 0
    rows = body(out)
    assert rows[0] == "index,eigenvalue,multiplicity,m,n"
    vals = [float(r.split(",")[1]) for r in rows[1:]]
    assert vals == pytest.approx([5.78318596295, 14.6819706421, 26.3746164272, 30.4712623437],
                                 abs=1e-10)
    assert [int(r.split(",")[2]) for r in rows[1:]] == [1, 2, 2, 1]


def test_provenance_header(capsys):
    _, out, _ = run_cli(["disk-spectrum", "--count", "2", "--seed", "7"], capsys)
    head = [line for line in out.splitlines() if line.startswith("#")]
    keys = [line[2:].split(":")[0] for line in head]
    assert keys == ["package", "version", "command", "config_sha256", "seed"]
    assert "# seed: 7" in head


def test_config_hash_ignores_output(tmp_path, capsys):
    run_cli(["ball-spectrum", "--count", "3", "-o", str(tmp_path / "a.csv")], capsys)
    run_cli(["ball-spectrum", "--count", "3", "-o", str(tmp_path / "b.csv")], capsys)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    run_cli(["ball-spectrum", "--count", "4", "-o", str(tmp_path / "c.csv")], capsys)
    sha = lambda p: [l for l in p.read_text().splitlines() if "sha256" in l][0]
    assert sha(tmp_path / "a.csv") != sha(tmp_path / "c.csv")


def test_json_output_parses(capsys):
    code, out, _ = run_cli(["zeros", "--orders", "0..1", "--count", "2", "--format", "json"],
                           capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["provenance"]["command"] == "zeros"
    assert len(doc["data"]["records"]) == 4


def test_bourget_exit_ok(capsys):
    code, out, _ = run_cli(["bourget", "--orders", "0..3", "--zeros", "3", "--lommel-trials", "3"],
                           capsys)
    assert code == 0
    doc = json.loads(out)["data"]
    assert doc["bourget"]["passed"] and doc["lommel"]["passed"]
    assert doc["bourget"]["min_distance"] > 1e-6


def test_byte_identical_reruns(tmp_path, monkeypatch, capsys):
    argv = ["sturm", "--k", "1..2", "--h", "0.2,0.1", "--cells", "200"]
    outs = []
    for workers in ("1", "1", "2"):
        monkeypatch.setenv("ELLIPSPEC_WORKERS", workers)
        path = tmp_path / f"run{len(outs)}.csv"
        assert cli.main(argv + ["-o", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


# --- configuration errors ------------------------------------------------------------

def test_malformed_h_range_writes_nothing(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, err = run_cli(["branches", "--h-from", "0.05", "--h-to", "1.0", "-o", str(out)], capsys)
    assert code == 2 and "h_from" in err
    assert not out.exists()
    code, _, err = run_cli(["schrodinger", "--h", "a,b", "-o", str(out)], capsys)
    assert code == 2 and "h" in err and not out.exists()


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"count": 3, "colour": "red"}))
    code, _, err = run_cli(["disk-spectrum", "--config", str(cfg)], capsys)
    assert code == 2 and "colour" in err


@pytest.mark.parametrize("ext,text", [
    (".json", '{"count": 3}'),
    (".toml", 'count = 3\nsubcommand = "ball-spectrum"\n'),
])
def test_config_overrides_flags(tmp_path, capsys, ext, text):
    cfg = tmp_path / f"c{ext}"
    cfg.write_text(text)
    code, out, _ = run_cli(["ball-spectrum", "--count", "7", "--config", str(cfg)], capsys)
    assert code == 0 and len(body(out)) == 1 + 3


def test_config_subcommand_mismatch(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('subcommand = "oval"\n')
    code, _, err = run_cli(["ball-spectrum", "--config", str(cfg)], capsys)
    assert code == 2 and "subcommand" in err


def test_config_file_problems(tmp_path, capsys):
    code, _, err = run_cli(["ball-spectrum", "--config", str(tmp_path / "none.json")], capsys)
    assert code == 2 and "not found" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{count: ")
    assert run_cli(["ball-spectrum", "--config", str(bad)], capsys)[0] == 2
    lst = tmp_path / "list.json"
    lst.write_text("[1, 2]")
    assert run_cli(["ball-spectrum", "--config", str(lst)], capsys)[0] == 2


@pytest.mark.parametrize("sub", sorted(cli.JSON_ONLY))
def test_json_only_rejects_csv(sub, capsys):
    code, _, err = run_cli([sub, "--format", "csv"], capsys)
    assert code == 2 and "format" in err


def test_unknown_flag_and_bad_values(capsys):
    assert run_cli(["disk-spectrum", "--colour", "red"], capsys)[0] == 2
    assert run_cli(["disk-spectrum", "--count", "0"], capsys)[0] == 2
    assert run_cli(["disk-spectrum", "--bc", "robin"], capsys)[0] == 2
    assert run_cli(["oval", "--profile", "square"], capsys)[0] == 2
    assert run_cli([], capsys)[0] == 2


# --- numeric failures -------------------------------------------------------------------

def test_numeric_error_names_module(capsys):
    code, out, err = run_cli(["schrodinger", "--h", "0.1", "--window", "0.2,0.4",
                              "--kinetic-form", "0.3", "--modes", "3", "--format", "json"], capsys)
    assert code == 1 and out == ""
    assert err.startswith("ellipspec.schrodinger1d: InsufficientModesError")


def test_crossing_not_found_exit(capsys):
    code, out, err = run_cli(["crossing", "--window", "0.8,0.9", "--even-index", "0"], capsys)
    assert code == 1
    assert json.loads(out)["data"]["found"] is False
    assert "no sign change" in err


# --- golden tables ------------------------------------------------------------------

@pytest.fixture
def results(tmp_path):
    d = tmp_path / "results"
    shutil.copytree(cli.GOLDEN_DIR, d)
    (d / "tolerances.json").unlink()
    return d


def test_golden_check_pass(results, capsys):
    code, out, _ = run_cli(["golden-check", str(results)], capsys)
    assert code == 0 and out.startswith("PASS")


def test_golden_check_perturbed_cell(results, capsys):
    p = results / "oval.json"
    doc = json.loads(p.read_text())
    doc["data"]["records"][0]["eigenvalue"] += 1e-6
    p.write_text(json.dumps(doc))
    code, out, err = run_cli(["golden-check", str(results)], capsys)
    assert code == 1
    assert "records[0].eigenvalue" in out and "oval.json" in out


def test_golden_check_missing_file(results, capsys):
    (results / "ball.csv").unlink()
    code, out, _ = run_cli(["golden-check", str(results)], capsys)
    assert code == 1 and "ball.csv: missing from results directory" in out


def test_golden_check_needs_tolerances(results, tmp_path, capsys):
    code, _, err = run_cli(["golden-check", str(results), "--golden", str(tmp_path)], capsys)
    assert code == 2 and "tolerances.json" in err


def test_golden_regeneration(tmp_path, capsys):
    code, out, _ = run_cli(["golden-check", str(tmp_path), "--run"], capsys)
    assert code == 0 and out.startswith("PASS")
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(cli.GOLDEN_SUITE)


# --- smoke runs of every subcommand ----------------------------------------------------

SMOKE = {
    "disk-spectrum": ["--bc", "neumann", "--count", "3", "--parity", "odd"],
    "ball-spectrum": ["--count", "3"],
    "zeros": ["--orders", "0..1", "--count", "2", "--half-integer"],
    "bourget": ["--orders", "0..2", "--zeros", "2", "--lommel-trials", "2"],
    "schrodinger": ["--potential", "quartic", "--h", "0.05", "--window", "0.5,1.0"],
    "sturm": ["--k", "1", "--h", "0.1", "--cells", "200", "--window", "9,12"],
    "oval": ["--h", "0.5", "--count", "2", "--cells", "200", "--K", "6"],
    "branches": ["--h-from", "1.0", "--h-to", "0.5", "--h-points", "4", "--count", "1",
                 "--cells", "200", "--K", "8"],
    "crossing": ["--window", "0.3,0.8", "--cells", "200", "--K", "8", "--tol", "0.05"],
    "ellipsoid": ["--m", "0", "--h", "1.0", "--count", "1", "--K", "6", "--cells", "200"],
    "scan": ["--samples", "2", "--count", "3", "--cells", "200", "--K", "8"],
}


@pytest.mark.parametrize("sub", sorted(SMOKE))
def test_smoke(sub, capsys):
    code, out, err = run_cli([sub] + SMOKE[sub], capsys)
    assert code == 0, err
    if sub in cli.JSON_ONLY or cli.PARAMS[sub]["format"] == "json":
        doc = json.loads(out)
        assert doc["provenance"]["command"] == sub
    else:
        rows = body(out)
        assert len(rows) >= 2
        assert all(np.isfinite(float(x)) for x in rows[1].split(",") if _is_number(x))


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True
