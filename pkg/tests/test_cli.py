"""End-to-end tests of the command-line interface."""

import json
import math

import pytest

from selffield.cli import (EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK,
                           config_to_argv, main, parse_beta_grid)
from selffield.errors import ConfigError


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- grid parsing -------------------------------------------------------------

def test_beta_grid_range():
    grid = parse_beta_grid("0.05:0.25:0.05")
    assert grid == pytest.approx([0.05, 0.10, 0.15, 0.20, 0.25])


def test_beta_grid_endpoint_tolerance():
    # endpoint included when within step/2
    assert parse_beta_grid("0.1:0.3:0.1") == pytest.approx([0.1, 0.2, 0.3])


def test_beta_grid_list():
    assert parse_beta_grid("0.1, 0.2,0.05") == pytest.approx([0.1, 0.2, 0.05])


def test_beta_grid_bad_spec():
    with pytest.raises(ConfigError):
        parse_beta_grid("0.1:0.2:0.05:1")
    with pytest.raises(ConfigError):
        parse_beta_grid("0.1:0.2:-0.05")


# --- minimize -------------------------------------------------------------------

def test_minimize_stdout(capsys):
    code, out, _ = run_cli(capsys, "minimize", "--particle", "electron",
                           "--beta", "0.1")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["b_star_m"] == pytest.approx(1.49e-8, rel=0.05)
    assert data["binding_eV"] == pytest.approx(6.4e-5, rel=0.05)
    assert data["mode"] == "PaperQuoted"


def test_minimize_numeric_failure_exit(capsys):
    code, _, err = run_cli(capsys, "minimize", "--particle", "electron",
                           "--beta", "0.0")
    assert code == EXIT_NUMERIC
    assert "no" in err.lower()


def test_minimize_custom_particle(capsys):
    code, out, _ = run_cli(capsys, "minimize", "--z", "1",
                           "--mass-kg", "1.67262192e-27", "--beta", "0.1")
    assert code == EXIT_OK
    assert json.loads(out)["b_star_m"] == pytest.approx(8.13e-12, rel=0.01)


# --- sweep ------------------------------------------------------------------------

def test_sweep_csv(tmp_path, capsys):
    out_path = tmp_path / "sweep.csv"
    code, _, _ = run_cli(capsys, "sweep", "--particle", "proton",
                         "--beta", "0.05:0.25:0.05", "--output", str(out_path))
    assert code == EXIT_OK
    lines = out_path.read_text().strip().split("\n")
    assert lines[0] == "beta,b_star_m,binding_eV,b_over_lambda,mode,status"
    assert len(lines) == 6
    meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
    assert meta["constants_version"] == "CODATA-2018"
    assert meta["mode"] == "PaperQuoted"
    assert "tool_version" in meta


def test_sweep_row_errors_do_not_abort(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--particle", "electron",
                           "--beta", "0.0,0.1", "--format", "json")
    assert code == EXIT_OK
    rows = json.loads(out)
    assert rows[0]["status"] == "no-minimum"
    assert rows[1]["status"] == "ok"


def test_sweep_deterministic(tmp_path, capsys):
    paths = []
    for name in ("a.csv", "b.csv"):
        p = tmp_path / name
        code, _, _ = run_cli(capsys, "sweep", "--particle", "electron",
                             "--beta", "0.05:0.2:0.05", "--output", str(p))
        assert code == EXIT_OK
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]


def test_twelve_significant_digits(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--particle", "electron",
                           "--beta", "0.1", "--format", "csv")
    assert code == EXIT_OK
    row = out.strip().split("\n")[1].split(",")
    assert row[1] == "1.49225687716e-08"


# --- energy ---------------------------------------------------------------------

def test_energy_json(capsys):
    code, out, _ = run_cli(capsys, "energy", "--particle", "electron",
                           "--beta", "0.1", "--b", "5.29177210903e-11")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["electrostatic_eV"] == pytest.approx(5.4279, rel=1e-3)
    assert data["mode"] == "PaperQuoted"


def test_energy_csv(capsys):
    code, out, _ = run_cli(capsys, "energy", "--particle", "electron",
                           "--beta", "0.1", "--b", "1e-10", "--format", "csv",
                           "--mode", "Assembled")
    assert code == EXIT_OK
    header, row = out.strip().split("\n")
    assert header.startswith("convective_eV,")
    assert row.endswith(",Assembled")


# --- atom ------------------------------------------------------------------------

def test_atom_preset_minimize(capsys):
    code, out, _ = run_cli(capsys, "atom", "--atom", "H", "--beta", "0.1")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["b_star_m"] == pytest.approx(8.1e-12, rel=0.02)


def test_atom_energy_evaluation(capsys):
    code, out, _ = run_cli(capsys, "atom", "--atom", "H", "--b", "5.3e-11")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["electrostatic_eV"] > 0.0


def test_atom_unknown_preset(capsys):
    code, _, err = run_cli(capsys, "atom", "--atom", "Xe")
    assert code == EXIT_CONFIG
    assert "Xe" in err


# --- config files ----------------------------------------------------------------

def test_config_roundtrip(tmp_path, capsys):
    config = {"command": "minimize", "particle": "electron", "beta": 0.1}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config))
    code, out, _ = run_cli(capsys, "--config", str(path))
    assert code == EXIT_OK
    assert json.loads(out)["b_star_m"] == pytest.approx(1.49e-8, rel=0.05)


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError) as err:
        config_to_argv({"command": "minimize", "particle": "electron",
                        "beta": 0.1, "grid_n": 64})
    assert "minimize.grid_n" in str(err.value)


def test_config_rejects_irrelevant_field(tmp_path, capsys):
    # a field belonging to another command is rejected, not ignored
    config = {"command": "minimize", "particle": "electron", "beta": 0.1,
              "b": 1e-10}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config))
    code, _, err = run_cli(capsys, "--config", str(path))
    assert code == EXIT_CONFIG
    assert "minimize.b" in err


def test_config_missing_file(capsys):
    code, _, _ = run_cli(capsys, "--config", "/nonexistent/path.json")
    assert code == EXIT_IO


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["minimize", "--particle", "electron", "--beta", "0.1",
              "--bogus", "1"])
    assert exc.value.code == EXIT_CONFIG


def test_output_io_error(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "minimize", "--particle", "electron",
                         "--beta", "0.1", "--output",
                         str(tmp_path / "no_dir" / "out.json"))
    assert code == EXIT_IO


# --- evolve ----------------------------------------------------------------------

def test_evolve_and_restart(tmp_path, capsys):
    b = 3e-11
    common = ["evolve", "--particle", "electron", "--beta", "0.1",
              "--b", str(b), "--n", "32", "--box", str(8 * b),
              "--dt", "2e-19", "--stride", "2"]
    snap = tmp_path / "state.snap"
    out1 = tmp_path / "traj1.csv"
    code, _, _ = run_cli(capsys, *common, "--steps", "4",
                         "--snapshot-out", str(snap), "--output", str(out1))
    assert code == EXIT_OK
    assert snap.exists()
    out2 = tmp_path / "traj2.csv"
    code, _, _ = run_cli(capsys, "evolve", "--snapshot-in", str(snap),
                         "--steps", "4", "--stride", "2",
                         "--output", str(out2))
    assert code == EXIT_OK
    lines1 = out1.read_text().strip().split("\n")
    lines2 = out2.read_text().strip().split("\n")
    assert len(lines1) == len(lines2) == 4   # header + records at 0, 2, 4
    # restarted trajectory continues at the snapshot time
    t_end = float(lines1[-1].split(",")[1])
    t_resume = float(lines2[1].split(",")[1])
    assert t_resume == pytest.approx(t_end, rel=1e-12)


def test_evolve_grid_mismatch_is_numeric_error(capsys, tmp_path):
    code, _, err = run_cli(capsys, "evolve", "--particle", "electron",
                           "--beta", "0.1", "--b", "1e-12", "--n", "32",
                           "--box", "2.4e-10", "--dt", "2e-19", "--steps", "2")
    assert code == EXIT_NUMERIC
    assert "resolution" in err


# --- validate --------------------------------------------------------------------

def test_validate_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _, _ = run_cli(capsys, "validate", "--skip-dynamics",
                         "--output", str(out))
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["all_passed"] is True
    names = {e["name"] for e in report["entries"]}
    assert "localization-reference-values" in names
    for entry in report["entries"]:
        assert set(entry) == {"name", "passed", "residual", "tolerance"}
