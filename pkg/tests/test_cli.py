import json
import math
from pathlib import Path

import pytest

from gaussian_phase.config import settings
from gaussian_phase.main import main


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def _simulate_args(out, *extra):
    return ["simulate", "homodyne", "--r", "1", "--theta-true", "0", "--copies", "10000",
            "--trials", "5", "--seed", "3", "--out", str(out), *extra]


def test_missing_command_is_a_usage_error(capsys):
    code, _ = _run(capsys)
    assert code == 1


def test_qfi_from_photon_number(capsys):
    code, out = _run(capsys, "qfi", "--nbar", "1")
    report = json.loads(out)
    assert code == 0
    assert report["qfi"] == pytest.approx(16.0)
    assert report["heisenberg_bound"] == pytest.approx(1.0 / 16.0)


def test_qfi_of_vacuum_has_no_bound(capsys):
    code, out = _run(capsys, "qfi", "--r", "0")
    assert code == 0
    assert json.loads(out)["heisenberg_bound"] is None


def test_qfi_csv_output(capsys):
    code, out = _run(capsys, "qfi", "--r", "1", "--copies", "10", "--format", "csv")
    header, row = out.splitlines()
    assert code == 0
    assert header.split(",") == sorted(header.split(","))
    values = dict(zip(header.split(","), row.split(",")))
    assert float(values["qfi"]) == pytest.approx(math.cosh(4.0) - 1.0)


@pytest.mark.parametrize("argv", [
    ["qfi"],
    ["qfi", "--r", "1", "--nbar", "1"],
    ["qfi", "--nbar", "-1"],
    ["qfi", "--r", "1", "--copies", "0"],
])
def test_qfi_rejects_bad_input(capsys, argv):
    code, _ = _run(capsys, *argv)
    assert code == 1


def test_fisher_map_grid(capsys):
    code, out = _run(capsys, "fisher-map", "--r", "0", "0.5", "1",
                     "--rprime-steps", "3", "--phi-steps", "3")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "r,r_prime,phi,F_closed,F_gamma,F_numeric,qfi"
    assert len(lines) == 28
    rows = [dict(zip(lines[0].split(","), line.split(","))) for line in lines[1:]]
    assert all(float(row["F_closed"]) == 0.0 for row in rows if float(row["r"]) == 0.0)


def test_fisher_map_to_file(capsys, tmp_path):
    out = tmp_path / "map.json"
    code, stdout = _run(capsys, "fisher-map", "--r", "1", "--rprime-steps", "2",
                        "--phi-steps", "2", "--format", "json", "--out", str(out))
    assert code == 0
    assert stdout == ""
    assert len(json.loads(out.read_text(encoding="utf-8"))) == 4


def test_threshold(capsys):
    code, out = _run(capsys, "threshold", "--s", "1")
    report = json.loads(out)
    assert code == 0
    assert report["t_thr"] == pytest.approx(1.0)
    assert report["limiting_angle"] == pytest.approx(math.pi / 2)


def test_threshold_rejects_zero(capsys):
    code, _ = _run(capsys, "threshold", "--s", "0")
    assert code == 1


def test_optimal_angle_above_threshold(capsys):
    code, out = _run(capsys, "optimal-angle", "--r", "1", "--rprime", "-3")
    report = json.loads(out)
    assert code == 0
    assert report["regime"] == "above_threshold"
    assert report["lo_offset"] == pytest.approx(0.5 * report["phi"])
    assert 0 < report["fisher"] < report["qfi"]


def test_optimal_angle_below_threshold(capsys):
    code, out = _run(capsys, "optimal-angle", "--r", "1", "--rprime", "0")
    report = json.loads(out)
    assert code == 0
    assert report["regime"] == "below_threshold"
    assert report["phi"] == 0.0


def test_oracle_check_passes(capsys):
    code, out = _run(capsys, "oracle-check", "--r", "0.5", "--dim", "64")
    report = json.loads(out)
    assert code == 0
    assert len(report["checks"]) == 9
    assert all(check["passed"] for check in report["checks"])


def test_oracle_check_truncation_failure(capsys):
    code, _ = _run(capsys, "oracle-check", "--r", "2.5", "--dim", "32")
    assert code == 1


def test_simulate_writes_records_and_summary(capsys, tmp_path):
    out = tmp_path / "run" / "trials.csv"
    code, stdout = _run(capsys, *_simulate_args(out, "--workers", "1"))
    report = json.loads(stdout)
    assert code == 0
    assert report["records"] == str(out)
    assert len(out.read_text(encoding="utf-8").splitlines()) == 6
    assert Path(report["summary"]).exists()


def test_simulate_is_reproducible_across_workers(capsys, tmp_path):
    first, second = tmp_path / "a" / "trials.csv", tmp_path / "b" / "trials.csv"
    assert _run(capsys, *_simulate_args(first, "--workers", "1"))[0] == 0
    assert _run(capsys, *_simulate_args(second, "--workers", "4"))[0] == 0
    assert first.read_bytes() == second.read_bytes()


def test_simulate_requires_seed(capsys, tmp_path):
    code, _ = _run(capsys, "simulate", "homodyne", "--r", "1", "--theta-true", "0",
                   "--copies", "10000", "--trials", "2", "--out", str(tmp_path / "t.csv"))
    assert code == 1


def test_config_file_with_unknown_key(capsys, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"seed": 1, "r": 1.0, "bogus": 2}), encoding="utf-8")
    code, _ = _run(capsys, "simulate", "povm", "--config", str(config), "--theta-true", "0",
                   "--copies", "10000", "--trials", "2", "--out", str(tmp_path / "t.csv"))
    assert code == 1


def test_config_file_values_are_used(capsys, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"seed": 1, "r": 1.0, "trials": 3}), encoding="utf-8")
    out = tmp_path / "t.csv"
    code, _ = _run(capsys, "simulate", "povm", "--config", str(config), "--theta-true", "0",
                   "--copies", "10000", "--out", str(out))
    assert code == 0
    assert len(out.read_text(encoding="utf-8").splitlines()) == 4


def test_missing_config_file(capsys, tmp_path):
    code, _ = _run(capsys, *_simulate_args(tmp_path / "t.csv", "--config", str(tmp_path / "none.json")))
    assert code == 3


def test_sweep_outside_acceptance_band(capsys, tmp_path):
    code, out = _run(capsys, "sweep", "homodyne", "--r", "1", "--theta-true", "0", "--trials", "3",
                     "--seed", "1", "--copies-list", "1000", "10000", "--acceptance-band", "100", "200")
    assert code == 2
    assert len(json.loads(out)["rows"]) == 2


def test_sweep_rejects_descending_copies(capsys):
    code, _ = _run(capsys, "sweep", "homodyne", "--r", "1", "--theta-true", "0", "--trials", "3",
                   "--seed", "1", "--copies-list", "10000", "1000")
    assert code == 1


def test_unwritable_output(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x", encoding="utf-8")
    code, _ = _run(capsys, *_simulate_args(blocker / "trials.csv"))
    assert code == 3


def test_degrees_are_converted(capsys, tmp_path):
    out = tmp_path / "trials.csv"
    code, stdout = _run(capsys, "simulate", "homodyne", "--r", "1", "--theta-true", "90", "--degrees",
                        "--copies", "10000", "--trials", "2", "--seed", "5", "--out", str(out))
    assert code == 0
    summary = json.loads(Path(json.loads(stdout)["summary"]).read_text(encoding="utf-8"))
    assert summary["config"]["theta_true"] == pytest.approx(math.pi / 2)


def test_qfi_with_displacement(capsys):
    code, out = _run(capsys, "qfi", "--r", "1", "--alpha-displacement", "1")
    report = json.loads(out)
    assert code == 0
    assert report["qfi"] == pytest.approx(4.0 * math.exp(-2.0) + math.cosh(4.0) - 1.0)
    assert report["mean_photon_number"] == pytest.approx(1.0 + math.sinh(1.0) ** 2)


def test_version_comes_from_settings(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.strip() == f"gaussian-phase {settings.APP_VERSION}"
