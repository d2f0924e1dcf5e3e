import json

import pytest

from csaloha import block_threshold, solve_load_bound
from csaloha.cli import main


def run_cli(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_bound_prints_six_significant_digits(capsys):
    rc, out, _ = run_cli(capsys, "bound", "--d", "4")
    assert rc == 0
    assert out.strip() == f"{solve_load_bound(0.25):.6g}"


def test_bound_degenerate_degree_one(capsys):
    rc, out, _ = run_cli(capsys, "bound", "--d", "1")
    assert rc == 0 and out.strip() == "0"


def test_bound_json_format(capsys):
    rc, out, _ = run_cli(capsys, "bound", "--d", "5", "--format", "json")
    payload = json.loads(out)
    assert rc == 0
    assert payload["g_star"] == pytest.approx(solve_load_bound(0.2), abs=1e-15)


def test_sweep_empty_list_is_empty_success(capsys):
    rc, out, err = run_cli(capsys, "sweep", "--d-list", "")
    assert rc == 0 and out == "" and err == ""


def test_sweep_row_matches_library(capsys):
    rc, out, _ = run_cli(
        capsys, "sweep", "--d-list", "3", "--l", "30", "--tol", "1e-3"
    )
    assert rc == 0
    header, row = out.strip().splitlines()
    assert header == "rate,g_it_block,g_it_coupled,g_star"
    rate, g_block, g_coupled, g_star = (float(tok) for tok in row.split(","))
    assert rate == pytest.approx(1 / 3, abs=1e-9)
    assert g_block == pytest.approx(block_threshold(3, bisect_tol=1e-3).threshold, abs=1e-9)
    assert g_star == pytest.approx(solve_load_bound(1 / 3), abs=1e-9)
    assert g_coupled > g_block


def test_thresholds_d_max_guard(capsys):
    rc, _, err = run_cli(capsys, "thresholds", "--d-max", "9")
    assert rc == 2 and "d-max" in err


def test_thresholds_small_table(capsys):
    rc, out, _ = run_cli(
        capsys, "thresholds", "--d-max", "2", "--l", "40", "--tol", "1e-3"
    )
    assert rc == 0
    header, row = out.strip().splitlines()
    assert header == "d,g_it_block,g_it_coupled,g_map_bound,g_star,efficiency"
    vals = row.split(",")
    assert vals[0] == "2"
    assert float(vals[1]) == pytest.approx(0.5, abs=2e-3)
    assert float(vals[3]) == pytest.approx(0.5, abs=1e-3)
    assert float(vals[4]) == pytest.approx(0.796812, abs=1e-5)
    assert float(vals[5]) == pytest.approx(float(vals[2]) / float(vals[4]), abs=1e-9)


def test_simulate_reproducible_payload(capsys):
    argv = [
        "simulate", "block", "--d", "3", "--g", "0.7", "--slots", "300",
        "--trials", "20", "--seed", "7",
    ]
    rc1, out1, _ = run_cli(capsys, *argv)
    rc2, out2, _ = run_cli(capsys, *argv)
    assert rc1 == rc2 == 0
    p1, p2 = json.loads(out1), json.loads(out2)
    p1.pop("wall_time_s"), p2.pop("wall_time_s")
    assert p1 == p2


def test_simulate_zero_load(capsys):
    rc, out, _ = run_cli(
        capsys, "simulate", "block", "--d", "3", "--g", "0", "--slots", "100",
        "--trials", "5", "--seed", "1",
    )
    assert rc == 0 and json.loads(out)["plr"] == 0.0


def test_simulate_coupled_both_decoders(capsys):
    rc, out, _ = run_cli(
        capsys, "simulate", "coupled", "--d", "3", "--l", "8", "--slots", "60",
        "--g", "0.88", "--trials", "20", "--decoder", "both", "--seed", "1",
    )
    assert rc == 0
    payload = json.loads(out)
    assert payload["gje_plr"] <= payload["plr"]
    assert len(payload["per_position_plr"]) == 8
    assert payload["gje_extra_recovered_total"] >= 0


def test_simulate_worker_count_does_not_change_payload(capsys, monkeypatch):
    argv = [
        "simulate", "block", "--d", "3", "--g", "0.8", "--slots", "200",
        "--trials", "16", "--seed", "3",
    ]
    rc1, out1, _ = run_cli(capsys, *argv)
    monkeypatch.setenv("CSA_THREADS", "3")
    rc2, out2, _ = run_cli(capsys, *argv)
    assert rc1 == rc2 == 0
    p1, p2 = json.loads(out1), json.loads(out2)
    p1.pop("wall_time_s"), p2.pop("wall_time_s")
    assert p1 == p2


def test_simulate_parameter_errors_exit_two(capsys):
    rc, _, err = run_cli(
        capsys, "simulate", "coupled", "--d", "3", "--g", "0.8", "--slots", "100",
        "--trials", "5",
    )
    assert rc == 2 and "chain length" in err
    rc, _, err = run_cli(
        capsys, "simulate", "block", "--d", "3", "--g", "50", "--slots", "100",
        "--trials", "5", "--alpha", "10",
    )
    assert rc == 2


def test_out_flag_writes_file(tmp_path, capsys):
    path = tmp_path / "row.csv"
    rc, out, _ = run_cli(capsys, "bound", "--d", "3", "--format", "csv", "--out", str(path))
    assert rc == 0 and out == ""
    assert path.read_text() == f"d,g_star\n3,{solve_load_bound(1 / 3):.6g}\n"


def test_csv_output_simulate(capsys):
    rc, out, _ = run_cli(
        capsys, "simulate", "block", "--d", "2", "--g", "0.4", "--slots", "100",
        "--trials", "5", "--seed", "2", "--format", "csv",
    )
    assert rc == 0
    header, row = out.strip().splitlines()
    cols = header.split(",")
    assert "plr" in cols and "seed" in cols and "wall_time_s" in cols
    assert len(row.split(",")) == len(cols)
