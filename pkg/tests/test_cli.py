import csv
import os

import pytest

from mfglab.cli import (
    EXIT_CONFIG,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_ROOTS,
    main,
)

BASE = """
model.r = 2
model.b1 = 0
model.b2 = 0
model.b3 = 2
model.b4 = 0
model.A = 2
model.C = 1
law0.kind = dirac
law0.x0 = 1
sim.T = 2
sim.dt = 0.002
sim.nPaths = 500
sim.nParticles = 400
sim.seed = 7
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(BASE + f"output = {tmp_path / 'out'}\n")
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_check_exits_zero(cfg_path, capsys):
    assert main(["check", "--config", cfg_path]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out


def test_solve_writes_roots(cfg_path, tmp_path):
    assert main(["solve", "--config", cfg_path]) == EXIT_OK
    rows = read_csv(tmp_path / "out" / "roots.csv")
    assert rows[0] == ["a1", "a2", "a3", "a4", "cx", "cm", "admissible"]
    assert len(rows) == 5
    assert sum(1 for r in rows[1:] if r[6] == "1") == 1
    selected = read_csv(tmp_path / "out" / "selected.csv")
    assert float(selected[1][0]) == 0.5


def test_solve_output_is_deterministic(cfg_path, tmp_path):
    assert main(["solve", "--config", cfg_path]) == EXIT_OK
    first = (tmp_path / "out" / "roots.csv").read_bytes()
    assert main(["solve", "--config", cfg_path]) == EXIT_OK
    assert (tmp_path / "out" / "roots.csv").read_bytes() == first


def test_simulate_writes_flow_and_cost(cfg_path, tmp_path):
    assert main(["simulate", "--config", cfg_path]) == EXIT_OK
    flow = read_csv(tmp_path / "out" / "flow.csv")
    assert flow[0] == ["t", "mean", "var", "q05", "q95"]
    assert float(flow[1][1]) == 1.0  # dirac start
    cost = read_csv(tmp_path / "out" / "cost.csv")
    assert cost[0] == ["mean", "stderr", "ci_lo", "ci_hi", "tail_bound"]
    assert 0.5 < float(cost[1][0]) < 1.0


def test_fixed_point_writes_outputs(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        BASE
        + f"output = {tmp_path / 'out'}\n"
        + "fixedPoint.damping = 1.0\nfixedPoint.tol = 0.01\nfixedPoint.maxIter = 20\n"
    )
    assert main(["fixed-point", "--config", str(p)]) == EXIT_OK
    for name in ("flow_iterations.csv", "final_flow.csv", "field.csv"):
        assert (tmp_path / "out" / name).exists()


def test_fixed_point_nonconvergence_exit_code(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(
        BASE
        + f"output = {tmp_path / 'out'}\n"
        + "fixedPoint.damping = 0.5\nfixedPoint.tol = 1e-15\nfixedPoint.maxIter = 2\n"
    )
    assert main(["fixed-point", "--config", str(p)]) == EXIT_NO_CONVERGENCE


def test_verify_subset(tmp_path, capsys):
    p = tmp_path / "run.cfg"
    p.write_text(BASE + f"output = {tmp_path / 'out'}\n")
    code = main(["verify", "--config", str(p), "--checks", "consistency,lipschitz"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS consistency" in out and "PASS lipschitz" in out
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert summary.count("PASS") == 2


def test_verify_unknown_check_is_config_error(cfg_path):
    assert main(["verify", "--config", cfg_path, "--checks", "nope"]) == EXIT_CONFIG


def test_verify_empty_checks_is_config_error(cfg_path):
    assert main(["verify", "--config", cfg_path, "--checks", ""]) == EXIT_CONFIG


def test_unknown_key_exit_code(tmp_path, capsys):
    p = tmp_path / "run.cfg"
    p.write_text(BASE + "model.b5 = 1\n")
    assert main(["solve", "--config", str(p)]) == EXIT_CONFIG
    assert "model.b5" in capsys.readouterr().err


def test_invalid_model_exit_code(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(BASE.replace("model.b3 = 2", "model.b3 = 0"))
    assert main(["solve", "--config", str(p)]) == EXIT_CONFIG


def test_root_selection_failure_exit_code(tmp_path):
    # strong mean coupling with a negative cross cost destabilizes every
    # candidate, so selection finds no admissible root
    text = BASE.replace("model.b2 = 0", "model.b2 = 3").replace(
        "model.b4 = 0", "model.b4 = -6"
    )
    p = tmp_path / "run.cfg"
    p.write_text(text + f"output = {tmp_path / 'out'}\n")
    assert main(["solve", "--config", str(p)]) == EXIT_ROOTS


def test_seed_override_changes_costs(cfg_path, tmp_path):
    assert main(["simulate", "--config", cfg_path, "--seed", "1"]) == EXIT_OK
    first = read_csv(tmp_path / "out" / "cost.csv")
    assert main(["simulate", "--config", cfg_path, "--seed", "2"]) == EXIT_OK
    second = read_csv(tmp_path / "out" / "cost.csv")
    assert first[1][0] != second[1][0]


def test_out_override(tmp_path, cfg_path):
    alt = tmp_path / "alt"
    assert main(["solve", "--config", cfg_path, "--out", str(alt)]) == EXIT_OK
    assert (alt / "roots.csv").exists()


def test_missing_config_file_exit_code():
    assert main(["solve", "--config", "/nonexistent.cfg"]) == EXIT_CONFIG
