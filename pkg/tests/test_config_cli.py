import numpy as np
import pytest

from nibm import cli
from nibm.config import parse_config
from nibm.csvio import load_solution, read_csv, write_csv
from nibm.errors import ConfigError, IllConditioned, MissingArtifact

SEMI = """
[problem]
a = 0
b = 0
t = 1/2
T = 1

[transitions]
row1 = 1

[solver]
grid = 200

[ensemble]
n = 2
samples = 20
time_steps = 64
n_sequence = 2, 4
"""

PQ2 = """
[problem]
a = 1, -1
b = 1, -1
t = 1/2
T = {T}

[transitions]
row1 = 1/3, 0
row2 = 1/3, 1/3

[solver]
grid = 300

[ensemble]
n = 6
samples = 30
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(*args):
    return cli.main([str(a) for a in args])


def test_parse_config_defaults_and_values():
    rc = parse_config(PQ2.format(T="0.05"))
    assert rc.problem.p == 2 and rc.problem.T == 0.05
    assert rc.transitions.shape == (2, 2)
    assert rc.solver.grid == 300 and rc.solver.refine
    assert rc.ensemble.n == 6 and rc.ensemble.seed == 0 and rc.ensemble.n_sequence == (4, 8, 16)


@pytest.mark.parametrize("text", [
    SEMI + "\n[extra]\nx = 1\n",
    SEMI.replace("grid = 200", "grid = 200\nsmoothing = 3"),
    SEMI.replace("row1 = 1", "row2 = 1"),
    SEMI.replace("row1 = 1", "row1 = 1, 0"),
    SEMI.replace("T = 1", "T = -1"),
    SEMI.replace("t = 1/2", "t = 1"),
    SEMI.replace("n = 2", "n = two"),
    SEMI.replace("[problem]", "[problem]\np = 2"),
    "[problem]\na = 0\n",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_csv_round_trip(tmp_path):
    rows = [(1, 0.1, -2.5e-300), (2, np.float64(1 / 3), float("nan")), (3, 7, 1e300)]
    write_csv(tmp_path / "x.csv", ["a", "b", "c"], rows)
    header, back = read_csv(tmp_path / "x.csv")
    assert header == ["a", "b", "c"]
    assert back[0] == [1, 0.1, -2.5e-300] and back[1][1] == 1 / 3 and np.isnan(back[1][2])
    with pytest.raises(MissingArtifact):
        read_csv(tmp_path / "nope.csv")


def test_validate_exit_codes(tmp_path, configs_dir, capsys):
    assert run("--config", configs_dir / "two_by_four.ini", "validate") == 0
    out = capsys.readouterr().out
    assert "5 edges" in out and "leaf-peel order" in out
    assert run("--config", configs_dir / "disconnected.ini", "validate") == 2
    assert "NotConnected" in capsys.readouterr().err
    empty = write(tmp_path, SEMI.replace("row1 = 1", ""))
    assert run("--config", empty, "validate") == 2
    assert run("--config", tmp_path / "missing.ini", "validate") == 2
    assert run("validate") == 2


def test_solve_outputs_and_determinism(tmp_path):
    cfg = write(tmp_path, SEMI)
    assert run("--config", cfg, "--out", tmp_path / "o1", "solve") == 0
    assert run("solve", "--config", cfg, "--out", tmp_path / "o2") == 0  # flags after the subcommand
    for name in ("density.csv", "supports.csv", "el_report.csv", "edge_exponents.csv", "solution.json"):
        assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()
    header, rows = read_csv(tmp_path / "o1" / "supports.csv")
    assert header == ["component", "alpha", "beta", "L"] and len(rows) == 1
    assert rows[0][1] == pytest.approx(-1, abs=5e-3) and rows[0][2] == pytest.approx(1, abs=5e-3)
    header, rows = read_csv(tmp_path / "o1" / "density.csv")
    assert header == ["component", "x", "rho"] and len(rows) == 200
    sol = load_solution(tmp_path / "o1" / "solution.json")
    assert sol.method == "one-cut" and sol.measures[0].mass == pytest.approx(1)


def test_solve_three_disjoint_rows(tmp_path):
    cfg = write(tmp_path, PQ2.format(T="0.05"))
    assert run("--config", cfg, "--out", tmp_path, "solve") == 0
    _, rows = read_csv(tmp_path / "supports.csv")
    assert len(rows) == 3
    assert rows[1][2] < rows[0][1] and rows[2][2] < rows[1][1]


def test_solve_large_temperature_exit_3(tmp_path):
    cfg = write(tmp_path, PQ2.format(T="10"))
    assert run("--config", cfg, "--out", tmp_path, "solve") == 3
    assert (tmp_path / "supports.csv").exists()


def test_solve_max_iter_exit_4(tmp_path):
    cfg = write(tmp_path, PQ2.format(T="0.05").replace("grid = 300", "grid = 300\nmax_iter = 1"))
    assert run("--config", cfg, "--out", tmp_path, "solve") == 4
    assert (tmp_path / "density.csv").exists()  # best iterate written


def test_missing_solution_exit_5(tmp_path):
    cfg = write(tmp_path, SEMI)
    assert run("--config", cfg, "--out", tmp_path / "empty", "spectral") == 5
    assert run("--config", cfg, "--out", tmp_path / "empty", "compare") == 5


def test_spectral_and_compare(tmp_path, capsys):
    cfg = write(tmp_path, PQ2.format(T="0.05"))
    out = tmp_path / "o"
    assert run("--config", cfg, "--out", out, "solve") == 0
    assert run("--config", cfg, "--out", out, "spectral") == 0
    assert "all spectral checks passed" in capsys.readouterr().out
    header, rows = read_csv(out / "contours.csv")
    assert len(rows) == 12 and all(r[-1] == 1 for r in rows)
    header, rows = read_csv(out / "lens_step1.csv")
    assert header == ["re_z", "im_z", "sign", "component_id"] and len(rows) == 600 * 400
    header, rows = read_csv(out / "xi_boundary.csv")
    assert header == ["sheet", "x", "re", "im"]
    header, rows = read_csv(out / "lens_summary.csv")
    assert [r[-1] for r in rows] == [1, 1]


def test_compare_table(tmp_path):
    cfg = write(tmp_path, SEMI)
    assert run("--config", cfg, "--out", tmp_path, "solve") == 0
    assert run("--config", cfg, "--out", tmp_path, "compare") == 0
    header, rows = read_csv(tmp_path / "compare.csv")
    assert header == ["n", "l1"] and [r[0] for r in rows] == [2, 4]
    assert rows[1][1] < rows[0][1]


def test_kernel_and_sample(tmp_path):
    cfg = write(tmp_path, PQ2.format(T="0.05"))
    assert run("--config", cfg, "--out", tmp_path / "a", "kernel") == 0
    header, rows = read_csv(tmp_path / "a" / "kernel_n6.csv")
    assert header == ["x", "kxx_over_n"]
    assert run("--config", cfg, "--out", tmp_path / "a", "--seed", 4, "sample") == 0
    assert run("--config", cfg, "--out", tmp_path / "b", "--seed", 4, "sample") == 0
    for name in ("paths.csv", "slices.csv", "sampler_stats.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header, rows = read_csv(tmp_path / "a" / "paths.csv")
    assert header == ["path_id", "time", "x"] and len(rows) == 6 * 257
    assert sorted({r[0] for r in rows}) == [1, 2, 3, 4, 5, 6]
    header, rows = read_csv(tmp_path / "a" / "sampler_stats.csv")
    assert header == ["accepted", "rejected", "seed"] and rows[0][0] == 30 and rows[0][2] == 4


def test_ensemble_error_codes(tmp_path, monkeypatch):
    cfg = write(tmp_path, PQ2.format(T="0.05"))
    assert run("--config", cfg, "--out", tmp_path, "--n", 4, "kernel") == 2  # NonIntegerCounts
    stats = write(tmp_path, PQ2.format(T="0.05").replace("samples = 30", "samples = 30\nmax_rejects = 0"), "b.ini")
    assert run("--config", stats, "--out", tmp_path, "sample") == 8

    def ill(*a, **k):
        raise IllConditioned("forced")

    monkeypatch.setattr("nibm.ensemble.gram_matrix", ill)
    assert run("--config", cfg, "--out", tmp_path, "kernel") == 7
