import math
import os
import subprocess
import sys

import numpy as np
import pytest

from convdiff import cli
from convdiff.analytic import TruncationError
from convdiff.linsolve import SingularSystemError
from convdiff.output import fmt, read_csv, write_csv


def run(tmp_path, *args, sub="out"):
    out = tmp_path / sub
    code = cli.main([*args, "--out", str(out)])
    return code, out


def test_paper1d_reports_91_dofs(tmp_path):
    code, out = run(tmp_path, "solve", "--preset", "paper1d")
    assert code == 0
    header, rows = read_csv(out / "report.csv")
    rec = dict(zip(header, rows[0]))
    assert int(rec["dof"]) == 91
    assert {"solution.csv", "report.csv", "solution.svg"} <= set(os.listdir(out))


def test_paper2d_layer_files(tmp_path):
    code, out = run(tmp_path, "solve", "--preset", "paper2d", "--stab", "supg", "--n", "8")
    assert code == 0
    names = set(os.listdir(out))
    for y in ("0.5", "0.7"):
        assert f"layer_y{y}.csv" in names and f"layer_y{y}.svg" in names
    assert "solution.vtk" in names
    header, rows = read_csv(out / "layer_y0.5.csv")
    assert header == ["x", "y", "u_h", "u_exact"]
    assert len(rows) == 201
    vtk = (out / "solution.vtk").read_text()
    assert vtk.startswith("# vtk DataFile Version 3.0")
    assert "SCALARS u double 1" in vtk


@pytest.mark.parametrize("args", [
    ("solve", "--preset", "custom", "--n", "0"),
    ("solve", "--degree", "6"),
    ("solve", "--eps", "0"),
    ("solve", "--b", "nan"),
    ("solve", "--stab", "upwind"),
    ("solve", "--preset", "paper2d", "--b", "500"),
    ("convergence", "--n", "32"),
    ("oracle", "--points", "2"),
])
def test_invalid_config_exit_2_without_files(tmp_path, args):
    code, out = run(tmp_path, *args)
    assert code == 2
    assert not out.exists()


def test_empty_mesh_list_exit_2(tmp_path):
    code, out = run(tmp_path, "convergence", "--n", "")
    assert code == 2
    assert not out.exists()


def test_singular_system_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SingularSystemError("zero pivot", 3)

    monkeypatch.setattr(cli, "solve_problem", boom)
    code, _ = run(tmp_path, "solve", "--preset", "paper1d")
    assert code == 3


def test_truncation_exit_4(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise TruncationError("no convergence", 1e-3)

    monkeypatch.setattr(cli, "exact_2d_with_counts", boom)
    code, _ = run(tmp_path, "oracle", "--preset", "paper2d", "--points", "0.5,0.5")
    assert code == 4


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# test settings\npreset = custom\ndim = 1\nb = 5\ndegree = 2\nn = 6\n")
    code, out = run(tmp_path, "solve", "--config", str(cfg), "--n", "4")
    assert code == 0
    header, rows = read_csv(out / "report.csv")
    rec = dict(zip(header, rows[0]))
    assert (rec["b"], rec["degree"], rec["n"], rec["dof"]) == (5, 2, 4, 9)


def test_bad_config_file_exit_2(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("this line has no equals sign\n")
    code, _ = run(tmp_path, "solve", "--config", str(cfg))
    assert code == 2


def test_convergence_rates_file(tmp_path):
    code, out = run(tmp_path, "convergence", "--preset", "paper1d", "--b", "10",
                    "--degree", "1,2", "--n", "32,64,128")
    assert code == 0
    header, rows = read_csv(out / "rates.csv")
    assert header == ["kind", "degree", "n", "h", "dof", "l2", "h1_semi", "linf", "overshoot"]
    assert sum(r[0] == "run" for r in rows) == 6
    rates = {int(r[1]): float(r[5]) for r in rows if r[0] == "rate"}
    assert rates[1] == pytest.approx(2.0, abs=0.3)
    assert rates[2] == pytest.approx(3.0, abs=0.3)


def test_oracle_1d_values(tmp_path):
    code, out = run(tmp_path, "oracle", "--preset", "paper1d", "--points", "0;0.5;1")
    assert code == 0
    header, rows = read_csv(out / "oracle.csv")
    u = [float(r[1]) for r in rows]
    assert u[0] == 1.0 and u[2] == 0.0
    assert u[1] == pytest.approx(1 - math.exp(-25), abs=1e-15)
    hdr, chk = read_csv(out / "oracle_check.csv")
    assert hdr == ["b", "points_checked", "max_relative_residual"]


def test_oracle_2d_values(tmp_path):
    code, out = run(tmp_path, "oracle", "--preset", "paper2d", "--points", "0.5,1")
    assert code == 0
    assert float(read_csv(out / "oracle.csv")[1][0][2]) == 0.0
    code, out = run(tmp_path, "oracle", "--preset", "paper2d", "--b", "0", "--points", "0.5,0.5", sub="b0")
    assert code == 0
    assert float(read_csv(out / "oracle.csv")[1][0][2]) == pytest.approx(0.5, abs=1e-8)
    _, chk = read_csv(out / "oracle_check.csv")
    assert float(chk[0][2]) < 1e-5


@pytest.mark.parametrize("args", [
    ("solve", "--preset", "paper1d"),
    ("solve", "--preset", "paper2d", "--stab", "supg", "--n", "8", "--degree", "3"),
    ("convergence", "--preset", "paper1d", "--b", "10", "--n", "8,16"),
    ("oracle", "--preset", "paper2d"),
])
def test_byte_identical_reruns(tmp_path, args):
    _, a = run(tmp_path, *args, sub="a")
    _, b = run(tmp_path, *args, sub="b")
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    for name in names:
        if name == "report.csv":
            # wall time is the one field allowed to differ
            ha, ra = read_csv(a / name)
            hb, rb = read_csv(b / name)
            k = ha.index("wall_time")
            assert ha == hb
            assert [r[:k] + r[k + 1:] for r in ra] == [r[:k] + r[k + 1:] for r in rb]
        else:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    values = np.concatenate([rng.normal(size=50) * 10.0 ** rng.integers(-300, 300, 50),
                             [0.0, -0.0, 1 / 3, 5e-324, 1.7976931348623157e308]])
    path = tmp_path / "v.csv"
    write_csv(path, ["v"], [[v] for v in values])
    _, rows = read_csv(path)
    back = np.array([float(r[0]) for r in rows])
    assert back.tobytes() == values.tobytes()
    assert fmt(0.1) == "0.10000000000000001"


def test_solution_csv_round_trips_solver_values(tmp_path):
    from convdiff.assembly import solve_problem
    from convdiff.mesh import build_interval_mesh
    from convdiff.problem import paper_1d

    code, out = run(tmp_path, "solve", "--preset", "paper1d")
    assert code == 0
    sol = solve_problem(paper_1d(50.0), build_interval_mesh(30), 3)
    _, rows = read_csv(out / "solution.csv")
    assert np.array([float(r[1]) for r in rows]).tobytes() == sol.values.tobytes()


def test_galerkin_overshoot_visible_supg_clean(tmp_path):
    common = ("solve", "--preset", "custom", "--dim", "1", "--b", "50", "--degree", "1", "--n", "10")
    code, gal = run(tmp_path, *common, "--stab", "galerkin", sub="gal")
    assert code == 0
    code, supg = run(tmp_path, *common, "--stab", "supg", sub="supg")
    assert code == 0
    ug = [float(r[1]) for r in read_csv(gal / "solution.csv")[1]]
    us = [float(r[1]) for r in read_csv(supg / "solution.csv")[1]]
    assert max(ug) > 1.1
    assert max(us) <= 1.0 and min(us) >= 0.0
    assert "<polyline" in (gal / "solution.svg").read_text()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "convdiff", "oracle", "--preset", "paper1d",
                           "--points", "0.5", "--out", str(tmp_path / "m")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "residual check" in proc.stdout
