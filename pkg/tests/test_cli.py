import filecmp
import subprocess
import sys

import pytest

from sdclab.cli import main

DEMO = """# tiny demo
[problem]
kind = convdiff2d
dims = 10x10

[stack]
solvers = fgmres,gmres,schwarz
subdomains = 4
inner_max_iters = 8

[detectors]
residual_check = true

[sweep]
scale_factors = 1, 1e5
faulty_counts = 1, 4
heatmap = true
"""


def _stats(out):
    return {line.split()[0]: line.split()[1] for line in out.splitlines()[1:]}


def test_solve_prints_k_and_convergence(capsys):
    assert main(["solve", "--problem", "poisson2d:32x32", "--stack", "fgmres,cg,amg"]) == 0
    s = _stats(capsys.readouterr().out)
    assert s["converged"] == "True" and int(s["K"]) <= 15


def test_gen_then_solve_matches_direct(tmp_path, capsys):
    mtx = tmp_path / "m.mtx"
    assert main(["gen", "--problem", "convdiff2d:16x16", "--out", str(mtx)]) == 0
    capsys.readouterr()
    common = ["--stack", "fgmres,gmres,schwarz", "--subdomains", "4"]
    assert main(["solve", "--matrix", str(mtx)] + common) == 0
    from_file = _stats(capsys.readouterr().out)
    assert main(["solve", "--problem", "convdiff2d:16x16"] + common) == 0
    direct = _stats(capsys.readouterr().out)
    for key in ("K", "iterations", "dot_products", "final_residual", "max_abs_error"):
        assert from_file[key] == direct[key]


def test_usage_errors_exit_one(capsys, tmp_path):
    assert main(["solve", "--no-such-flag"]) == 1
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["solve", "--problem", "poisson2d:abc"]) == 1
    assert main(["sweep", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert "usage" in capsys.readouterr().err


def test_numerical_failure_exits_two(capsys, tmp_path):
    # CG is not applicable to a nonsymmetric operator.
    rc = main(["solve", "--problem", "convdiff2d:16x16", "--stack", "cg,identity",
               "--subdomains", "4"])
    assert rc == 2
    # Zero pivot in ILU(0).
    mtx = tmp_path / "z.mtx"
    mtx.write_text("%%MatrixMarket matrix coordinate real general\n2 2 4\n"
                   "1 1 1\n1 2 1\n2 1 1\n2 2 1\n")
    assert main(["baseline", "--matrix", str(mtx), "--stack", "gmres,ilu0", "--subdomains", "1"]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_sweep_twice_same_seed_is_identical(tmp_path):
    cfg = tmp_path / "demo.cfg"
    cfg.write_text(DEMO)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--config", str(cfg), "--seed", "42", "--out-dir", str(a)]) == 0
    assert main(["--jobs", "2", "sweep", "--config", str(cfg), "--seed", "42", "--out-dir", str(b)]) == 0
    cmp = filecmp.dircmp(a, b)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    assert (a / "demo.cfg").read_text() == DEMO
    assert {"grid.csv", "runs.csv", "heatmap.svg", "baseline.json"} <= {p.name for p in a.iterdir()}


def test_render_subcommand(tmp_path):
    cfg = tmp_path / "demo.cfg"
    cfg.write_text(DEMO.replace("heatmap = true", "heatmap = false"))
    out = tmp_path / "o"
    assert main(["sweep", "--config", str(cfg), "--out-dir", str(out)]) == 0
    assert not (out / "heatmap.svg").exists()
    assert main(["render", str(out / "grid.csv"), "--out", str(tmp_path / "h.svg")]) == 0
    assert (tmp_path / "h.svg").read_text().startswith("<svg")


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "sdclab", "gen", "--problem", "x"],
                       capture_output=True, text=True)
    assert r.returncode == 1
