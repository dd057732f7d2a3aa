import subprocess
import sys
from pathlib import Path

import pytest

from slcrack import export
from slcrack.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text((CONFIGS / "case1a.cfg").read_text()
                 .replace("mesh.nx = 64", "mesh.nx = 16").replace("mesh.ny = 32", "mesh.ny = 8"))
    return p


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for k in [k for k in __import__("os").environ if k.startswith("SLCRACK_")]:
        monkeypatch.delenv(k)


def test_run_exit_zero(small_cfg, tmp_path, capsys):
    assert main(["run", str(small_cfg), "--output-dir", str(tmp_path / "out")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("alpha1_beta1_sigmaT0.1_fiberX_slope status=ConvergedTol iterations=")
    assert out[-1] == f"manifest={tmp_path / 'out' / 'manifest.txt'}"


def test_config_error_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("material.lambda = 1\nmaterial.gamma = 0.5\n")
    assert main(["run", str(p)]) == 2
    err = capsys.readouterr().err
    assert err.startswith("config error:") and "material.mu" in err


def test_bad_threads(small_cfg, capsys):
    assert main(["run", str(small_cfg), "--threads", "0"]) == 2
    assert "--threads" in capsys.readouterr().err


def test_invalid_mesh_value_exit_two(small_cfg, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SLCRACK_MESH__NX", "1")
    assert main(["mesh-info", str(small_cfg)]) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_env_override_reaches_run(small_cfg, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SLCRACK_MATERIAL__BETA", "2")
    assert main(["run", str(small_cfg), "--output-dir", str(tmp_path)]) == 0
    assert "beta2_" in capsys.readouterr().out


def test_deterministic_hashes(small_cfg, tmp_path):
    for d in ("a", "b"):
        assert main(["run", str(small_cfg), "--output-dir", str(tmp_path / d)]) == 0
    assert export.read_manifest(tmp_path / "a" / "manifest.txt") == export.read_manifest(tmp_path / "b" / "manifest.txt")


def test_mesh_info(small_cfg, tmp_path, capsys):
    vtk = tmp_path / "mesh.vtk"
    assert main(["mesh-info", str(small_cfg), "--vtk", str(vtk)]) == 0
    info = dict(line.split("=", 1) for line in capsys.readouterr().out.splitlines())
    assert info["nodes"] == "153" and info["dofs"] == "306" and info["crack_tip"] == "(1,0)"
    assert vtk.read_text().startswith("# vtk DataFile")


def test_compare_loads_command(tmp_path, capsys):
    p = tmp_path / "c.cfg"
    p.write_text("material.mu = 1\nmaterial.lambda = 1\nmaterial.gamma = 0.5\ncase = Custom\n"
                 "mesh.nx = 16\nmesh.ny = 8\ncompare.sigma_t = 0.01\n")
    assert main(["compare-loads", str(p), "--output-dir", str(tmp_path / "out")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [l.split()[2] for l in lines[:3]] == ["load=uniform", "load=slope", "load=sine"]
    assert (tmp_path / "out" / "compare_loads" / "summary.csv").exists()


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "slcrack", "--help"], capture_output=True, text=True)
    assert p.returncode == 0 and "compare-loads" in p.stdout
