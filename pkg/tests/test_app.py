from dataclasses import replace

import numpy as np
import pytest

from slcrack import app, export
from slcrack.assembly import LoadKind
from slcrack.config import MeshSpec, build_config
from slcrack.constitutive import FiberAxis
from slcrack.picard import PicardError, PicardState

BASE = {"material.mu": "1", "material.lambda": "1", "material.gamma": "0.5"}
SMALL = {"mesh.nx": "16", "mesh.ny": "8"}


def config(**extra):
    return build_config({**BASE, **SMALL, **extra})


def test_run_writes_artifact_tree(tmp_path):
    out = app.run(config(case="Case1a"), tmp_path)
    assert out.ok and len(out.results) == 1
    r = out.results[0]
    assert r.directory == tmp_path / "Case1a" / app.signature(r.material, r.load)
    names = sorted(p.name for p in r.directory.iterdir())
    assert names == ["convergence.csv", "fields.vtk", "opening.csv", "profile.csv"]
    meta, cols = export.read_table(r.directory / "profile.csv")
    assert meta["case"] == "Case1a" and meta["fiber"] == "X" and meta["load"] == "slope"
    assert np.all(np.diff(cols["x"]) > 0)
    _, conv = export.read_table(r.directory / "convergence.csv")
    assert conv["iteration"].tolist() == list(range(1, r.state.iterations + 1))


def test_manifest_lists_every_file(tmp_path):
    out = app.run(config(case="Case2b", **{"sweep.beta": "0.5, 1, 2"}), tmp_path)
    recs = export.read_manifest(out.manifest)
    files = sorted(p.relative_to(tmp_path).as_posix() for p in tmp_path.rglob("*") if p.is_file() and p.name != "manifest.txt")
    assert sorted(r["file"] for r in recs) == files
    for rec in recs:
        assert rec["sha256"] == export.sha256_file(tmp_path / rec["file"])
        assert rec["status"] == "ConvergedTol" and rec["case"] == "Case2b"


def test_beta_sweep_profiles(tmp_path):
    out = app.run(config(case="Case2b", **{"sweep.beta": "0.5, 1, 2"}), tmp_path)
    assert [r.material.beta for r in out.results] == [0.5, 1.0, 2.0]
    profiles = sorted((tmp_path / "Case2b").glob("*/profile.csv"))
    assert len(profiles) == 3
    peaks = [r.report.peak_energy for r in out.results]
    assert peaks[0] > peaks[1] > peaks[2]


def test_runs_are_deterministic(tmp_path):
    cfg = config(case="Case1b", **{"sweep.sigma_t": "0.01, 0.1"})
    a = export.read_manifest(app.run(cfg, tmp_path / "a").manifest)
    b = export.read_manifest(app.run(cfg, tmp_path / "b", threads=2).manifest)
    assert a == b


def test_sweep_points_product():
    pts = app.sweep_points(config(**{"sweep.alpha": "0.5, 1", "sweep.beta": "1, 2, 3"}))
    assert len(pts) == 6
    assert {(m.alpha, m.beta) for m, _ in pts} == {(a, b) for a in (0.5, 1) for b in (1, 2, 3)}


def test_failed_point_is_flagged(tmp_path, monkeypatch):
    real = app.run_picard

    def failing(mesh, m, load, *args, **kw):
        if m.beta == 2.0:
            raise PicardError("forced failure", PicardState(np.zeros(mesh.n_dofs), np.zeros(mesh.n_dofs)))
        return real(mesh, m, load, *args, **kw)

    monkeypatch.setattr(app, "run_picard", failing)
    out = app.run(config(case="Case1a", **{"sweep.beta": "1, 2"}), tmp_path)
    assert not out.ok
    assert [r.status for r in out.results] == ["ConvergedTol", "Failed"]
    bad = out.results[1]
    assert [p.name for p in bad.files] == ["convergence.csv"]
    recs = export.read_manifest(out.manifest)
    assert {r["status"] for r in recs if "beta2" in r["file"]} == {"Failed"}


def test_compare_loads(tmp_path):
    cfg = config(case="Custom", **{"compare.sigma_t": "0, 0.01", "compare.fiber_axes": "X"})
    res = app.compare_loads(cfg, tmp_path)
    assert res.ok
    assert list(res.peaks) == [(FiberAxis.X, s, k) for s in (0.0, 0.01)
                              for k in (LoadKind.UNIFORM, LoadKind.SLOPE, LoadKind.SINE)]
    for k in (LoadKind.UNIFORM, LoadKind.SLOPE, LoadKind.SINE):
        assert res.peaks[(FiberAxis.X, 0.0, k)]["peak_sigma_yy"] == 0.0
    p = res.peaks
    # uniform tension opens the crack hardest; sine and slope load it less
    assert p[(FiberAxis.X, 0.01, LoadKind.UNIFORM)]["peak_sigma_yy"] > p[(FiberAxis.X, 0.01, LoadKind.SLOPE)]["peak_sigma_yy"]
    meta, cols = export.read_table(tmp_path / "compare_loads" / "fiberX_sigmaT0.csv")
    assert meta["fiber"] == "X"
    assert not cols["sigma_yy_uniform"].any() and not cols["eps_yy_sine"].any()
    assert sorted(r["file"] for r in export.read_manifest(res.manifest)) == [
        "compare_loads/fiberX_sigmaT0.01.csv", "compare_loads/fiberX_sigmaT0.csv", "compare_loads/summary.csv"]


def test_mesh_summary():
    cfg = config()
    info = app.mesh_summary(app.plate_mesh(replace(cfg, mesh=MeshSpec(nx=4, ny=2, grading=1.0))))
    assert info["nodes"] == 15 and info["elements"] == 8 and info["dofs"] == 30
    assert info["crack_tip"] == "(1,0)"
