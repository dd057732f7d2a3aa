"""Benchmark runs, parameter sweeps and load comparisons.

Every sweep point owns the directory
``output_dir/<case>/<signature>/`` and writes ``convergence.csv``,
``profile.csv``, ``opening.csv`` and ``fields.vtk`` there. The coordinator
writes ``manifest.txt`` once all points have finished.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import export
from .assembly import LoadKind, LoadProfile
from .config import RunConfig
from .constitutive import FiberAxis, MaterialModel
from .mesh import BoundaryTag, QuadMesh, build_plate_mesh, dirichlet_dofs
from .picard import PicardError, PicardState, run_picard
from .postprocess import FieldReport, build_report

log = logging.getLogger(__name__)


def plate_mesh(cfg: RunConfig) -> QuadMesh:
    ms = cfg.mesh
    return build_plate_mesh(ms.width, ms.height, ms.crack_length, ms.nx, ms.ny, ms.grading)


def signature(m: MaterialModel, load: LoadProfile) -> str:
    return f"alpha{m.alpha:g}_beta{m.beta:g}_sigmaT{load.sigma_t:g}_fiber{m.fiber_axis.value}_{load.kind.value}"


def run_metadata(case: str, m: MaterialModel, load: LoadProfile, mesh: QuadMesh) -> dict:
    return {
        "case": case, "alpha": m.alpha, "beta": m.beta, "sigma_T": load.sigma_t,
        "fiber": m.fiber_axis.value, "load": load.kind.value, "nx": mesh.nx, "ny": mesh.ny,
    }


@dataclass
class PointResult:
    material: MaterialModel
    load: LoadProfile
    directory: Path
    state: PicardState | None
    report: FieldReport | None
    files: list[Path] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.state is not None and self.state.converged

    @property
    def status(self) -> str:
        if self.error is not None:
            return "Failed"
        return self.state.status.value


def solve_point(mesh: QuadMesh, m: MaterialModel, load: LoadProfile, cfg: RunConfig,
                case: str, out_dir: Path | None) -> PointResult:
    """Solve one parameter point and, if ``out_dir`` is set, write its artifacts."""
    meta = run_metadata(case, m, load, mesh)
    result = PointResult(m, load, out_dir, None, None)
    try:
        state = run_picard(mesh, m, load, cfg.solver, cfg.picard)
    except PicardError as exc:
        result.state, result.error = exc.state, str(exc)
        log.error("%s %s: %s", case, signature(m, load), exc)
        if out_dir is not None:
            result.files.append(export.write_convergence_csv(out_dir / "convergence.csv",
                                                             exc.state.residual_history, meta))
        return result
    result.state = state
    report, fields = build_report(mesh, m, state.u, meta)
    result.report = report
    if out_dir is not None:
        result.files += [
            export.write_convergence_csv(out_dir / "convergence.csv", state.residual_history, meta),
            export.write_profile_csv(out_dir / "profile.csv", report, meta),
            export.write_opening_csv(out_dir / "opening.csv", report.crack_x, report.opening_uy, meta),
            export.write_vtk(out_dir / "fields.vtk", mesh, point_data={
                "displacement": state.u.reshape(-1, 2),
                "stress": fields.stress,
                "strain": fields.strain,
                "energy_density": fields.energy,
            }, title=export.metadata_line(meta)),
        ]
    log.info("%s %s: %s after %d iterations", case, signature(m, load), state.status.value, state.iterations)
    return result


def sweep_points(cfg: RunConfig) -> list[tuple[MaterialModel, LoadProfile]]:
    alphas = cfg.sweep.alpha or (cfg.material.alpha,)
    betas = cfg.sweep.beta or (cfg.material.beta,)
    sigmas = cfg.sweep.sigma_t or (cfg.load.sigma_t,)
    return [(cfg.material.replace(alpha=a, beta=b), LoadProfile(cfg.load.kind, s))
            for a, b, s in itertools.product(alphas, betas, sigmas)]


def _records(results: list[PointResult], case: str) -> list[dict]:
    records = []
    for r in results:
        for f in r.files:
            records.append({
                "file": f, "case": case, "alpha": r.material.alpha, "beta": r.material.beta,
                "sigma_T": r.load.sigma_t, "fiber": r.material.fiber_axis.value,
                "load": r.load.kind.value, "status": r.status,
            })
    return records


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda it: fn(*it), items))


@dataclass
class RunOutcome:
    results: list[PointResult]
    manifest: Path

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)


def run(cfg: RunConfig, output_dir: Path | None = None, threads: int = 1) -> RunOutcome:
    """Run every sweep point of ``cfg`` and write the artifact tree."""
    root = Path(output_dir or cfg.output_dir)
    mesh = plate_mesh(cfg)
    case = cfg.case_name
    points = sweep_points(cfg)
    items = [(mesh, m, load, cfg, case, root / case / signature(m, load)) for m, load in points]
    results = _map(solve_point, items, threads)
    manifest = export.write_manifest(root / "manifest.txt", _records(results, case), root)
    return RunOutcome(results, manifest)


@dataclass
class LoadComparison:
    """Peak crack-line values keyed by ``(fiber, sigma_t, load)``."""

    peaks: dict[tuple[FiberAxis, float, LoadKind], dict[str, float]]
    results: list[PointResult]
    files: list[Path]
    manifest: Path | None = None

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)


def compare_loads(cfg: RunConfig, output_dir: Path | None = None, threads: int = 1,
                  write: bool = True) -> LoadComparison:
    """Crack-line profiles of several load shapes side by side for each sigma_T."""
    root = Path(output_dir or cfg.output_dir)
    mesh = plate_mesh(cfg)
    fibers = cfg.compare.fiber_axes or (cfg.material.fiber_axis,)
    grid = [(f, s, k) for f in fibers for s in cfg.compare.sigma_t for k in cfg.compare.loads]
    items = [(mesh, cfg.material.replace(fiber_axis=f), LoadProfile(k, s), cfg, "CompareLoads", None)
             for f, s, k in grid]
    results = _map(solve_point, items, threads)

    peaks = {}
    for key, r in zip(grid, results):
        rep = r.report
        peaks[key] = {
            "peak_sigma_yy": rep.peak_stress if rep else float("nan"),
            "peak_eps_yy": rep.peak_strain if rep else float("nan"),
            "peak_energy": rep.peak_energy if rep else float("nan"),
            "status": r.status,
        }

    files: list[Path] = []
    manifest = None
    if write:
        base = root / "compare_loads"
        by_key = dict(zip(grid, results))
        for f in fibers:
            for s in cfg.compare.sigma_t:
                cols, data = ["x"], []
                x = None
                for k in cfg.compare.loads:
                    rep = by_key[(f, s, k)].report
                    if rep is None:
                        continue
                    x = rep.sample_x if x is None else x
                    cols += [f"sigma_yy_{k.value}", f"eps_yy_{k.value}"]
                    data += [rep.sigma_yy, rep.eps_yy]
                if x is None:
                    continue
                meta = {"fiber": f.value, "sigma_T": s, "alpha": cfg.material.alpha,
                        "beta": cfg.material.beta, "nx": mesh.nx, "ny": mesh.ny}
                files.append(export.write_table(base / f"fiber{f.value}_sigmaT{s:g}.csv", cols,
                                                zip(x, *data), meta))
        summary = [(key[0].value, key[1], key[2].value, v["peak_sigma_yy"], v["peak_eps_yy"], v["peak_energy"], v["status"])
                   for key, v in peaks.items()]
        files.append(export.write_table(base / "summary.csv",
                                        ["fiber", "sigma_T", "load", "peak_sigma_yy", "peak_eps_yy", "peak_energy", "status"],
                                        summary, {"alpha": cfg.material.alpha, "beta": cfg.material.beta}))
        manifest = export.write_manifest(root / "manifest.txt",
                                         [{"file": p, "kind": "compare_loads"} for p in files], root)
    return LoadComparison(peaks, results, files, manifest)


def mesh_summary(mesh: QuadMesh) -> dict:
    info = {
        "nodes": mesh.n_nodes, "elements": len(mesh.elements), "dofs": mesh.n_dofs,
        "constrained_dofs": len(dirichlet_dofs(mesh)),
        "h": mesh.h, "h_min": mesh.h_min,
        "crack_tip": f"({mesh.crack_tip[0]:g},{mesh.crack_tip[1]:g})",
    }
    for tag in BoundaryTag:
        info[f"edges_{tag.name.lower()}"] = int(np.count_nonzero(mesh.boundary_edges[:, 2] == tag))
    return info
