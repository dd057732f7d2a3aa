"""Writers for CSV tables, legacy VTK files and the run manifest.

All writers format floats with a fixed number of digits and never embed
timestamps, so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .mesh import QuadMesh

VTK_QUAD = 9
FLOAT_FMT = "{:.12e}"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    return str(v)


def _fmt_meta(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):g}"
    return str(v)


def metadata_line(meta: Mapping) -> str:
    return "# " + " ".join(f"{k}={_fmt_meta(v)}" for k, v in meta.items())


def write_table(path: Path, columns: Sequence[str], rows: Iterable[Sequence], meta: Mapping | None = None) -> Path:
    """CSV with an optional ``#`` metadata line followed by a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if meta:
        lines.append(metadata_line(meta))
    lines.append(",".join(columns))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_table(path: Path) -> tuple[dict, dict[str, np.ndarray]]:
    """Inverse of :func:`write_table` for numeric tables: ``(meta, columns)``."""
    meta: dict = {}
    header = None
    data = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for tok in line[1:].split():
                k, _, v = tok.partition("=")
                meta[k] = v
        elif header is None:
            header = line.split(",")
        elif line.strip():
            data.append([float(t) for t in line.split(",")])
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    return meta, {name: arr[:, i] for i, name in enumerate(header)}


def write_convergence_csv(path: Path, history, meta: Mapping | None = None) -> Path:
    rows = [(r.iteration, r.residual_norm, r.clamp_events) for r in history]
    return write_table(path, ["iteration", "residual_norm", "clamp_events"], rows, meta)


def write_profile_csv(path: Path, report, meta: Mapping | None = None) -> Path:
    rows = zip(report.sample_x, report.sigma_yy, report.eps_yy, report.energy)
    return write_table(path, ["x", "sigma_yy", "eps_yy", "energy"], rows, meta)


def write_opening_csv(path: Path, x: np.ndarray, uy: np.ndarray, meta: Mapping | None = None) -> Path:
    return write_table(path, ["x", "u_y"], zip(x, uy), meta)


def write_vtk(path: Path, mesh: QuadMesh, point_data: Mapping[str, np.ndarray] | None = None,
              cell_data: Mapping[str, np.ndarray] | None = None, title: str = "slcrack") -> Path:
    """Legacy ASCII VTK unstructured grid of Q1 cells.

    Arrays of shape ``(n,)`` become SCALARS, ``(n, 2)`` become 3-component
    VECTORS, and ``(n, 3)`` Voigt tensors are written as three scalar fields
    suffixed ``_xx``, ``_yy``, ``_xy``.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    out.append(f"POINTS {mesh.n_nodes} double")
    out.extend(f"{_fmt(x)} {_fmt(y)} {_fmt(0.0)}" for x, y in mesh.nodes)
    ne = len(mesh.elements)
    out.append(f"CELLS {ne} {5 * ne}")
    out.extend("4 " + " ".join(str(int(n)) for n in conn) for conn in mesh.elements)
    out.append(f"CELL_TYPES {ne}")
    out.extend(str(VTK_QUAD) for _ in range(ne))

    def block(kind: str, n: int, data: Mapping[str, np.ndarray] | None):
        if not data:
            return
        out.append(f"{kind} {n}")
        for name, arr in data.items():
            arr = np.asarray(arr)
            if arr.ndim == 1:
                out.append(f"SCALARS {name} double 1")
                out.append("LOOKUP_TABLE default")
                out.extend(_fmt(float(v)) for v in arr)
            elif arr.shape[1] == 2:
                out.append(f"VECTORS {name} double")
                out.extend(f"{_fmt(a)} {_fmt(b)} {_fmt(0.0)}" for a, b in arr)
            elif arr.shape[1] == 3:
                for k, suffix in enumerate(("xx", "yy", "xy")):
                    out.append(f"SCALARS {name}_{suffix} double 1")
                    out.append("LOOKUP_TABLE default")
                    out.extend(_fmt(float(v)) for v in arr[:, k])
            else:
                raise ValueError(f"unsupported field shape {arr.shape} for {name}")

    block("CELL_DATA", ne, cell_data)
    block("POINT_DATA", mesh.n_nodes, point_data)
    path.write_text("\n".join(out) + "\n")
    return path


def write_mesh_vtk(path: Path, mesh: QuadMesh) -> Path:
    """Mesh only, with element ids and per-node boundary tag (-1 for interior)."""
    tags = np.full(mesh.n_nodes, -1.0)
    for row in sorted(set(mesh.boundary_edges[:, 2].tolist()), reverse=True):
        tags[mesh.boundary_nodes(row)] = row
    return write_vtk(path, mesh, point_data={"boundary_tag": tags},
                     cell_data={"element_id": np.arange(len(mesh.elements), dtype=float)}, title="slcrack mesh")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path: Path, records: Sequence[Mapping], root: Path | None = None) -> Path:
    """One ``key=value`` record per artifact, each with its SHA-256 hash."""
    path = Path(path)
    root = path.parent if root is None else Path(root)
    lines = []
    for rec in records:
        rec = dict(rec)
        file = Path(rec.pop("file"))
        fields = {"file": file.relative_to(root).as_posix() if file.is_absolute() else file.as_posix()}
        fields["sha256"] = sha256_file(file if file.is_absolute() else root / file)
        fields.update(rec)
        lines.append(" ".join(f"{k}={_fmt_meta(v)}" for k, v in fields.items()))
    path.write_text("\n".join(lines) + ("\n" if lines else ""))
    return path


def read_manifest(path: Path) -> list[dict[str, str]]:
    records = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            records.append(dict(tok.partition("=")[::2] for tok in line.split()))
    return records
