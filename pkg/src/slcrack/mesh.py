"""Structured quadrilateral mesh of the edge-cracked plate.

The plate occupies ``[0, width] x [0, height]``.  Only the upper half of the
symmetric Mode-I specimen is modelled: the crack lies on ``y = 0`` for
``0 <= x <= crack_length`` and is simply the traction-free part of the bottom
edge; the remaining bottom ligament carries the symmetry condition ``u_y = 0``.

Boundary tags::

            Top (3)
        +-------------+
   Left |             | Right (0)
    (4) |             |
        +------*------+
        Crack  tip  Ligament
         (1)         (2)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class BoundaryTag(enum.IntEnum):
    RIGHT = 0
    CRACK = 1
    BOTTOM_LIGAMENT = 2
    TOP = 3
    LEFT = 4


# Local edge k of a counterclockwise quad runs from corner k to corner k+1.
LOCAL_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))

# Largest allowed mismatch between the two columns adjacent to the tip.
MAX_TIP_DISTORTION = 0.2


@dataclass(frozen=True, eq=False)
class QuadMesh:
    """Tensor-product Q1 mesh with tagged boundary edges.

    Attributes:
        nodes: (n_nodes, 2) coordinates; node ``(i, j)`` has index ``j*(nx+1) + i``.
        elements: (n_elem, 4) counterclockwise connectivity.
        boundary_edges: (n_edges, 3) rows of ``(element, local_edge, tag)``.
        crack_tip: coordinates of the tip, ``(crack_length, 0)``.
        xs, ys: grid line positions.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_edges: np.ndarray
    crack_tip: np.ndarray
    nx: int
    ny: int
    width: float
    height: float
    crack_length: float
    grading: float
    xs: np.ndarray
    ys: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_dofs(self) -> int:
        return 2 * len(self.nodes)

    def node_index(self, i: int, j: int) -> int:
        return j * (self.nx + 1) + i

    @property
    def element_diameters(self) -> np.ndarray:
        p = self.nodes[self.elements]
        d1 = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
        d2 = np.linalg.norm(p[:, 3] - p[:, 1], axis=1)
        return np.maximum(d1, d2)

    @property
    def h(self) -> float:
        """Mesh parameter: largest element diameter."""
        return float(self.element_diameters.max())

    @property
    def h_min(self) -> float:
        return float(self.element_diameters.min())

    def edge_nodes(self, tag: BoundaryTag | None = None) -> np.ndarray:
        """(n, 2) node pairs of boundary edges, optionally restricted to one tag."""
        edges = self.boundary_edges
        if tag is not None:
            edges = edges[edges[:, 2] == int(tag)]
        local = np.array(LOCAL_EDGES)[edges[:, 1]]
        conn = self.elements[edges[:, 0]]
        return np.stack([conn[np.arange(len(edges)), local[:, 0]],
                         conn[np.arange(len(edges)), local[:, 1]]], axis=1)

    def boundary_nodes(self, tag: BoundaryTag) -> np.ndarray:
        return np.unique(self.edge_nodes(tag))

    def edge_lengths(self, tag: BoundaryTag | None = None) -> np.ndarray:
        pairs = self.edge_nodes(tag)
        return np.linalg.norm(self.nodes[pairs[:, 1]] - self.nodes[pairs[:, 0]], axis=1)

    def bottom_nodes(self) -> np.ndarray:
        """Indices of the nodes on ``y = 0`` ordered by x."""
        return np.arange(self.nx + 1)


def graded_spacing(length: float, n: int, grading: float, dense_at_start: bool) -> np.ndarray:
    """Grid coordinates on ``[0, length]`` with geometric cell sizes.

    Consecutive cells grow by ``grading ** (1/n)`` away from the dense end.
    """
    if n < 1:
        raise ValueError("need at least one cell")
    q = grading ** (1.0 / n)
    sizes = q ** np.arange(n, dtype=float)
    sizes *= length / sizes.sum()
    if not dense_at_start:
        sizes = sizes[::-1]
    coords = np.concatenate([[0.0], np.cumsum(sizes)])
    coords[-1] = length
    return coords


def _column_positions(width: float, crack_length: float, nx: int, grading: float) -> np.ndarray:
    if crack_length == 0.0:
        return graded_spacing(width, nx, grading, dense_at_start=True)
    n_left = int(np.clip(round(nx * crack_length / width), 1, nx - 1))
    n_right = nx - n_left
    left = graded_spacing(crack_length, n_left, grading, dense_at_start=False)
    right = crack_length + graded_spacing(width - crack_length, n_right, grading, dense_at_start=True)
    h_left = left[-1] - left[-2]
    h_right = right[1] - right[0]
    distortion = abs(h_left - h_right) / max(h_left, h_right)
    if distortion > MAX_TIP_DISTORTION:
        raise ValueError(
            f"crack_length={crack_length} does not fit the {nx}-column grid: the cells at the tip "
            f"differ by {distortion:.0%} (limit {MAX_TIP_DISTORTION:.0%}); adjust nx or grading"
        )
    right[-1] = width
    return np.concatenate([left, right[1:]])


def build_plate_mesh(width: float = 2.0, height: float = 1.0, crack_length: float = 1.0,
                     nx: int = 64, ny: int = 32, grading: float = 1.0) -> QuadMesh:
    """Build the structured mesh of the cracked plate.

    Columns are graded toward ``x = crack_length`` from both sides, rows toward
    ``y = 0``. A grid line always passes through the crack tip. ``crack_length = 0``
    gives the crack-free plate, in which the whole bottom edge is ligament.
    """
    if width <= 0 or height <= 0:
        raise ValueError("width and height must be positive")
    if not 0.0 <= crack_length < width:
        raise ValueError(f"crack_length must lie in [0, width), got {crack_length}")
    if nx < 2 or ny < 1:
        raise ValueError(f"need nx >= 2 and ny >= 1, got nx={nx}, ny={ny}")
    if grading < 1.0:
        raise ValueError(f"grading must be >= 1, got {grading}")

    xs = _column_positions(float(width), float(crack_length), nx, float(grading))
    ys = graded_spacing(float(height), ny, float(grading), dense_at_start=True)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    n0 = j * (nx + 1) + i
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
    eid = j * nx + i

    tip_col = int(np.searchsorted(xs, crack_length)) if crack_length > 0 else 0
    bottom = eid[j == 0]
    bottom_tags = np.where(i[j == 0] < tip_col, BoundaryTag.CRACK, BoundaryTag.BOTTOM_LIGAMENT)
    top = eid[j == ny - 1]
    right = eid[i == nx - 1]
    left = eid[i == 0]
    boundary_edges = np.concatenate([
        np.column_stack([bottom, np.zeros_like(bottom), bottom_tags]),
        np.column_stack([right, np.ones_like(right), np.full_like(right, BoundaryTag.RIGHT)]),
        np.column_stack([top, np.full_like(top, 2), np.full_like(top, BoundaryTag.TOP)]),
        np.column_stack([left, np.full_like(left, 3), np.full_like(left, BoundaryTag.LEFT)]),
    ]).astype(np.int64)

    return QuadMesh(
        nodes=nodes,
        elements=elements.astype(np.int64),
        boundary_edges=boundary_edges,
        crack_tip=np.array([xs[tip_col], 0.0]),
        nx=nx, ny=ny,
        width=float(width), height=float(height), crack_length=float(crack_length),
        grading=float(grading), xs=xs, ys=ys,
    )


def dirichlet_dofs(mesh: QuadMesh) -> list[tuple[int, float]]:
    """Benchmark constraints: ``u_x = 0`` on the left edge, ``u_y = 0`` on the ligament.

    Ligament nodes are those on ``y = 0`` with ``x >= crack_length``, so the
    tip itself is held vertically while crack-face nodes stay free.
    """
    left = mesh.boundary_nodes(BoundaryTag.LEFT)
    bottom = mesh.bottom_nodes()
    ligament = bottom[mesh.nodes[bottom, 0] >= mesh.crack_length]
    dofs = [(2 * int(n), 0.0) for n in left] + [(2 * int(n) + 1, 0.0) for n in ligament]
    return sorted(dofs)


def full_boundary_nodes(mesh: QuadMesh) -> np.ndarray:
    return np.unique(mesh.edge_nodes())
