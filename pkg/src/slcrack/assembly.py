"""Q1 element kernels and global assembly.

Dofs are interleaved per node: ``2*n`` is ``u_x`` and ``2*n + 1`` is ``u_y``.
Each Picard step assembles the frozen-coefficient operator

    A(u_prev)[u, v] = sum_K int_K Psi(s(u_prev)) E[eps(u)] : eps(v) dx,

with Psi evaluated at every volume quadrature point from the previous
iterate. Geometry (Jacobians, strain-displacement matrices, sparsity
pattern) is computed once per mesh and cached.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .constitutive import MaterialModel
from .mesh import BoundaryTag, QuadMesh, dirichlet_dofs
from .tensors import VOIGT_METRIC

GAUSS_2 = np.array([-1.0, 1.0]) / np.sqrt(3.0)

# Reference corner coordinates of the counterclockwise quad.
_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])

BodyForce = Callable[[np.ndarray, np.ndarray], np.ndarray]


def q1_shape(xi: np.ndarray, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear shape values (..., 4) and reference gradients (..., 4, 2)."""
    xi = np.asarray(xi, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    cx, cy = _CORNERS[:, 0], _CORNERS[:, 1]
    n = 0.25 * (1 + cx * xi) * (1 + cy * eta)
    dxi = 0.25 * cx * (1 + cy * eta)
    deta = 0.25 * cy * (1 + cx * xi)
    return n, np.stack([dxi, deta], axis=-1)


@dataclass(frozen=True)
class ElementQuadrature:
    """Tensor Gauss rule on the reference square with Q1 shape data."""

    points: np.ndarray
    weights: np.ndarray
    shape: np.ndarray
    dshape: np.ndarray

    @classmethod
    def gauss(cls, order: int = 2) -> "ElementQuadrature":
        g, w = np.polynomial.legendre.leggauss(order)
        xi, eta = np.meshgrid(g, g, indexing="xy")
        wx, wy = np.meshgrid(w, w, indexing="xy")
        pts = np.column_stack([xi.ravel(), eta.ravel()])
        n, dn = q1_shape(pts[:, 0], pts[:, 1])
        return cls(points=pts, weights=(wx * wy).ravel(), shape=n, dshape=dn)


Q1_GAUSS = ElementQuadrature.gauss(2)


class LoadKind(str, enum.Enum):
    UNIFORM = "uniform"
    SLOPE = "slope"
    SINE = "sine"
    PARABOLIC = "parabolic"

    @classmethod
    def parse(cls, value) -> "LoadKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


@dataclass(frozen=True)
class LoadProfile:
    """Vertical traction on the top edge, scaled by ``sigma_t``."""

    kind: LoadKind = LoadKind.SLOPE
    sigma_t: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "kind", LoadKind.parse(self.kind))
        object.__setattr__(self, "sigma_t", float(self.sigma_t))

    def traction(self, x: np.ndarray, width: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = self.sigma_t
        if self.kind is LoadKind.UNIFORM:
            return np.full_like(x, s)
        if self.kind is LoadKind.SLOPE:
            return s * (0.1 + 0.1 * x)
        if self.kind is LoadKind.SINE:
            return s * np.sin(np.pi * x) / 8.0
        return s * x * (width - x) / width**2


@dataclass(frozen=True, eq=False)
class MeshGeometry:
    """Per-element quadrature geometry for one mesh and one rule."""

    jxw: np.ndarray        # (E, Q) weight * det J
    grad: np.ndarray       # (E, Q, 4, 2) physical shape gradients
    shape: np.ndarray      # (Q, 4)
    bmat: np.ndarray       # (E, Q, 3, 8) Voigt strain from element dofs
    xq: np.ndarray         # (E, Q, 2) physical quadrature points
    edofs: np.ndarray      # (E, 8)
    rows: np.ndarray
    cols: np.ndarray


def element_dofs(mesh: QuadMesh) -> np.ndarray:
    e = mesh.elements
    return np.stack([2 * e, 2 * e + 1], axis=-1).reshape(len(e), 8)


def strain_matrices(grad: np.ndarray) -> np.ndarray:
    """Voigt (tensorial shear) strain-displacement matrices from gradients (..., 4, 2)."""
    b = np.zeros(grad.shape[:-2] + (3, 8))
    dx, dy = grad[..., 0], grad[..., 1]
    b[..., 0, 0::2] = dx
    b[..., 1, 1::2] = dy
    b[..., 2, 0::2] = 0.5 * dy
    b[..., 2, 1::2] = 0.5 * dx
    return b


def compute_geometry(mesh: QuadMesh, quad: ElementQuadrature = Q1_GAUSS) -> MeshGeometry:
    xe = mesh.nodes[mesh.elements]                       # (E, 4, 2)
    jac = np.einsum("qad,eai->eqid", quad.dshape, xe)    # J[i, d] = dx_i / dxi_d
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if np.any(det <= 0):
        bad = np.unique(np.nonzero(det <= 0)[0])
        raise ValueError(f"non-positive Jacobian in elements {bad[:10].tolist()}")
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1] / det
    inv[..., 1, 1] = jac[..., 0, 0] / det
    inv[..., 0, 1] = -jac[..., 0, 1] / det
    inv[..., 1, 0] = -jac[..., 1, 0] / det
    grad = np.einsum("qad,eqdi->eqai", quad.dshape, inv)
    edofs = element_dofs(mesh)
    return MeshGeometry(
        jxw=det * quad.weights,
        grad=grad,
        shape=quad.shape,
        bmat=strain_matrices(grad),
        xq=np.einsum("qa,eai->eqi", quad.shape, xe),
        edofs=edofs,
        rows=np.repeat(edofs, 8, axis=1).ravel(),
        cols=np.tile(edofs, (1, 8)).ravel(),
    )


@lru_cache(maxsize=32)
def mesh_geometry(mesh: QuadMesh, order: int = 2) -> MeshGeometry:
    return compute_geometry(mesh, Q1_GAUSS if order == 2 else ElementQuadrature.gauss(order))


def quadrature_strains(mesh: QuadMesh, u: np.ndarray, order: int = 2) -> np.ndarray:
    """Voigt strains at every volume quadrature point, shape (E, Q, 3)."""
    geo = mesh_geometry(mesh, order)
    return np.einsum("eqij,ej->eqi", geo.bmat, np.asarray(u, dtype=float)[geo.edofs])


def psi_field(mesh: QuadMesh, m: MaterialModel, prev_u: np.ndarray | None) -> tuple[np.ndarray, int]:
    geo = mesh_geometry(mesh)
    if prev_u is None or m.beta == 0.0:
        return np.ones(geo.jxw.shape), 0
    eps = quadrature_strains(mesh, prev_u)
    return m.psi_voigt(m.seminorm_voigt(eps))


def element_matrices(mesh: QuadMesh, m: MaterialModel, prev_u: np.ndarray | None) -> tuple[np.ndarray, int]:
    """All element stiffness matrices, shape (E, 8, 8), plus clamp count."""
    geo = mesh_geometry(mesh)
    psi, clamped = psi_field(mesh, m, prev_u)
    db = np.einsum("ij,eqjk->eqik", m.energy_matrix, geo.bmat)
    ke = np.einsum("eq,eqji,eqjk->eik", geo.jxw * psi, geo.bmat, db)
    return ke, clamped


def element_stiffness(mesh: QuadMesh, elem: int, m: MaterialModel,
                      prev_u: np.ndarray | None = None) -> np.ndarray:
    """8x8 stiffness of one element with Psi frozen at ``prev_u``."""
    geo = mesh_geometry(mesh)
    b = geo.bmat[elem]
    if prev_u is None or m.beta == 0.0:
        psi = np.ones(len(b))
    else:
        eps = np.einsum("qij,j->qi", b, np.asarray(prev_u, dtype=float)[geo.edofs[elem]])
        psi, _ = m.psi_voigt(m.seminorm_voigt(eps))
    return np.einsum("q,qji,jk,qkl->il", geo.jxw[elem] * psi, b, m.energy_matrix, b)


def stiffness_matrix(mesh: QuadMesh, m: MaterialModel, prev_u: np.ndarray | None = None) -> tuple[sp.csr_matrix, int]:
    """Unconstrained global stiffness with Psi frozen at ``prev_u``."""
    geo = mesh_geometry(mesh)
    ke, clamped = element_matrices(mesh, m, prev_u)
    k = sp.coo_matrix((ke.ravel(), (geo.rows, geo.cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    return k, clamped


def traction_vector(mesh: QuadMesh, load: LoadProfile) -> np.ndarray:
    """Consistent nodal forces of the top-edge traction (2-point Gauss per edge)."""
    f = np.zeros(mesh.n_dofs)
    pairs = mesh.edge_nodes(BoundaryTag.TOP)
    a, b = mesh.nodes[pairs[:, 0]], mesh.nodes[pairs[:, 1]]
    length = np.linalg.norm(b - a, axis=1)
    for g in GAUSS_2:
        na, nb = 0.5 * (1 - g), 0.5 * (1 + g)
        x = na * a[:, 0] + nb * b[:, 0]
        t = load.traction(x, mesh.width) * 0.5 * length
        np.add.at(f, 2 * pairs[:, 0] + 1, na * t)
        np.add.at(f, 2 * pairs[:, 1] + 1, nb * t)
    return f


def body_force_vector(mesh: QuadMesh, body_force: BodyForce) -> np.ndarray:
    """Nodal forces of a volume load ``f(x, y) -> (..., 2)``."""
    geo = mesh_geometry(mesh)
    fq = np.asarray(body_force(geo.xq[..., 0], geo.xq[..., 1]), dtype=float)   # (E, Q, 2)
    fe = np.einsum("eq,qa,eqi->eai", geo.jxw, geo.shape, fq).reshape(len(geo.edofs), 8)
    f = np.zeros(mesh.n_dofs)
    np.add.at(f, geo.edofs.ravel(), fe.ravel())
    return f


def load_vector(mesh: QuadMesh, load: LoadProfile | None, body_force: BodyForce | None = None) -> np.ndarray:
    f = traction_vector(mesh, load) if load is not None else np.zeros(mesh.n_dofs)
    if body_force is not None:
        f += body_force_vector(mesh, body_force)
    return f


def _constraints(mesh: QuadMesh, dirichlet: Sequence[tuple[int, float]] | None) -> tuple[np.ndarray, np.ndarray]:
    pairs = dirichlet_dofs(mesh) if dirichlet is None else list(dirichlet)
    if not pairs:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    dofs, values = zip(*sorted(pairs))
    return np.asarray(dofs, dtype=np.int64), np.asarray(values, dtype=float)


@dataclass(eq=False)
class SparseSystem:
    """Constrained linear system ``matrix @ x = rhs``.

    Constrained rows and columns are replaced by identity rows; the rhs holds
    the prescribed values at those dofs.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained: np.ndarray
    values: np.ndarray
    clamp_events: int = 0
    free: np.ndarray = field(init=False)

    def __post_init__(self):
        self.free = np.ones(len(self.rhs), dtype=bool)
        self.free[self.constrained] = False

    @property
    def size(self) -> int:
        return len(self.rhs)


def apply_constraints(k: sp.csr_matrix, f: np.ndarray, dofs: np.ndarray, values: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
    """Symmetric elimination of prescribed dofs with identity-row replacement."""
    n = k.shape[0]
    g = np.zeros(n)
    g[dofs] = values
    rhs = f - k @ g
    keep = np.ones(n)
    keep[dofs] = 0.0
    p = sp.diags(keep)
    a = (p @ k @ p + sp.diags(1.0 - keep)).tocsr()
    a.sort_indices()
    rhs[dofs] = values
    return a, rhs


def assemble_system(mesh: QuadMesh, m: MaterialModel, load: LoadProfile | None,
                    prev_u: np.ndarray | None = None, *, body_force: BodyForce | None = None,
                    dirichlet: Sequence[tuple[int, float]] | None = None) -> SparseSystem:
    """Assemble the Picard-linearised system around ``prev_u``.

    Args:
        mesh: the plate mesh.
        m: material; ``prev_u=None`` assembles with Psi == 1.
        load: top-edge traction, or None for no traction.
        prev_u: previous iterate used to freeze Psi.
        body_force: optional volume load ``f(x, y)``.
        dirichlet: ``(dof, value)`` pairs; defaults to the benchmark constraints.
    """
    k, clamped = stiffness_matrix(mesh, m, prev_u)
    f = load_vector(mesh, load, body_force)
    dofs, values = _constraints(mesh, dirichlet)
    a, rhs = apply_constraints(k, f, dofs, values)
    return SparseSystem(matrix=a, rhs=rhs, constrained=dofs, values=values, clamp_events=clamped)


def internal_force(mesh: QuadMesh, m: MaterialModel, u: np.ndarray) -> tuple[np.ndarray, int]:
    """Vector ``a(u; phi_i)`` with the full nonlinear stress."""
    geo = mesh_geometry(mesh)
    eps = quadrature_strains(mesh, u)
    t, clamped = m.stress_voigt(eps)
    te = np.einsum("eq,eqji,jk,eqk->ei", geo.jxw, geo.bmat, VOIGT_METRIC, t)
    r = np.zeros(mesh.n_dofs)
    np.add.at(r, geo.edofs.ravel(), te.ravel())
    return r, clamped


def semilinear_form(mesh: QuadMesh, m: MaterialModel, u: np.ndarray, w: np.ndarray) -> float:
    """``a(u; w)``."""
    r, _ = internal_force(mesh, m, u)
    return float(r @ w)


@dataclass(frozen=True)
class Residual:
    vector: np.ndarray
    norm: float
    clamp_events: int


def nonlinear_residual(mesh: QuadMesh, m: MaterialModel, load: LoadProfile | None, u: np.ndarray, *,
                       body_force: BodyForce | None = None,
                       dirichlet: Sequence[tuple[int, float]] | None = None) -> Residual:
    """Force imbalance ``a(u; phi_i) - L(phi_i)`` on free dofs, zero on constrained ones."""
    r, clamped = internal_force(mesh, m, u)
    r -= load_vector(mesh, load, body_force)
    dofs, _ = _constraints(mesh, dirichlet)
    r[dofs] = 0.0
    return Residual(vector=r, norm=float(np.linalg.norm(r)), clamp_events=clamped)


def h1_norm(mesh: QuadMesh, u: np.ndarray) -> float:
    """Full H1 norm of the discrete field, integrated with the 2x2 rule."""
    geo = mesh_geometry(mesh)
    ue = np.asarray(u, dtype=float)[geo.edofs].reshape(-1, 4, 2)
    val = np.einsum("qa,eai->eqi", geo.shape, ue)
    grad = np.einsum("eqad,eai->eqid", geo.grad, ue)
    dens = (val**2).sum(-1) + (grad**2).sum((-1, -2))
    return float(np.sqrt((geo.jxw * dens).sum()))
