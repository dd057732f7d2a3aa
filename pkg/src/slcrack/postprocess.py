"""Field recovery and line extraction from a converged displacement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import mesh_geometry, quadrature_strains
from .constitutive import CLAMP_DELTA, MaterialModel
from .mesh import QuadMesh
from .tensors import contract_voigt


@dataclass(eq=False)
class RecoveredFields:
    """Nodal fields (Voigt stress/strain, energy) and their quadrature-point sources."""

    stress: np.ndarray          # (n_nodes, 3)
    strain: np.ndarray          # (n_nodes, 3)
    energy: np.ndarray          # (n_nodes,)
    qp_stress: np.ndarray       # (E, Q, 3)
    qp_strain: np.ndarray       # (E, Q, 3)
    qp_energy: np.ndarray       # (E, Q)
    clamp_events: int = 0
    node_clamps: np.ndarray | None = None


def _nodal_average(mesh: QuadMesh, values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Volume-weighted average of quadrature values over the elements touching each node."""
    n = mesh.n_nodes
    flat = values.reshape(values.shape[0], values.shape[1], -1)
    w_elem = weights.sum(axis=1)                                  # (E,)
    v_elem = np.einsum("eq,eqk->ek", weights, flat)                # (E, k)
    num = np.zeros((n, flat.shape[-1]))
    den = np.zeros(n)
    for a in range(4):
        np.add.at(num, mesh.elements[:, a], v_elem)
        np.add.at(den, mesh.elements[:, a], w_elem)
    out = num / den[:, None]
    return out.reshape((n,) + values.shape[2:])


def recover_fields(mesh: QuadMesh, m: MaterialModel, u: np.ndarray) -> RecoveredFields:
    """Stress, strain and energy density at the nodes.

    Strains come from the 2x2 Gauss points, stresses from the nonlinear law,
    and energy ``T:eps`` is formed pointwise before nodal averaging.
    """
    geo = mesh_geometry(mesh)
    eps = quadrature_strains(mesh, u)
    sig = m.stiffness_voigt(eps)
    s = np.sqrt(np.maximum(contract_voigt(eps, sig), 0.0))
    psi, clamped = m.psi_voigt(s)
    sig = psi[..., None] * sig
    energy = contract_voigt(sig, eps)
    if m.beta > 0:
        over = ((m.beta * s) ** m.alpha > 1.0 - CLAMP_DELTA).astype(float)
        node_clamps = np.zeros(mesh.n_nodes)
        for a in range(4):
            np.add.at(node_clamps, mesh.elements[:, a], over.sum(axis=1))
    else:
        node_clamps = np.zeros(mesh.n_nodes)
    return RecoveredFields(
        stress=_nodal_average(mesh, sig, geo.jxw),
        strain=_nodal_average(mesh, eps, geo.jxw),
        energy=_nodal_average(mesh, energy, geo.jxw),
        qp_stress=sig, qp_strain=eps, qp_energy=energy,
        clamp_events=clamped, node_clamps=node_clamps.astype(int),
    )


@dataclass
class FieldReport:
    """Crack-line and crack-face samples for one run."""

    sample_x: np.ndarray
    sigma_yy: np.ndarray
    eps_yy: np.ndarray
    energy: np.ndarray
    crack_x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    opening_uy: np.ndarray = field(default_factory=lambda: np.zeros(0))
    metadata: dict = field(default_factory=dict)

    @property
    def peak_stress(self) -> float:
        return float(self.sigma_yy.max())

    @property
    def peak_strain(self) -> float:
        return float(self.eps_yy.max())

    @property
    def peak_energy(self) -> float:
        return float(self.energy.max())


def crack_line_profile(mesh: QuadMesh, fields: RecoveredFields, tip=None) -> FieldReport:
    """Nodal values on ``y = 0`` from the crack tip to the right edge, ordered by x."""
    tip_x = float(mesh.crack_tip[0] if tip is None else tip[0])
    bottom = mesh.bottom_nodes()
    x = mesh.nodes[bottom, 0]
    sel = bottom[x >= tip_x - 1e-12]
    order = np.argsort(mesh.nodes[sel, 0], kind="stable")
    sel = sel[order]
    return FieldReport(
        sample_x=mesh.nodes[sel, 0].copy(),
        sigma_yy=fields.stress[sel, 1].copy(),
        eps_yy=fields.strain[sel, 1].copy(),
        energy=fields.energy[sel].copy(),
    )


def crack_opening_profile(mesh: QuadMesh, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(x, u_y)`` on the crack face from the mouth (x = 0) to the tip."""
    bottom = mesh.bottom_nodes()
    x = mesh.nodes[bottom, 0]
    sel = bottom[x <= mesh.crack_length + 1e-12]
    sel = sel[np.argsort(mesh.nodes[sel, 0], kind="stable")]
    return mesh.nodes[sel, 0].copy(), np.asarray(u)[2 * sel + 1].copy()


def build_report(mesh: QuadMesh, m: MaterialModel, u: np.ndarray, metadata: dict | None = None) -> tuple[FieldReport, RecoveredFields]:
    fields = recover_fields(mesh, m, u)
    report = crack_line_profile(mesh, fields)
    report.crack_x, report.opening_uy = crack_opening_profile(mesh, u)
    report.metadata = dict(metadata or {})
    return report, fields
