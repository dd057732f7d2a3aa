"""Independent verification: manufactured solutions, dense cross-checks, rates.

Nothing here is used on the solve path. Stresses are recomputed from 2x2
matrices rather than the Voigt kernels, error integrals use their own Gauss
rule and shape functions, and the dense check factorizes with LAPACK. Only the
public contracts of the mesh, assembly and solver modules are touched.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from . import export
from .assembly import SparseSystem
from .constitutive import FiberAxis, MaterialModel
from .mesh import QuadMesh, build_plate_mesh, full_boundary_nodes
from .picard import PicardConfig, run_picard
from .solver import Method, SolverConfig, solve

MAX_BETA_S = 0.5
DENSE_MAX_DOFS = 2000

# Richardson table for f: base step and number of halvings (error ~ h^8).
FD_STEP = 2e-2
FD_LEVELS = 4


class OracleError(AssertionError):
    """An oracle check failed; raised instead of returning a bad number."""


class ExactField(str, enum.Enum):
    POLY2 = "Poly2"
    TRIG_SMOOTH = "TrigSmooth"
    BILINEAR = "Bilinear"
    RIGID = "Rigid"


# -- stress law on explicit 2x2 matrices ------------------------------------

def _structural(m: MaterialModel) -> np.ndarray:
    e = np.array([1.0, 0.0]) if m.fiber_axis is FiberAxis.X else np.array([0.0, 1.0])
    return np.outer(e, e)


def elastic_stress(m: MaterialModel, eps: np.ndarray) -> np.ndarray:
    """``E[eps]`` for a stack of 2x2 strain matrices ``(..., 2, 2)``."""
    mm = _structural(m)
    tr = eps[..., 0, 0] + eps[..., 1, 1]
    em = np.einsum("...ij,ij->...", eps, mm)
    return 2 * m.mu * eps + m.lam * tr[..., None, None] * np.eye(2) + m.gamma * em[..., None, None] * mm


def limited_stress(m: MaterialModel, eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(T, s)`` with ``T = Psi(s) E[eps]`` and ``s = sqrt(eps : E[eps])``."""
    sig = elastic_stress(m, eps)
    s = np.sqrt(np.maximum(np.einsum("...ij,...ij->...", eps, sig), 0.0))
    if m.beta == 0:
        return sig, s
    psi = (1.0 - (m.beta * s) ** m.alpha) ** (-1.0 / m.alpha)
    return psi[..., None, None] * sig, s


def _psi_and_slope(m: MaterialModel, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if m.beta == 0:
        return np.ones_like(s), np.zeros_like(s)
    x = (m.beta * s) ** m.alpha
    psi = (1.0 - x) ** (-1.0 / m.alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        dpsi = m.beta**m.alpha * s ** (m.alpha - 1.0) * (1.0 - x) ** (-1.0 / m.alpha - 1.0)
    return psi, np.where(s > 0, dpsi, 0.0)


# -- closed-form displacement fields ----------------------------------------
#
# Each field returns u (..., 2), grad u (..., 2, 2) with grad[i, j] = du_i/dx_j,
# and, where available, the second derivatives (..., 2, 2, 2) [i, j, k].

def _poly2(x, y, a):
    ux = a * (x**2 + 0.5 * x * y - 0.3 * y**2 + 0.2 * x)
    uy = a * (-0.4 * x**2 + 0.6 * x * y + 0.5 * y**2 + 0.3 * y)
    g = np.empty(np.shape(x) + (2, 2))
    g[..., 0, 0] = a * (2 * x + 0.5 * y + 0.2)
    g[..., 0, 1] = a * (0.5 * x - 0.6 * y)
    g[..., 1, 0] = a * (-0.8 * x + 0.6 * y)
    g[..., 1, 1] = a * (0.6 * x + y + 0.3)
    h = np.zeros(np.shape(x) + (2, 2, 2))
    h[..., 0, 0, 0], h[..., 0, 0, 1], h[..., 0, 1, 1] = 2 * a, 0.5 * a, -0.6 * a
    h[..., 1, 0, 0], h[..., 1, 0, 1], h[..., 1, 1, 1] = -0.8 * a, 0.6 * a, a
    h[..., 0, 1, 0] = h[..., 0, 0, 1]
    h[..., 1, 1, 0] = h[..., 1, 0, 1]
    return np.stack([ux, uy], -1), g, h


def _trig(x, y, a):
    p = np.pi
    sx, cx = np.sin(p * x / 2), np.cos(p * x / 2)
    sy, cy = np.sin(p * y), np.cos(p * y)
    ux = a * (sx * cy + 0.4 * x)
    uy = a * (cx * sy + 0.3 * y + 0.2 * x)
    g = np.empty(np.shape(x) + (2, 2))
    g[..., 0, 0] = a * (p / 2 * cx * cy + 0.4)
    g[..., 0, 1] = a * (-p * sx * sy)
    g[..., 1, 0] = a * (-p / 2 * sx * sy + 0.2)
    g[..., 1, 1] = a * (p * cx * cy + 0.3)
    h = np.empty(np.shape(x) + (2, 2, 2))
    h[..., 0, 0, 0] = a * (-(p**2) / 4 * sx * cy)
    h[..., 0, 0, 1] = h[..., 0, 1, 0] = a * (-(p**2) / 2 * cx * sy)
    h[..., 0, 1, 1] = a * (-(p**2) * sx * cy)
    h[..., 1, 0, 0] = a * (-(p**2) / 4 * cx * sy)
    h[..., 1, 0, 1] = h[..., 1, 1, 0] = a * (-(p**2) / 2 * sx * cy)
    h[..., 1, 1, 1] = a * (-(p**2) * cx * sy)
    return np.stack([ux, uy], -1), g, h


def _bilinear(x, y, a):
    ux = a * (0.3 + 0.5 * x - 0.2 * y + 0.4 * x * y)
    uy = a * (-0.1 + 0.2 * x + 0.6 * y - 0.3 * x * y)
    g = np.empty(np.shape(x) + (2, 2))
    g[..., 0, 0], g[..., 0, 1] = a * (0.5 + 0.4 * y), a * (-0.2 + 0.4 * x)
    g[..., 1, 0], g[..., 1, 1] = a * (0.2 - 0.3 * y), a * (0.6 - 0.3 * x)
    h = np.zeros(np.shape(x) + (2, 2, 2))
    h[..., 0, 0, 1] = h[..., 0, 1, 0] = 0.4 * a
    h[..., 1, 0, 1] = h[..., 1, 1, 0] = -0.3 * a
    return np.stack([ux, uy], -1), g, h


def _rigid(x, y, a):
    # translation plus infinitesimal rotation
    ux = a * (0.7 - 0.5 * y)
    uy = a * (-0.2 + 0.5 * x)
    g = np.zeros(np.shape(x) + (2, 2))
    g[..., 0, 1], g[..., 1, 0] = -0.5 * a, 0.5 * a
    return np.stack([ux, uy], -1), g, np.zeros(np.shape(x) + (2, 2, 2))


_FIELDS = {
    ExactField.POLY2: _poly2,
    ExactField.TRIG_SMOOTH: _trig,
    ExactField.BILINEAR: _bilinear,
    ExactField.RIGID: _rigid,
}


def _sym(g: np.ndarray) -> np.ndarray:
    return 0.5 * (g + np.swapaxes(g, -1, -2))


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact field on the crack-free plate with its induced body force.

    ``forcing`` is ``f = -div T(eps(u))`` so that ``u`` solves the balance
    law with Dirichlet data taken from ``u`` on the whole boundary.
    """

    material: MaterialModel
    which: ExactField
    amplitude: float
    width: float = 2.0
    height: float = 1.0

    def _eval(self, x, y):
        return _FIELDS[self.which](np.asarray(x, float), np.asarray(y, float), self.amplitude)

    def displacement(self, x, y) -> np.ndarray:
        return self._eval(x, y)[0]

    def gradient(self, x, y) -> np.ndarray:
        return self._eval(x, y)[1]

    def strain(self, x, y) -> np.ndarray:
        return _sym(self.gradient(x, y))

    def stress(self, x, y) -> np.ndarray:
        return limited_stress(self.material, self.strain(x, y))[0]

    def seminorm(self, x, y) -> np.ndarray:
        return limited_stress(self.material, self.strain(x, y))[1]

    def forcing(self, x, y) -> np.ndarray:
        if self.which is ExactField.TRIG_SMOOTH and self.material.beta > 0:
            return numerical_forcing(self.stress, x, y)
        return self.analytic_forcing(x, y)

    def analytic_forcing(self, x, y) -> np.ndarray:
        """Chain-rule divergence using the closed-form second derivatives.

        ``div T = Psi div E[eps] + Psi'(s) E[eps] grad s`` with
        ``ds/dx_k = E[eps] : d eps/dx_k / s``.
        """
        m = self.material
        _, g, h = self._eval(x, y)
        eps = _sym(g)
        deps = [_sym(h[..., k]) for k in range(2)]          # d eps / dx_k
        sig = elastic_stress(m, eps)
        dsig = [elastic_stress(m, d) for d in deps]
        s = np.sqrt(np.maximum(np.einsum("...ij,...ij->...", eps, sig), 0.0))
        psi, dpsi = _psi_and_slope(m, s)
        div = np.zeros(np.shape(s) + (2,))
        for k in range(2):
            with np.errstate(divide="ignore", invalid="ignore"):
                ds = np.where(s > 0, np.einsum("...ij,...ij->...", sig, deps[k]) / s, 0.0)
            div += psi[..., None] * dsig[k][..., :, k] + (dpsi * ds)[..., None] * sig[..., :, k]
        return -div

    def dirichlet(self, mesh: QuadMesh) -> list[tuple[int, float]]:
        nodes = full_boundary_nodes(mesh)
        u = self.displacement(mesh.nodes[nodes, 0], mesh.nodes[nodes, 1])
        return sorted([(2 * int(n), float(v[0])) for n, v in zip(nodes, u)]
                      + [(2 * int(n) + 1, float(v[1])) for n, v in zip(nodes, u)])

    def mesh(self, n: int) -> QuadMesh:
        """Uniform crack-free mesh with ``2n x n`` cells on the 2 x 1 plate."""
        return build_plate_mesh(self.width, self.height, 0.0, round(n * self.width / self.height), n, 1.0)


def numerical_forcing(stress: Callable, x, y, step: float = FD_STEP, levels: int = FD_LEVELS) -> np.ndarray:
    """``-div T`` by Richardson-extrapolated central differences."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)

    def derivative(axis: int) -> np.ndarray:
        table = []
        for lv in range(levels):
            hs = step / 2**lv
            if axis == 0:
                d = (stress(x + hs, y) - stress(x - hs, y)) / (2 * hs)
            else:
                d = (stress(x, y + hs) - stress(x, y - hs)) / (2 * hs)
            row = [d]
            for j in range(1, lv + 1):
                fac = 4.0**j
                row.append((fac * row[j - 1] - table[lv - 1][j - 1]) / (fac - 1))
            table.append(row)
        return table[-1][-1]

    dx = derivative(0)
    dy = derivative(1)
    return -(dx[..., :, 0] + dy[..., :, 1])


def build_manufactured(m: MaterialModel, which: ExactField | str = ExactField.POLY2,
                       amplitude: float = 0.05, width: float = 2.0, height: float = 1.0) -> ManufacturedCase:
    """Manufactured case for ``m``.

    Raises:
        ValueError: if ``beta * s`` exceeds 0.5 anywhere on the plate for this
            amplitude.
    """
    case = ManufacturedCase(m, ExactField(which), float(amplitude), width, height)
    xs, ys = np.meshgrid(np.linspace(0, width, 81), np.linspace(0, height, 41))
    peak = float(m.beta * case.seminorm(xs, ys).max())
    if peak > MAX_BETA_S:
        raise ValueError(f"beta*s reaches {peak:.3f} > {MAX_BETA_S}; lower the amplitude")
    return case


# -- error integrals with an independent Gauss rule -------------------------

def _gauss_rule(n: int):
    pts, wts = np.polynomial.legendre.leggauss(n)
    xi, eta = np.meshgrid(pts, pts, indexing="ij")
    w = np.outer(wts, wts).ravel()
    xi, eta = xi.ravel(), eta.ravel()
    corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], float)
    n_val = 0.25 * (1 + np.outer(xi, corners[:, 0])) * (1 + np.outer(eta, corners[:, 1]))
    d_xi = 0.25 * corners[:, 0][None, :] * (1 + np.outer(eta, corners[:, 1]))
    d_eta = 0.25 * corners[:, 1][None, :] * (1 + np.outer(xi, corners[:, 0]))
    return w, n_val, np.stack([d_xi, d_eta], -1)     # (Q,), (Q, 4), (Q, 4, 2)


def field_errors(mesh: QuadMesh, u: np.ndarray, case: ManufacturedCase, order: int = 5) -> tuple[float, float]:
    """``(L2 error, H1 seminorm error)`` of a nodal Q1 field against ``case``."""
    w, nv, dref = _gauss_rule(order)
    xe = mesh.nodes[mesh.elements]                                 # (E, 4, 2)
    ue = np.asarray(u, float).reshape(-1, 2)[mesh.elements]        # (E, 4, 2)
    jac = np.einsum("qar,eai->eqir", dref, xe)                     # dx_i / dxi_r
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    inv = np.linalg.inv(jac)                                       # dxi_r / dx_i
    dphys = np.einsum("qar,eqri->eqai", dref, inv)
    xq = np.einsum("qa,eai->eqi", nv, xe)
    uh = np.einsum("qa,eai->eqi", nv, ue)
    gh = np.einsum("eqaj,eai->eqij", dphys, ue)
    uex, gex, _ = case._eval(xq[..., 0], xq[..., 1])
    jw = det * w[None, :]
    l2 = np.sqrt(np.sum(jw * ((uh - uex) ** 2).sum(-1)))
    h1 = np.sqrt(np.sum(jw * ((gh - gex) ** 2).sum((-1, -2))))
    return float(l2), float(h1)


def manufactured_solve(case: ManufacturedCase, mesh: QuadMesh, solver_cfg: SolverConfig | None = None,
                       picard_cfg: PicardConfig | None = None) -> np.ndarray:
    picard_cfg = picard_cfg or PicardConfig(tol=1e-11, max_iter=60, stagnation_window=3, stagnation_rel=1e-2)
    state = run_picard(mesh, case.material, None, solver_cfg, picard_cfg,
                       body_force=case.forcing, dirichlet=case.dirichlet(mesh))
    if not state.converged:
        raise OracleError(f"manufactured solve ended with status {state.status.value}")
    return state.u


@dataclass
class ConvergenceStudy:
    case: ManufacturedCase
    h: np.ndarray
    l2: np.ndarray
    h1: np.ndarray

    @property
    def l2_rates(self) -> np.ndarray:
        return np.log(self.l2[:-1] / self.l2[1:]) / np.log(self.h[:-1] / self.h[1:])

    @property
    def h1_rates(self) -> np.ndarray:
        return np.log(self.h1[:-1] / self.h1[1:]) / np.log(self.h[:-1] / self.h[1:])

    @property
    def label(self) -> str:
        m = self.case.material
        return f"{self.case.which.value}_beta{m.beta:g}_fiber{m.fiber_axis.value}"

    def rows(self):
        rl2 = np.concatenate([[np.nan], self.l2_rates])
        rh1 = np.concatenate([[np.nan], self.h1_rates])
        return [(self.label, *vals) for vals in zip(self.h, self.l2, self.h1, rl2, rh1)]


def convergence_study(case: ManufacturedCase, sizes: Sequence[int] = (4, 8, 16, 32),
                      solver_cfg: SolverConfig | None = None) -> ConvergenceStudy:
    """Errors on a sequence of uniform meshes with ``n`` cells across the height.

    Raises:
        ValueError: fewer than three sizes, or sizes that do not double.
        OracleError: if either error sequence fails to decrease strictly.
    """
    sizes = list(sizes)
    if len(sizes) < 3:
        raise ValueError("need at least three mesh sizes")
    if any(b != 2 * a for a, b in zip(sizes[:-1], sizes[1:])):
        raise ValueError(f"mesh sizes must double at each step, got {sizes}")
    h, l2, h1 = [], [], []
    for n in sizes:
        mesh = case.mesh(n)
        u = manufactured_solve(case, mesh, solver_cfg)
        e0, e1 = field_errors(mesh, u, case)
        h.append(case.height / n)
        l2.append(e0)
        h1.append(e1)
    study = ConvergenceStudy(case, np.array(h), np.array(l2), np.array(h1))
    for name, e in (("L2", study.l2), ("H1", study.h1)):
        if np.any(np.diff(e) >= 0):
            raise OracleError(f"{name} error sequence is not decreasing: {e.tolist()}")
    return study


def write_verification_report(path: Path, studies: Sequence[ConvergenceStudy]) -> Path:
    rows = [r for st in studies for r in st.rows()]
    return export.write_table(path, ["case", "h", "l2_error", "h1_error", "l2_rate", "h1_rate"], rows)


# -- dense cross-check ------------------------------------------------------

def dense_solve(system: SparseSystem) -> np.ndarray:
    """Solve by dense Cholesky.

    Raises:
        OracleError: if the matrix is not symmetric positive definite.
    """
    a = system.matrix.toarray()
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * np.abs(a).max()):
        raise OracleError("assembled matrix is not symmetric")
    try:
        factor = sla.cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"dense Cholesky failed, matrix is not SPD: {exc}") from None
    return sla.cho_solve(factor, system.rhs)


def dense_check(system: SparseSystem, cfg: SolverConfig | None = None, *,
                solution: np.ndarray | None = None) -> float:
    """Max component discrepancy between the linear solver and a dense solve.

    The discrepancy is scaled by the largest dense component. ``solution``
    replaces the linear-solver call, e.g. to check an answer produced from a
    different (possibly corrupted) assembly of the same problem.
    """
    if system.size > DENSE_MAX_DOFS:
        raise ValueError(f"dense check limited to {DENSE_MAX_DOFS} dofs, got {system.size}")
    ref = dense_solve(system)
    x = solve(system, cfg) if solution is None else np.asarray(solution, float)
    scale = max(np.abs(ref).max(), np.finfo(float).tiny)
    return float(np.abs(x - ref).max() / scale)


DIRECT = SolverConfig(method=Method.DIRECT)
