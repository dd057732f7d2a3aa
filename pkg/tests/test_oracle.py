import csv
from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp

from slcrack.assembly import LoadProfile, SparseSystem, assemble_system
from slcrack.constitutive import MaterialModel
from slcrack.mesh import build_plate_mesh
from slcrack.oracle import (DIRECT, ExactField, OracleError, build_manufactured, convergence_study, dense_check,
                            dense_solve, elastic_stress, field_errors, limited_stress, manufactured_solve,
                            numerical_forcing, write_verification_report)
from slcrack.solver import Preconditioner, SolverConfig


def from_voigt(v):
    return np.stack([np.stack([v[..., 0], v[..., 2]], -1), np.stack([v[..., 2], v[..., 1]], -1)], -2)


def to_voigt(t):
    return np.stack([t[..., 0, 0], t[..., 1, 1], t[..., 0, 1]], -1)

GRID = np.meshgrid(np.linspace(0.05, 1.95, 9), np.linspace(0.05, 0.95, 5))


def test_limited_stress_matches_package_law(rng):
    m = MaterialModel(fiber_axis="Y", alpha=0.5, beta=2.0)
    eps = 0.05 * rng.normal(size=(50, 3))
    t, _ = m.stress_voigt(eps)
    ref, s = limited_stress(m, from_voigt(eps))
    assert np.allclose(to_voigt(ref), t, rtol=1e-13, atol=1e-15)
    assert np.allclose(s, m.seminorm_voigt(eps), rtol=1e-13)


def test_poly2_linear_isotropic_forcing_is_constant():
    case = build_manufactured(MaterialModel(gamma=0.0, beta=0.0), ExactField.POLY2)
    f = case.forcing(*GRID)
    assert np.allclose(f, f[0, 0], rtol=1e-12, atol=1e-15)
    assert np.abs(f).max() > 0


def test_rigid_field_is_force_and_strain_free():
    case = build_manufactured(MaterialModel(beta=2.0), ExactField.RIGID)
    assert np.abs(case.strain(*GRID)).max() <= 1e-15
    assert np.abs(case.forcing(*GRID)).max() <= 1e-15


def test_numerical_matches_analytic_forcing():
    case = build_manufactured(MaterialModel(beta=0.5), ExactField.POLY2)
    f_num = numerical_forcing(case.stress, *GRID)
    f_ref = case.analytic_forcing(*GRID)
    assert np.abs(f_num - f_ref).max() <= 1e-9 * np.abs(f_ref).max()


def test_trig_forcing_is_first_order_in_beta():
    base = build_manufactured(MaterialModel(beta=0.0), ExactField.TRIG_SMOOTH)
    f0 = base.forcing(*GRID)
    slopes = []
    for beta in (0.1, 0.05, 0.025):
        case = build_manufactured(MaterialModel(beta=beta), ExactField.TRIG_SMOOTH)
        slopes.append(np.abs(case.forcing(*GRID) - f0).max() / beta)
    assert slopes[0] > 0
    # O(beta) difference: the normalised slope settles as beta shrinks
    assert abs(slopes[1] - slopes[2]) < abs(slopes[0] - slopes[1])
    assert abs(slopes[2] / slopes[1] - 1) < 0.05


def test_amplitude_rejection():
    with pytest.raises(ValueError, match="amplitude"):
        build_manufactured(MaterialModel(beta=2.0), ExactField.TRIG_SMOOTH, amplitude=1.0)


def test_bilinear_is_reproduced():
    case = build_manufactured(MaterialModel(gamma=0.0, beta=0.0), ExactField.BILINEAR)
    mesh = case.mesh(4)
    u = manufactured_solve(case, mesh)
    l2, h1 = field_errors(mesh, u, case)
    assert l2 <= 1e-10 and h1 <= 1e-10


def test_field_errors_zero_for_nodal_interpolant_of_bilinear():
    case = build_manufactured(MaterialModel(), ExactField.BILINEAR)
    mesh = case.mesh(2)
    u = case.displacement(mesh.nodes[:, 0], mesh.nodes[:, 1]).ravel()
    assert max(field_errors(mesh, u, case)) <= 1e-14


@pytest.mark.parametrize("which", [ExactField.POLY2, ExactField.TRIG_SMOOTH])
@pytest.mark.parametrize("beta", [0.0, 0.05])
def test_convergence_rates(which, beta):
    case = build_manufactured(MaterialModel(beta=beta, fiber_axis="Y"), which)
    study = convergence_study(case, (4, 8, 16), DIRECT)
    assert study.l2_rates[-1] == pytest.approx(2.0, abs=0.15)
    assert study.h1_rates[-1] == pytest.approx(1.0, abs=0.1)


def test_non_doubling_sizes_rejected():
    case = build_manufactured(MaterialModel(beta=0.0), ExactField.POLY2)
    with pytest.raises(ValueError, match="double"):
        convergence_study(case, (4, 8, 12))
    with pytest.raises(ValueError, match="three"):
        convergence_study(case, (4, 8))


def test_verification_report(tmp_path):
    case = build_manufactured(MaterialModel(beta=0.0), ExactField.POLY2)
    study = convergence_study(case, (2, 4, 8), DIRECT)
    with open(write_verification_report(tmp_path / "v.csv", [study])) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["case"] for r in rows] == ["Poly2_beta0_fiberX"] * 3
    assert np.allclose([float(r["h"]) for r in rows], [0.5, 0.25, 0.125])
    rates = [float(r["l2_rate"]) for r in rows]
    assert np.isnan(rates[0]) and np.allclose(rates[1:], study.l2_rates, rtol=1e-11)


@pytest.mark.parametrize("n", [2, 8, 16])
@pytest.mark.parametrize("pc", list(Preconditioner))
def test_dense_check_agrees(n, pc):
    mesh = build_plate_mesh(2.0, 1.0, 1.0, 2 * n, n, 2.0)
    m = MaterialModel(beta=1.0)
    u0 = np.zeros(mesh.n_dofs)
    system = assemble_system(mesh, m, LoadProfile("slope", 0.1), u0)
    assert dense_check(system, SolverConfig(preconditioner=pc)) <= 1e-8


def test_dense_check_identity():
    system = SparseSystem(sp.identity(5, format="csr"), np.arange(5.0), np.array([], int), np.array([]))
    assert dense_check(system) == 0.0


def test_dense_check_detects_corrupted_assembly():
    mesh = build_plate_mesh(2.0, 1.0, 1.0, 8, 4, 1.0)
    clean = assemble_system(mesh, MaterialModel(), LoadProfile("uniform", 0.1))
    a = clean.matrix.tolil()
    i, j = int(clean.free[3]), int(clean.free[4])
    a[i, j] *= 1.5
    a[j, i] = a[i, j]
    bad = replace(clean, matrix=a.tocsr())
    x_bad = dense_solve(bad)
    assert dense_check(clean, solution=x_bad) > 1e-8


def test_dense_solve_rejects_nonsymmetric():
    system = SparseSystem(sp.csr_matrix(np.array([[2.0, 1.0], [0.0, 2.0]])), np.ones(2), np.array([], int), np.array([]))
    with pytest.raises(OracleError, match="symmetric"):
        dense_solve(system)


def test_dense_solve_rejects_indefinite():
    system = SparseSystem(sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]])), np.ones(2), np.array([], int), np.array([]))
    with pytest.raises(OracleError, match="SPD"):
        dense_solve(system)


def test_dense_check_size_limit():
    n = 2001
    system = SparseSystem(sp.identity(n, format="csr"), np.ones(n), np.array([], int), np.array([]))
    with pytest.raises(ValueError, match="limited"):
        dense_check(system)


def test_elastic_stress_structural_term():
    m = MaterialModel(mu=1.0, lam=0.5, gamma=2.0, fiber_axis="X")
    eps = np.array([[1.0, 0.0], [0.0, 0.0]])
    assert np.allclose(elastic_stress(m, eps), [[4.5, 0.0], [0.0, 0.5]], rtol=1e-15)
