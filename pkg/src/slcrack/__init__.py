"""Crack-tip fields in transversely isotropic, strain-limiting elastic plates.

Q1 finite elements with Picard linearisation of the stress law
``T(eps) = Psi(|E^1/2 eps|) E[eps]``.
"""

from .assembly import LoadKind, LoadProfile, assemble_system, nonlinear_residual
from .constitutive import FiberAxis, MaterialModel
from .mesh import BoundaryTag, QuadMesh, build_plate_mesh, dirichlet_dofs
from .picard import PicardConfig, PicardState, PicardStatus, run_picard, warm_start
from .postprocess import FieldReport, build_report, crack_line_profile, crack_opening_profile, recover_fields
from .solver import SolverConfig, solve
from .tensors import SymTensor2

__version__ = "0.1.0"

__all__ = [
    "BoundaryTag", "FiberAxis", "FieldReport", "LoadKind", "LoadProfile", "MaterialModel",
    "PicardConfig", "PicardState", "PicardStatus", "QuadMesh", "SolverConfig", "SymTensor2",
    "assemble_system", "build_plate_mesh", "build_report", "crack_line_profile", "crack_opening_profile",
    "dirichlet_dofs", "nonlinear_residual", "recover_fields", "run_picard", "solve", "warm_start",
]
