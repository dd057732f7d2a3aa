"""Fixed-point (Picard) iteration for the strain-limiting plate problem.

The scheme starts from the linear-elastic solution and repeatedly solves the
linear system whose coefficient Psi is frozen at the previous iterate.  After
every solve the full nonlinear force imbalance is recorded; the loop stops on
tolerance, on a residual plateau, or after ``max_iter`` steps.

The tolerance is relative: iteration stops once ``|R(u)| <= tol * |L|`` where
``|L|`` is the Euclidean norm of the load vector on free dofs, i.e. the
residual of ``u = 0``.

``relaxation < 1`` blends each new solve with the previous iterate. The
default of 1 is the plain scheme; damping is only needed when near-tip strains
approach the limit and the frozen-coefficient map stops contracting.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assembly import BodyForce, LoadProfile, assemble_system, nonlinear_residual
from .constitutive import MaterialModel
from .mesh import QuadMesh
from .solver import SolverConfig, SolverError, solve

log = logging.getLogger(__name__)


class PicardStatus(str, enum.Enum):
    CONVERGED_TOL = "ConvergedTol"
    STAGNATED = "Stagnated"
    MAX_ITER = "MaxIter"
    RUNNING = "Running"


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-6
    max_iter: int = 10
    stagnation_window: int = 3
    stagnation_rel: float = 1e-3
    relaxation: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.stagnation_window < 1:
            raise ValueError(f"stagnation_window must be >= 1, got {self.stagnation_window}")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError(f"relaxation must lie in (0, 1], got {self.relaxation}")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    residual_norm: float
    clamp_events: int


@dataclass
class PicardState:
    u: np.ndarray
    u_prev: np.ndarray
    residual_history: list[IterationRecord] = field(default_factory=list)
    status: PicardStatus = PicardStatus.RUNNING
    load_norm: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.residual_history)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual_norm for r in self.residual_history])

    @property
    def converged(self) -> bool:
        return self.status in (PicardStatus.CONVERGED_TOL, PicardStatus.STAGNATED)


class PicardError(RuntimeError):
    """A linear solve failed mid-iteration; ``state`` holds the partial history."""

    def __init__(self, message: str, state: PicardState):
        super().__init__(message)
        self.state = state


def warm_start(mesh: QuadMesh, m: MaterialModel, load: LoadProfile | None,
               solver: SolverConfig | None = None, *, body_force: BodyForce | None = None,
               dirichlet: Sequence[tuple[int, float]] | None = None) -> np.ndarray:
    """Linear-elastic (Psi == 1) solution used as the initial iterate."""
    system = assemble_system(mesh, m, load, None, body_force=body_force, dirichlet=dirichlet)
    return solve(system, solver)


def _stagnated(norms: list[float], window: int, rel: float) -> bool:
    if len(norms) < window + 1:
        return False
    tail = norms[-(window + 1):]
    return all(abs(b - a) <= rel * a for a, b in zip(tail[:-1], tail[1:]))


def run_picard(mesh: QuadMesh, m: MaterialModel, load: LoadProfile | None,
               solver_cfg: SolverConfig | None = None, picard_cfg: PicardConfig | None = None, *,
               body_force: BodyForce | None = None,
               dirichlet: Sequence[tuple[int, float]] | None = None,
               u0: np.ndarray | None = None) -> PicardState:
    """Run the Picard loop and return the final iterate with its history.

    Raises:
        PicardError: if a linear solve fails; the partial state is attached.
    """
    picard_cfg = PicardConfig() if picard_cfg is None else picard_cfg
    kwargs = dict(body_force=body_force, dirichlet=dirichlet)
    state = PicardState(u=np.zeros(mesh.n_dofs), u_prev=np.zeros(mesh.n_dofs))
    try:
        u = warm_start(mesh, m, load, solver_cfg, **kwargs) if u0 is None else np.array(u0, dtype=float)
    except SolverError as exc:
        raise PicardError(f"warm start failed: {exc}", state) from exc
    state.u = u
    state.load_norm = float(np.linalg.norm(nonlinear_residual(mesh, m, load, np.zeros(mesh.n_dofs), **kwargs).vector))

    threshold = picard_cfg.tol * (state.load_norm if state.load_norm > 0 else 1.0)
    norms: list[float] = []
    for n in range(1, picard_cfg.max_iter + 1):
        system = assemble_system(mesh, m, load, state.u, **kwargs)
        try:
            u_new = solve(system, solver_cfg)
        except SolverError as exc:
            raise PicardError(f"linear solve failed at Picard iteration {n}: {exc}", state) from exc
        if picard_cfg.relaxation != 1.0:
            u_new = picard_cfg.relaxation * u_new + (1.0 - picard_cfg.relaxation) * state.u
        state.u_prev, state.u = state.u, u_new
        res = nonlinear_residual(mesh, m, load, u_new, **kwargs)
        state.residual_history.append(IterationRecord(n, res.norm, system.clamp_events + res.clamp_events))
        norms.append(res.norm)
        log.debug("picard %d: |R| = %.6e (clamped %d)", n, res.norm, system.clamp_events + res.clamp_events)
        if res.norm <= threshold:
            state.status = PicardStatus.CONVERGED_TOL
            break
        if _stagnated(norms, picard_cfg.stagnation_window, picard_cfg.stagnation_rel):
            state.status = PicardStatus.STAGNATED
            break
    else:
        state.status = PicardStatus.MAX_ITER
    return state
