"""Linear solvers for the SPD systems produced by each Picard step."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import SparseSystem


class Method(str, enum.Enum):
    DIRECT = "direct"
    CG = "cg"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        return cls.CG if v in ("cg", "conjugategradient", "conjugate_gradient") else cls(v)


class Preconditioner(str, enum.Enum):
    NONE = "none"
    JACOBI = "jacobi"
    INCOMPLETE_CHOLESKY = "ic"

    @classmethod
    def parse(cls, value) -> "Preconditioner":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("ic", "ic0", "incompletecholesky", "incomplete_cholesky"):
            return cls.INCOMPLETE_CHOLESKY
        return cls(v)


class SolverError(RuntimeError):
    """Linear solve failed; ``residual`` is the last relative residual reached."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonConvergenceError(SolverError):
    pass


class BreakdownError(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.CG
    rel_tol: float = 1e-12
    max_iter: int | None = None
    preconditioner: Preconditioner = Preconditioner.JACOBI

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        object.__setattr__(self, "preconditioner", Preconditioner.parse(self.preconditioner))
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class SolveInfo:
    iterations: int = 0
    residual: float = 0.0


def incomplete_cholesky(a: sp.csr_matrix) -> sp.csr_matrix:
    """Zero fill-in incomplete Cholesky factor ``L`` with ``L L^T ~ A``.

    Retries with a growing diagonal shift if a pivot turns non-positive.
    """
    lower = sp.tril(a, format="csr")
    lower.sort_indices()
    n = lower.shape[0]
    diag = a.diagonal()
    shift = 0.0
    for _ in range(12):
        rows = [dict(zip(lower.indices[lower.indptr[i]:lower.indptr[i + 1]].tolist(),
                         lower.data[lower.indptr[i]:lower.indptr[i + 1]].tolist())) for i in range(n)]
        ok = True
        for i in range(n):
            row = rows[i]
            row[i] = row.get(i, 0.0) + shift * diag[i]
            for k in sorted(c for c in row if c < i):
                rk = rows[k]
                s = row[k]
                for j, v in row.items():
                    if j < k and j in rk:
                        s -= v * rk[j]
                row[k] = s / rk[k]
            piv = row[i] - sum(v * v for j, v in row.items() if j < i)
            if piv <= 0.0:
                ok = False
                break
            row[i] = np.sqrt(piv)
        if ok:
            data = np.array([rows[i][j] for i in range(n) for j in
                             lower.indices[lower.indptr[i]:lower.indptr[i + 1]]])
            return sp.csr_matrix((data, lower.indices.copy(), lower.indptr.copy()), shape=a.shape)
        shift = 1e-3 if shift == 0.0 else 2 * shift
    raise BreakdownError("incomplete Cholesky failed: matrix is not positive definite")


def _preconditioner(a: sp.csr_matrix, kind: Preconditioner):
    if kind is Preconditioner.NONE:
        return lambda r: r
    if kind is Preconditioner.JACOBI:
        d = a.diagonal()
        if np.any(d <= 0):
            raise BreakdownError("non-positive diagonal entry: matrix is not SPD")
        inv = 1.0 / d
        return lambda r: inv * r
    lower = incomplete_cholesky(a)
    upper = lower.T.tocsr()

    def apply(r):
        y = spla.spsolve_triangular(lower, r, lower=True)
        return spla.spsolve_triangular(upper, y, lower=False)
    return apply


def conjugate_gradient(a: sp.csr_matrix, b: np.ndarray, *, rel_tol: float = 1e-12,
                       max_iter: int | None = None, preconditioner: Preconditioner = Preconditioner.JACOBI,
                       x0: np.ndarray | None = None, info: SolveInfo | None = None) -> np.ndarray:
    """Preconditioned conjugate gradients stopping on ``|b - A x| <= rel_tol |b|``."""
    n = len(b)
    max_iter = 10 * n if max_iter is None else max_iter
    info = SolveInfo() if info is None else info
    bnorm = np.linalg.norm(b)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        info.iterations, info.residual = 0, 0.0
        return np.zeros(n)
    apply_m = _preconditioner(a, preconditioner)
    r = b - a @ x
    z = apply_m(r)
    p = z.copy()
    rz = r @ z
    res = np.linalg.norm(r) / bnorm
    it = 0
    while res > rel_tol:
        if it >= max_iter:
            raise NonConvergenceError(
                f"CG did not converge in {max_iter} iterations (relative residual {res:.3e})",
                residual=res, iterations=it)
        ap = a @ p
        curv = p @ ap
        if curv <= 0.0:
            raise BreakdownError(
                f"CG breakdown at iteration {it}: non-positive curvature p.Ap={curv:.3e}, matrix is not SPD",
                residual=res, iterations=it)
        step = rz / curv
        x += step * p
        r -= step * ap
        it += 1
        if it % 50 == 0:
            r = b - a @ x
        z = apply_m(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        res = np.linalg.norm(r) / bnorm
        if res <= rel_tol:
            # confirm on the true residual; the recurrence drifts in long runs
            r = b - a @ x
            res = np.linalg.norm(r) / bnorm
            if res > rel_tol:
                z = apply_m(r)
                p = z.copy()
                rz = r @ z
    info.iterations, info.residual = it, res
    return x


def solve(system: SparseSystem, cfg: SolverConfig | None = None, info: SolveInfo | None = None) -> np.ndarray:
    """Solve a constrained system; prescribed dofs get their exact values."""
    cfg = SolverConfig() if cfg is None else cfg
    info = SolveInfo() if info is None else info
    a, b = system.matrix, system.rhs
    if cfg.method is Method.DIRECT:
        x = spla.spsolve(a.tocsc(), b)
        if not np.all(np.isfinite(x)):
            raise BreakdownError("direct factorisation produced non-finite values: matrix is singular")
        info.iterations = 1
        bn = np.linalg.norm(b)
        info.residual = float(np.linalg.norm(b - a @ x) / bn) if bn else 0.0
    else:
        x = conjugate_gradient(a, b, rel_tol=cfg.rel_tol, max_iter=cfg.max_iter,
                               preconditioner=cfg.preconditioner, info=info)
    x[system.constrained] = system.values
    return x
