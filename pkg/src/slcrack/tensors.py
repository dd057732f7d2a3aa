"""Symmetric 2x2 tensors and the Voigt vectors used to store them.

Voigt vectors are ordered ``(11, 22, 12)`` and keep the *tensorial* shear
component (``eps_12``, not ``2 eps_12``).  Every contraction therefore carries
an explicit factor 2 on the shear slot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Metric that turns the Euclidean product of Voigt vectors into A:B.
VOIGT_METRIC = np.diag([1.0, 1.0, 2.0])

VoigtVec3 = np.ndarray


@dataclass(frozen=True)
class SymTensor2:
    """A symmetric 2x2 tensor with the off-diagonal stored once."""

    xx: float = 0.0
    yy: float = 0.0
    xy: float = 0.0

    @classmethod
    def identity(cls) -> "SymTensor2":
        return cls(1.0, 1.0, 0.0)

    @classmethod
    def zero(cls) -> "SymTensor2":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, a) -> "SymTensor2":
        """Build from a 2x2 matrix, symmetrising the off-diagonal."""
        a = np.asarray(a, dtype=float)
        return cls(float(a[0, 0]), float(a[1, 1]), 0.5 * float(a[0, 1] + a[1, 0]))

    @classmethod
    def from_voigt(cls, v) -> "SymTensor2":
        v = np.asarray(v, dtype=float)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def voigt(self) -> VoigtVec3:
        return np.array([self.xx, self.yy, self.xy], dtype=float)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.xx, self.xy], [self.xy, self.yy]], dtype=float)

    def trace(self) -> float:
        return self.xx + self.yy

    def __add__(self, other: "SymTensor2") -> "SymTensor2":
        return SymTensor2(self.xx + other.xx, self.yy + other.yy, self.xy + other.xy)

    def __sub__(self, other: "SymTensor2") -> "SymTensor2":
        return SymTensor2(self.xx - other.xx, self.yy - other.yy, self.xy - other.xy)

    def __mul__(self, c: float) -> "SymTensor2":
        return SymTensor2(c * self.xx, c * self.yy, c * self.xy)

    __rmul__ = __mul__

    def __neg__(self) -> "SymTensor2":
        return SymTensor2(-self.xx, -self.yy, -self.xy)


def _as_voigt(a) -> np.ndarray:
    if isinstance(a, SymTensor2):
        return a.voigt()
    return np.asarray(a, dtype=float)


def contract_voigt(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A:B for stacks of Voigt vectors (last axis of length 3)."""
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + 2.0 * a[..., 2] * b[..., 2]


def contract(a, b) -> float:
    """Double contraction ``A:B = tr(A^T B)``."""
    return float(contract_voigt(_as_voigt(a), _as_voigt(b)))


def frob_norm(a) -> float:
    return float(np.sqrt(max(contract(a, a), 0.0)))


def sym_grad(grad_u) -> SymTensor2:
    """Symmetric part of a displacement gradient ``grad_u[i, j] = d u_i / d x_j``."""
    g = np.asarray(grad_u, dtype=float)
    return SymTensor2(g[0, 0], g[1, 1], 0.5 * (g[0, 1] + g[1, 0]))


def rotate(a: SymTensor2, theta: float) -> SymTensor2:
    """Return ``R A R^T`` for the in-plane rotation by ``theta``."""
    c, s = np.cos(theta), np.sin(theta)
    r = np.array([[c, -s], [s, c]])
    return SymTensor2.from_matrix(r @ a.as_matrix() @ r.T)
