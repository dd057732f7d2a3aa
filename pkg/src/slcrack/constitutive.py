"""Transversely isotropic, strain-limiting elastic response.

The elasticity tensor is

    E[eps] = 2 mu eps + lam tr(eps) I + gamma (eps:M) M,   M = e_k (x) e_k,

and the material is described either by its strain-limiting response

    F(T) = K[T] / (1 + beta^alpha |K^1/2[T]|^alpha)^(1/alpha),   K = E^-1,

or by the inverted (hyperelastic) form used by the displacement solver

    T(eps) = Psi(|E^1/2[eps]|) E[eps],   Psi(s) = (1 - (beta s)^alpha)^(-1/alpha).

Array helpers on :class:`MaterialModel` work on stacks of Voigt vectors and
return clamp counts; the module-level functions take :class:`SymTensor2`
values and signal clamping with :class:`ClampWarning`.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .tensors import VOIGT_METRIC, SymTensor2, contract_voigt

# Psi argument is capped at (beta s)^alpha <= 1 - CLAMP_DELTA.
CLAMP_DELTA = 1e-8


class ClampWarning(RuntimeWarning):
    """The strain left the admissible set beta*s < 1 and Psi was clamped."""


class FiberAxis(str, enum.Enum):
    X = "X"
    Y = "Y"

    @classmethod
    def parse(cls, value) -> "FiberAxis":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().upper())


@dataclass(frozen=True)
class MaterialModel:
    """Material constants of the strain-limiting transversely isotropic solid.

    Attributes:
        mu: shear modulus, > 0.
        lam: Lame modulus, > 0.
        gamma: anisotropy modulus acting along the fiber axis.
        fiber_axis: ``X`` gives M = e1 (x) e1, ``Y`` gives M = e2 (x) e2.
        alpha: sharpness of the transition to the limiting strain, > 0.
        beta: strain-limit parameter, >= 0 (0 is linear elasticity).
    """

    mu: float = 1.0
    lam: float = 1.0
    gamma: float = 0.5
    fiber_axis: FiberAxis = FiberAxis.X
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "fiber_axis", FiberAxis.parse(self.fiber_axis))
        for name in ("mu", "lam", "gamma", "alpha", "beta"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.mu <= 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        stiff = 2 * self.mu + self.lam + self.gamma
        soft = 2 * self.mu + self.lam
        if stiff <= 0 or stiff * soft - self.lam**2 <= 0:
            raise ValueError(
                "elasticity tensor is not positive definite: need 2mu+lam+gamma > 0 "
                "and (2mu+lam+gamma)(2mu+lam) - lam^2 > 0"
            )

    def replace(self, **changes) -> "MaterialModel":
        fields = dict(
            mu=self.mu, lam=self.lam, gamma=self.gamma, fiber_axis=self.fiber_axis,
            alpha=self.alpha, beta=self.beta,
        )
        fields.update(changes)
        return MaterialModel(**fields)

    @property
    def structural_voigt(self) -> np.ndarray:
        return np.array([1.0, 0.0, 0.0]) if self.fiber_axis is FiberAxis.X else np.array([0.0, 1.0, 0.0])

    @cached_property
    def stiffness_matrix(self) -> np.ndarray:
        """3x3 map from tensorial-shear Voigt strain to Voigt stress."""
        a = 2 * self.mu + self.lam
        c = np.array([[a, self.lam, 0.0], [self.lam, a, 0.0], [0.0, 0.0, 2 * self.mu]])
        k = 0 if self.fiber_axis is FiberAxis.X else 1
        c[k, k] += self.gamma
        return c

    @cached_property
    def compliance_matrix(self) -> np.ndarray:
        c = self.stiffness_matrix
        det = c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]
        return np.array([
            [c[1, 1] / det, -c[0, 1] / det, 0.0],
            [-c[1, 0] / det, c[0, 0] / det, 0.0],
            [0.0, 0.0, 1.0 / c[2, 2]],
        ])

    @cached_property
    def energy_matrix(self) -> np.ndarray:
        """Symmetric matrix D with ``eps:E[eps] = eps_v . D eps_v``."""
        return VOIGT_METRIC @ self.stiffness_matrix

    # -- vectorised kernels over Voigt stacks -------------------------------

    def stiffness_voigt(self, eps: np.ndarray) -> np.ndarray:
        return eps @ self.stiffness_matrix.T

    def compliance_voigt(self, t: np.ndarray) -> np.ndarray:
        return t @ self.compliance_matrix.T

    def seminorm_voigt(self, eps: np.ndarray) -> np.ndarray:
        q = contract_voigt(eps, self.stiffness_voigt(eps))
        return np.sqrt(np.maximum(q, 0.0))

    def psi_voigt(self, s: np.ndarray) -> tuple[np.ndarray, int]:
        """Psi(s) elementwise plus the number of clamped entries."""
        s = np.asarray(s, dtype=float)
        if self.beta == 0.0:
            return np.ones_like(s), 0
        x = (self.beta * s) ** self.alpha
        over = x > 1.0 - CLAMP_DELTA
        x = np.where(over, 1.0 - CLAMP_DELTA, x)
        return (1.0 - x) ** (-1.0 / self.alpha), int(np.count_nonzero(over))

    def stress_voigt(self, eps: np.ndarray) -> tuple[np.ndarray, int]:
        sig = self.stiffness_voigt(eps)
        psi, clamped = self.psi_voigt(np.sqrt(np.maximum(contract_voigt(eps, sig), 0.0)))
        return psi[..., None] * sig, clamped

    def strain_voigt(self, t: np.ndarray) -> np.ndarray:
        k = self.compliance_voigt(t)
        if self.beta == 0.0:
            return k
        w = np.sqrt(np.maximum(contract_voigt(t, k), 0.0))
        denom = (1.0 + (self.beta * w) ** self.alpha) ** (1.0 / self.alpha)
        return k / denom[..., None]


def _warn_clamped(count: int):
    if count:
        warnings.warn("beta*s reached the strain limit; Psi argument clamped", ClampWarning, stacklevel=3)


def stiffness_apply(m: MaterialModel, eps: SymTensor2) -> SymTensor2:
    return SymTensor2.from_voigt(m.stiffness_voigt(eps.voigt()))


def compliance_apply(m: MaterialModel, t: SymTensor2) -> SymTensor2:
    return SymTensor2.from_voigt(m.compliance_voigt(t.voigt()))


def energy_seminorm(m: MaterialModel, eps: SymTensor2) -> float:
    """``|E^1/2[eps]|``, evaluated as ``sqrt(eps:E[eps])``."""
    return float(m.seminorm_voigt(eps.voigt()))


def psi(m: MaterialModel, s: float) -> float:
    if s < 0:
        raise ValueError(f"psi needs s >= 0, got {s}")
    value, clamped = m.psi_voigt(np.asarray(s, dtype=float))
    _warn_clamped(clamped)
    return float(value)


def stress_from_strain(m: MaterialModel, eps: SymTensor2) -> SymTensor2:
    t, clamped = m.stress_voigt(eps.voigt())
    _warn_clamped(clamped)
    return SymTensor2.from_voigt(t)


def strain_from_stress(m: MaterialModel, t: SymTensor2) -> SymTensor2:
    return SymTensor2.from_voigt(m.strain_voigt(t.voigt()))


def energy_density(m: MaterialModel, eps: SymTensor2) -> float:
    """Strain energy density measure ``T(eps):eps``."""
    v = eps.voigt()
    t, clamped = m.stress_voigt(v)
    _warn_clamped(clamped)
    return float(contract_voigt(t, v))
