"""Frequency-domain linearized operator ``M_w u = i w u - D1((H_h - B) u)`` and friends."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demag import DemagKernel
from .equilibrium import EquilibriumState
from .grid import Mesh, cell_dot
from .material import MaterialParams
from .operators import apply_H


def apply_D1(w: np.ndarray, m: np.ndarray, alpha: float) -> np.ndarray:
    """``-m x w - alpha m x (m x w)`` cell-wise; real coefficients, so complex ``w`` is fine."""
    mxw = np.cross(m, w)
    return -mxw - alpha * np.cross(m, mxw)


def apply_D1_adjoint(w: np.ndarray, m: np.ndarray, alpha: float) -> np.ndarray:
    mxw = np.cross(m, w)
    return mxw - alpha * np.cross(m, mxw)


def project_tangent(w: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``w_i - (m_i . w_i) m_i``; the orthogonal projection on the tangent space of a unit field."""
    return w - cell_dot(w, m)[..., None] * m


def tangent_basis(m: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Two orthonormal vectors per interior cell spanning the plane normal to ``m_i``.

    Returns shape ``(n_interior, 2, 3)`` in mask order.
    """
    mi = m[mesh.mask]
    # pick the coordinate axis least aligned with m_i as a seed
    seed = np.zeros_like(mi)
    seed[np.arange(len(mi)), np.argmin(np.abs(mi), axis=1)] = 1.0
    e1 = seed - cell_dot(seed, mi)[:, None] * mi
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(mi, e1)
    return np.stack([e1, e2], axis=1)


@dataclass(frozen=True, eq=False)
class FrequencySystem:
    omega: float
    eq: EquilibriumState
    params: MaterialParams
    kernel: DemagKernel
    mesh: Mesh

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be strictly positive, got {self.omega}")

    @property
    def m(self):
        return self.eq.m

    @property
    def alpha(self):
        return self.params.alpha

    @property
    def size(self) -> int:
        return 3 * self.mesh.n_interior

    def apply_HB(self, u):
        """``(H_h - B) u``; self-adjoint."""
        return apply_H(u, self.params, self.kernel, self.mesh) - self.eq.beta.apply(u)

    def apply_M(self, u):
        self.mesh.check(u)
        u = self.mesh.restrict(np.array(u, dtype=complex))
        out = 1j * self.omega * u - apply_D1(self.apply_HB(u), self.m, self.alpha)
        return self.mesh.restrict(out)

    def apply_M_adjoint(self, u):
        self.mesh.check(u)
        u = self.mesh.restrict(np.array(u, dtype=complex))
        out = -1j * self.omega * u - self.apply_HB(apply_D1_adjoint(u, self.m, self.alpha))
        return self.mesh.restrict(out)

    def project(self, w):
        return self.mesh.restrict(project_tangent(w, self.m))

    def build_rhs(self, zeta) -> np.ndarray:
        """``D1`` applied to the constant excitation ``zeta`` (a unit 3-vector)."""
        zeta = np.asarray(zeta, dtype=float)
        if abs(np.linalg.norm(zeta) - 1.0) > 1e-12:
            raise ValueError("excitation direction must be a unit vector")
        y = self.mesh.uniform(zeta)
        return self.mesh.restrict(apply_D1(y, self.m, self.alpha)).astype(complex)


# module-level aliases mirroring the operation names
def apply_M(sys: FrequencySystem, u):
    return sys.apply_M(u)


def apply_M_adjoint(sys: FrequencySystem, u):
    return sys.apply_M_adjoint(u)


def build_rhs(sys: FrequencySystem, zeta):
    return sys.build_rhs(zeta)
