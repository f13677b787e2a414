"""Matrix-free effective field ``H_h = A lap_h + H_d + H_a`` and the equilibrium diagonal."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .demag import DemagKernel, apply_demag
from .errors import NotEquilibriumError
from .grid import Mesh, cell_dot
from .material import MaterialParams


def apply_laplacian(m: np.ndarray, mesh: Mesh) -> np.ndarray:
    """7-point Laplacian with mirror (homogeneous Neumann) ghosts at mask boundaries.

    A missing neighbor contributes the center value, so only pairs of interior
    cells exchange.  Works for real and complex fields.
    """
    mesh.check(m)
    mask = mesh.mask
    out = np.zeros_like(m)
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        both = (mask[lo] & mask[hi])[..., None]
        diff = np.where(both, m[hi] - m[lo], 0)
        out[lo] += diff
        out[hi] -= diff
    return out / mesh.h**2


def apply_anisotropy(m: np.ndarray, params: MaterialParams, mesh: Mesh) -> np.ndarray:
    u = params.u_field(mesh)
    mu = cell_dot(m, u)[..., None]
    if params.anisotropy_form == "perpendicular":
        out = params.K * (m - mu * u)
    else:
        out = params.K * mu * u
    return mesh.restrict(out)


def apply_H(m: np.ndarray, params: MaterialParams, kernel: DemagKernel, mesh: Mesh) -> np.ndarray:
    """Total discrete field operator (without the applied field); linear in ``m``."""
    out = apply_demag(kernel, m, mesh)
    if params.A != 0.0:
        out = out + params.A * apply_laplacian(m, mesh)
    if params.K != 0.0:
        out = out + apply_anisotropy(m, params, mesh)
    return mesh.restrict(out)


def effective_field(m, params, kernel, mesh):
    return apply_H(m, params, kernel, mesh) + params.ell_field(mesh)


@dataclass(frozen=True, eq=False)
class EquilibriumDiagonal:
    beta: np.ndarray = field(repr=False)  # shape (nz, ny, nx), zero outside the mask
    residual: float = 0.0

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.beta[..., None] * u

    @property
    def min(self):
        return float(self.beta[self.beta != 0].min()) if np.any(self.beta) else 0.0

    @property
    def max(self):
        return float(self.beta[self.beta != 0].max()) if np.any(self.beta) else 0.0


def equilibrium_diagonal(m, params, kernel, mesh) -> EquilibriumDiagonal:
    """``beta_i = m_i . (H_h(m) + ell)_i`` and the residual of the eigen-relation, without checks."""
    heff = effective_field(m, params, kernel, mesh)
    beta = cell_dot(m, heff)
    beta[~mesh.mask] = 0.0
    res = heff - beta[..., None] * m
    residual = float(np.linalg.norm(res[mesh.mask], axis=-1).max())
    return EquilibriumDiagonal(beta, residual)


def build_B(m, params, kernel, mesh, tol_eq=1e-9) -> EquilibriumDiagonal:
    """Equilibrium diagonal; raises :class:`NotEquilibriumError` if the residual exceeds ``tol_eq``."""
    diag = equilibrium_diagonal(m, params, kernel, mesh)
    if diag.residual > tol_eq:
        raise NotEquilibriumError(diag.residual)
    return diag
