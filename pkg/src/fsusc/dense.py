"""Dense reference assemblies: explicit matrices, singular values, condition numbers and bound checks.

Everything here favors transparency over speed and is limited to
``dense_limit`` unknowns (``FSUSC_DENSE_LIMIT`` overrides the default 3000).
Unknowns are the interior-cell components in mask order, three per cell.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DenseLimitExceeded
from .grid import Mesh
from .linear_system import tangent_basis

DEFAULT_DENSE_LIMIT = 3000


def dense_limit() -> int:
    return int(os.environ.get("FSUSC_DENSE_LIMIT", DEFAULT_DENSE_LIMIT))


def check_dense(n: int, limit: int | None = None) -> None:
    limit = dense_limit() if limit is None else limit
    if n > limit:
        raise DenseLimitExceeded(n, limit)


def to_vec(f: np.ndarray, mesh: Mesh) -> np.ndarray:
    return f[mesh.mask].reshape(-1)


def from_vec(v: np.ndarray, mesh: Mesh) -> np.ndarray:
    out = mesh.zeros(dtype=v.dtype)
    out[mesh.mask] = v.reshape(-1, 3)
    return out


def field_operator(apply_field, mesh: Mesh):
    """Wrap a field-to-field operator as a flat vector operator."""
    def apply(v):
        return to_vec(apply_field(from_vec(v, mesh)), mesh)
    return apply


@dataclass(frozen=True, eq=False)
class DenseOperator:
    entries: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.entries.shape[1]


def assemble_dense(apply_fn, n: int, dtype=complex, limit: int | None = None) -> DenseOperator:
    """Probe a linear operator column by column with canonical basis vectors."""
    check_dense(n, limit)
    cols = []
    for j in range(n):
        e = np.zeros(n, dtype=dtype)
        e[j] = 1.0
        cols.append(np.asarray(apply_fn(e)))
    return DenseOperator(np.stack(cols, axis=1))


def tangent_frame(m: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Orthonormal basis of the tangent space as a ``3n x 2n`` matrix (flat-vector coordinates)."""
    basis = tangent_basis(m, mesh)  # (n, 2, 3)
    n = basis.shape[0]
    Q = np.zeros((3 * n, 2 * n))
    for k in range(2):
        rows = 3 * np.arange(n)[:, None] + np.arange(3)[None, :]
        Q[rows, (2 * np.arange(n) + k)[:, None]] = basis[:, k, :]
    return Q


def singular_values(op) -> np.ndarray:
    """All singular values, descending."""
    a = op.entries if isinstance(op, DenseOperator) else np.asarray(op)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK non-convergence
        raise RuntimeError(f"SVD did not converge: {exc}") from exc


def cond(op) -> float:
    s = singular_values(op)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def clustered_fraction(sigma, ratio=10.0) -> float:
    """Fraction of singular values in ``[sigma_max / ratio, sigma_max]``."""
    sigma = np.asarray(sigma)
    return float(np.mean(sigma >= sigma.max() / ratio))


def cond_bound_M(omega, alpha, h, A, K) -> float:
    s = (1 + alpha**2) * (1 + 1 / h**3) * (A / h**2 + 1 + K)
    return float(np.sqrt((omega**2 + s) / omega**2))


def g_factor(omega, alpha, h, A, K) -> float:
    q = ((1 + 1 / h**3) * (A / h**2 + 1 + K)) ** 2
    return float(np.sqrt((2 + alpha**2) * q / (omega**2 + q)))


def cond_bound_precond(omega, alpha, h, A, K) -> float:
    g = g_factor(omega, alpha, h, A, K)
    return float(np.sqrt(1 + g * (2 + g**2)))


def preconditioned_limit(alpha) -> float:
    return 1 + np.sqrt(2 + alpha**2)


def operator_matrix(sys, precond=None, restricted=True, limit=None) -> np.ndarray:
    """Dense ``P^{-1} M`` (or ``M``), as ``3n x 2n`` on a tangent frame when ``restricted``.

    On the tangent space the right projection is the identity, so the
    restricted matrix is what a projected solve sees; its singular values
    exclude the artificial zero cluster of the full space.
    """
    mesh = sys.mesh
    n = sys.size
    check_dense(n, limit)
    if precond is None:
        def apply(u):
            return sys.apply_M(u)
    else:
        def apply(u):
            return precond.solve(sys.apply_M(u))
    full = assemble_dense(field_operator(apply, mesh), n, limit=limit).entries
    if not restricted:
        return full
    return full @ tangent_frame(sys.m, mesh)


def estimate_cond(sys, precond=None, limit=None) -> float:
    """``sigma_max / sigma_min`` of the (preconditioned) operator restricted to the tangent space."""
    return cond(operator_matrix(sys, precond, restricted=True, limit=limit))


@dataclass
class BoundCheck:
    omega: float
    cond_M: float
    bound_M: float
    cond_precond: float
    bound_precond: float

    @property
    def margin_M(self) -> float:
        return (self.bound_M - self.cond_M) / self.bound_M

    @property
    def margin_precond(self) -> float:
        return (self.bound_precond - self.cond_precond) / self.bound_precond


def check_cond_bounds(mesh, params, eq, omega_grid, kernel=None, limit=None) -> list[BoundCheck]:
    """Measured vs. a-priori condition-number bounds for ``M`` and the exactly preconditioned operator."""
    from .demag import build_demag_kernel
    from .linear_system import FrequencySystem
    from .preconditioners import ExactPrecond

    kernel = build_demag_kernel(mesh) if kernel is None else kernel
    out = []
    for omega in omega_grid:
        sys = FrequencySystem(float(omega), eq, params, kernel, mesh)
        c_m = cond(operator_matrix(sys, None, limit=limit))
        c_p = cond(operator_matrix(sys, ExactPrecond(sys, limit), limit=limit))
        args = (omega, params.alpha, mesh.h, params.A, params.K)
        out.append(BoundCheck(float(omega), c_m, cond_bound_M(*args), c_p, cond_bound_precond(*args)))
    return out
