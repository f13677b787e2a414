"""Left preconditioners for the frequency system and the right tangent projection.

Every preconditioner exposes ``solve`` (apply the inverse), ``solve_adjoint``
and ``apply`` (the forward operator, for round-trip checks), all acting on
complex ``(nz, ny, nx, 3)`` fields, plus the flag ``project`` telling the
solver whether to right-precondition by the tangent projection.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .dense import assemble_dense, check_dense, field_operator, from_vec, to_vec
from .errors import SingularPreconditioner
from .grid import Mesh
from .linear_system import FrequencySystem


class PreconditionerKind(str, enum.Enum):
    NONE = "none"
    PROJECTION = "projection"
    EXACT = "exact"
    LAPLACIAN = "laplacian"
    CIRCULANT = "circulant"


class Identity:
    """No left preconditioning; ``project`` selects the right projection."""

    def __init__(self, project: bool):
        self.project = project
        self.kind = PreconditionerKind.PROJECTION if project else PreconditionerKind.NONE

    def solve(self, r):
        return r

    solve_adjoint = apply = solve


class ExactPrecond:
    """Dense LU of ``i w I - alpha (H_h - B)`` over the interior unknowns."""

    kind = PreconditionerKind.EXACT
    project = True

    def __init__(self, sys: FrequencySystem, dense_limit: int | None = None):
        mesh = sys.mesh
        n = sys.size
        check_dense(n, dense_limit)
        hb = assemble_dense(field_operator(sys.apply_HB, mesh), n, dtype=float, limit=dense_limit).entries
        self.matrix = 1j * sys.omega * np.eye(n) - sys.alpha * hb
        self.lu = scipy.linalg.lu_factor(self.matrix, check_finite=False)
        if np.any(np.abs(np.diag(self.lu[0])) == 0):
            raise SingularPreconditioner("singular factorization")
        self.mesh = mesh

    def solve(self, r):
        return from_vec(scipy.linalg.lu_solve(self.lu, to_vec(r, self.mesh)), self.mesh)

    def solve_adjoint(self, r):
        return from_vec(scipy.linalg.lu_solve(self.lu, to_vec(r, self.mesh), trans=2), self.mesh)

    def apply(self, r):
        return from_vec(self.matrix @ to_vec(r, self.mesh), self.mesh)


def masked_laplacian_matrix(mesh: Mesh) -> scipy.sparse.csr_matrix:
    """Scalar Neumann 7-point Laplacian over interior cells, in mask order."""
    mask = mesh.mask
    index = -np.ones(mesh.shape, dtype=np.int64)
    index[mask] = np.arange(mesh.n_interior)
    rows, cols, vals = [], [], []
    diag = np.zeros(mesh.n_interior)
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        a = index[tuple(lo)]
        b = index[tuple(hi)]
        both = (a >= 0) & (b >= 0)
        a, b = a[both], b[both]
        rows += [a, b]
        cols += [b, a]
        vals += [np.ones(len(a)), np.ones(len(a))]
        np.subtract.at(diag, a, 1.0)
        np.subtract.at(diag, b, 1.0)
    n = mesh.n_interior
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    lap = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return lap.tocsr() / mesh.h**2


def band_coefficients(sys: FrequencySystem, alpha_scaled: bool = True):
    """Scalar factors ``(s, beta)`` with the band operator ``i w - s (A lap - beta)``."""
    s = sys.alpha if alpha_scaled else 1.0
    return s, sys.eq.beta.beta


class LaplacianPrecond:
    """``i w I - alpha (A lap_h - B)``, identical on the three components, via sparse LU.

    With ``alpha_scaled=False`` the damping factor is dropped:
    ``i w I - (A lap_h - B)``.
    """

    kind = PreconditionerKind.LAPLACIAN
    project = True

    def __init__(self, sys: FrequencySystem, alpha_scaled: bool = True):
        mesh = sys.mesh
        s, beta = band_coefficients(sys, alpha_scaled)
        n = mesh.n_interior
        lap = masked_laplacian_matrix(mesh)
        self.matrix = (1j * sys.omega * scipy.sparse.identity(n)
                       - s * sys.params.A * lap
                       + s * scipy.sparse.diags(beta[mesh.mask])).tocsc()
        self.lu = scipy.sparse.linalg.splu(self.matrix)
        self.mesh = mesh

    def _cols(self, r):
        return r[self.mesh.mask]  # (n, 3)

    def _put(self, x):
        out = self.mesh.zeros(dtype=complex)
        out[self.mesh.mask] = x
        return out

    def solve(self, r):
        return self._put(self.lu.solve(np.ascontiguousarray(self._cols(r), dtype=complex)))

    def solve_adjoint(self, r):
        return self._put(self.lu.solve(np.ascontiguousarray(self._cols(r), dtype=complex), trans="H"))

    def apply(self, r):
        return self._put(self.matrix @ self._cols(r))


def chan_project_1d(t_minus, t_0, t_plus, n: int):
    """Frobenius-optimal circulant generator of a tridiagonal Toeplitz (block) matrix.

    Returns ``c`` with ``c[p]`` the block on the ``p``-th wrapped superdiagonal.
    """
    t_minus, t_0, t_plus = (np.asarray(t, dtype=complex) for t in (t_minus, t_0, t_plus))
    c = np.zeros((n,) + t_0.shape, dtype=complex)
    c[0] = t_0
    if n > 1:
        w = (n - 1) / n
        c[1] += w * t_plus
        c[n - 1] += w * t_minus
    return c


def circulant_projection_1d(T) -> np.ndarray:
    """Generator of the Frobenius projection of a square matrix onto circulants.

    ``c[p]`` is the mean of the entries ``T[l, (l + p) mod n]``, i.e. of the two
    Toeplitz diagonals that the ``p``-th wrapped diagonal covers.
    """
    T = np.asarray(T)
    n = T.shape[0]
    rows = np.arange(n)
    return np.array([T[rows, (rows + p) % n].mean() for p in range(n)])


def circulant_matrix(c) -> np.ndarray:
    """Dense circulant with ``C[i, j] = c[(j - i) mod n]``."""
    c = np.asarray(c)
    n = len(c)
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return c[idx]


def multilevel_circulant_generator(T, dims, block: int = 1) -> np.ndarray:
    """Direct 3-level Frobenius projection of a dense matrix on the full box.

    ``T`` acts on box cells in C order (``ix`` fastest) with ``block`` components
    per cell.  Returns generator blocks of shape ``(nz, ny, nx, block, block)``
    where ``c[d]`` is the mean over cells ``i`` of ``T[i, (i + d) mod n]``.
    """
    nx, ny, nz = dims
    N = nx * ny * nz
    T = np.asarray(T).reshape(N, block, N, block)
    iz, iy, ix = np.unravel_index(np.arange(N), (nz, ny, nx))
    c = np.zeros((nz, ny, nx, block, block), dtype=T.dtype)
    for dz in range(nz):
        for dy in range(ny):
            for dx in range(nx):
                j = np.ravel_multi_index(((iz + dz) % nz, (iy + dy) % ny, (ix + dx) % nx), (nz, ny, nx))
                c[dz, dy, dx] = T[np.arange(N), :, j, :].mean(axis=0)
    return c


def band_operator_box(sys: FrequencySystem, alpha_scaled: bool = True):
    """Dense band operator embedded on the full box (rows outside the mask are ``i w``).

    Scalar per cell (the operator is the same on each component); used as the
    projection oracle.
    """
    mesh = sys.mesh
    N = mesh.n_cells
    s, beta = band_coefficients(sys, alpha_scaled)
    lap = masked_laplacian_matrix(mesh).toarray()
    full = np.zeros((N, N), dtype=complex)
    idx = np.flatnonzero(mesh.mask.ravel())
    full[np.ix_(idx, idx)] = -s * sys.params.A * lap
    full[np.diag_indices(N)] += 1j * sys.omega + s * beta.ravel()
    return full


@dataclass(frozen=True, eq=False)
class CirculantPrecond:
    """3-level circulant projection of the band preconditioner, diagonalized by FFT.

    ``generator`` holds the real-space circulant blocks ``c[d]`` (``(nz, ny, nx, 3, 3)``);
    ``blocks`` the per-mode 3x3 eigen-blocks and ``inverse_blocks`` their inverses.
    """

    dims: tuple
    mesh: Mesh = field(repr=False)
    generator: np.ndarray = field(repr=False)
    blocks: np.ndarray = field(repr=False)
    inverse_blocks: np.ndarray = field(repr=False)
    kind = PreconditionerKind.CIRCULANT
    project = True

    def _spectral(self, r, blocks):
        rk = np.fft.fftn(r, axes=(0, 1, 2))
        xk = np.einsum("...ij,...j->...i", blocks, rk)
        return np.fft.ifftn(xk, axes=(0, 1, 2))

    def solve(self, r, restrict: bool = True):
        x = self._spectral(np.asarray(r, dtype=complex), self.inverse_blocks)
        return self.mesh.restrict(x) if restrict else x

    def solve_adjoint(self, r, restrict: bool = True):
        inv_h = np.conj(np.swapaxes(self.inverse_blocks, -1, -2))
        x = self._spectral(self.mesh.restrict(np.array(r, dtype=complex)), inv_h)
        return self.mesh.restrict(x) if restrict else x

    def apply(self, r):
        return self._spectral(np.asarray(r, dtype=complex), self.blocks)


def circulant_generator(sys: FrequencySystem, alpha_scaled: bool = True) -> np.ndarray:
    """Stencil-based 3-level Frobenius projection of the box-embedded band operator (scalar generator)."""
    mesh = sys.mesh
    nz, ny, nx = mesh.shape
    N = mesh.n_cells
    s, beta = band_coefficients(sys, alpha_scaled)
    mask = mesh.mask
    coupling = s * sys.params.A / mesh.h**2
    c = np.zeros((nz, ny, nx), dtype=complex)
    neighbors = np.zeros(mesh.shape)
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        both = mask[tuple(lo)] & mask[tuple(hi)]
        pairs = int(both.sum())
        neighbors[tuple(lo)] += both
        neighbors[tuple(hi)] += both
        n_axis = mesh.shape[axis]
        for step in (1, -1):
            off = [0, 0, 0]
            off[axis] = step % n_axis
            if n_axis > 1:
                c[tuple(off)] += -coupling * pairs / N
    c[0, 0, 0] += 1j * sys.omega + (coupling * neighbors.sum() + s * beta.sum()) / N
    return c


def build_circulant_precond(sys: FrequencySystem, alpha_scaled: bool = True) -> CirculantPrecond:
    mesh = sys.mesh
    c = circulant_generator(sys, alpha_scaled)
    N = mesh.n_cells
    lam = N * np.fft.ifftn(c)  # eigenvalue of the circulant for each Fourier mode
    eye = np.eye(3)
    generator = c[..., None, None] * eye
    blocks = lam[..., None, None] * eye
    sv = np.linalg.svd(blocks, compute_uv=False)
    if np.any(sv[..., -1] <= 1e-14 * sv[..., 0]) or not np.all(np.isfinite(sv)):
        raise SingularPreconditioner("singular Fourier block")
    inverse = np.linalg.inv(blocks)
    for arr in (generator, blocks, inverse):
        arr.setflags(write=False)
    return CirculantPrecond(mesh.dims, mesh, generator, blocks, inverse)


def build_precond(sys: FrequencySystem, kind, alpha_scaled: bool = True, dense_limit: int | None = None):
    kind = PreconditionerKind(kind)
    if kind is PreconditionerKind.NONE:
        return Identity(project=False)
    if kind is PreconditionerKind.PROJECTION:
        return Identity(project=True)
    if kind is PreconditionerKind.EXACT:
        return ExactPrecond(sys, dense_limit)
    if kind is PreconditionerKind.LAPLACIAN:
        return LaplacianPrecond(sys, alpha_scaled)
    return build_circulant_precond(sys, alpha_scaled)


def build_exact_precond(sys, dense_limit=None):
    return ExactPrecond(sys, dense_limit)


def build_laplacian_precond(sys, alpha_scaled=True):
    return LaplacianPrecond(sys, alpha_scaled)


def apply_precond_inverse(p, r):
    return p.solve(r)
