"""Demagnetizing field of piecewise-constant magnetization on a regular cubic grid.

The interaction tensor between two cubes at integer offset ``d`` is the
cell-averaged field of a uniformly magnetized cube (Newell, Williams and
Dunlop, JGR 1993), so that the discrete operator is the Galerkin projection
of the continuous one.  The field is ``H_d(m)_i = -sum_j N(i - j) m_j``; we
store ``-N`` so the kernel directly maps magnetization to field.

The kernel is scale invariant, so it is computed for unit cells.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .grid import Mesh

# (row, col) for the six independent tensor entries, in storage order
COMPONENTS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def _asinh_ratio(num, a2, b2):
    den = np.sqrt(a2 + b2)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, np.arcsinh(num / np.where(den > 0, den, 1.0)), 0.0)


def _atan_ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den != 0, np.arctan(num / np.where(den != 0, den, 1.0)), 0.0)


def newell_f(x, y, z):
    x, y, z = np.abs(x), np.abs(y), np.abs(z)
    x2, y2, z2 = x * x, y * y, z * z
    r = np.sqrt(x2 + y2 + z2)
    out = (2 * x2 - y2 - z2) * r / 6.0
    out = out + y / 2.0 * (z2 - x2) * _asinh_ratio(y, x2, z2)
    out = out + z / 2.0 * (y2 - x2) * _asinh_ratio(z, x2, y2)
    out = out - x * y * z * _atan_ratio(y * z, x * r)
    return out


def newell_g(x, y, z):
    z = np.abs(z)
    x2, y2, z2 = x * x, y * y, z * z
    r = np.sqrt(x2 + y2 + z2)
    out = -x * y * r / 3.0
    out = out + x * y * z * _asinh_ratio(z, x2, y2)
    out = out + y / 6.0 * (3 * z2 - y2) * _asinh_ratio(x, y2, z2)
    out = out + x / 6.0 * (3 * z2 - x2) * _asinh_ratio(y, x2, z2)
    out = out - z**3 / 6.0 * _atan_ratio(x * y, z * r)
    out = out - z * y2 / 2.0 * _atan_ratio(x * z, y * r)
    out = out - z * x2 / 2.0 * _atan_ratio(y * z, x * r)
    return out


_STENCIL = [(a, b, c, w) for (a, wa), (b, wb), (c, wc) in product(
    [(-1, -1.0), (0, 2.0), (1, -1.0)], repeat=3) for w in [wa * wb * wc]]


def _second_difference(fn, x, y, z):
    out = np.zeros(np.broadcast(x, y, z).shape)
    for a, b, c, w in _STENCIL:
        out += w * fn(x + a, y + b, z + c)
    return out


def demag_tensor(dx, dy, dz) -> np.ndarray:
    """Field kernel ``-N`` between unit cubes at integer offsets.

    Returns shape ``offsets.shape + (3, 3)``; the self term is ``-I/3``.
    """
    dx, dy, dz = (np.asarray(v, dtype=float) for v in np.broadcast_arrays(dx, dy, dz))
    scale = -1.0 / (4 * np.pi)
    nxx = scale * _second_difference(newell_f, dx, dy, dz)
    nyy = scale * _second_difference(newell_f, dy, dx, dz)
    nzz = scale * _second_difference(newell_f, dz, dy, dx)
    nxy = scale * _second_difference(newell_g, dx, dy, dz)
    nxz = scale * _second_difference(newell_g, dx, dz, dy)
    nyz = scale * _second_difference(newell_g, dy, dz, dx)
    # off-diagonal entries are odd in both of their axes, hence exactly zero
    # when either offset vanishes
    nxy = np.where((dx == 0) | (dy == 0), 0.0, nxy)
    nxz = np.where((dx == 0) | (dz == 0), 0.0, nxz)
    nyz = np.where((dy == 0) | (dz == 0), 0.0, nyz)
    out = np.empty(dx.shape + (3, 3))
    for (r, c), v in zip(COMPONENTS, (nxx, nyy, nzz, nxy, nxz, nyz)):
        out[..., r, c] = v
        out[..., c, r] = v
    return out


def _offset_table(dims):
    """Tensor for all offsets ``0 <= d < n`` per axis, shape (nz, ny, nx, 3, 3)."""
    nx, ny, nz = dims
    iz, iy, ix = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    return demag_tensor(ix, iy, iz)


@dataclass(frozen=True, eq=False)
class DemagKernel:
    """Field kernel ``-N`` embedded in a ``2n``-periodic array, with its real FFT.

    ``entries`` has shape ``(6, 2nz, 2ny, 2nx)`` ordered as :data:`COMPONENTS`;
    offset ``d`` sits at index ``d mod 2n``.
    """

    dims: tuple[int, int, int]
    entries: np.ndarray = field(repr=False)
    spectrum: np.ndarray = field(repr=False)

    @property
    def padded_shape(self):
        nx, ny, nz = self.dims
        return (2 * nz, 2 * ny, 2 * nx)

    def tensor_at(self, offset) -> np.ndarray:
        """3x3 field kernel for the integer offset ``(dx, dy, dz)``."""
        pz, py, px = self.padded_shape
        dx, dy, dz = offset
        out = np.empty((3, 3))
        for k, (r, c) in enumerate(COMPONENTS):
            v = self.entries[k, dz % pz, dy % py, dx % px]
            out[r, c] = out[c, r] = v
        return out


def build_demag_kernel(mesh: Mesh) -> DemagKernel:
    nx, ny, nz = mesh.dims
    base = _offset_table(mesh.dims)
    entries = np.zeros((6, 2 * nz, 2 * ny, 2 * nx))
    # Diagonal entries are even in every axis; off-diagonal (r, c) entries are
    # odd in axes r and c and even in the third.  Filling from |d| keeps
    # N(d) = N(-d) exact.
    for sz, sy, sx in product((1, -1), repeat=3):
        zi = (sz * np.arange(nz)) % (2 * nz)
        yi = (sy * np.arange(ny)) % (2 * ny)
        xi = (sx * np.arange(nx)) % (2 * nx)
        signs = (sx, sy, sz)
        for k, (r, c) in enumerate(COMPONENTS):
            parity = 1.0 if r == c else signs[r] * signs[c]
            entries[k][np.ix_(zi, yi, xi)] = parity * base[..., r, c]
    entries.setflags(write=False)
    spectrum = np.fft.rfftn(entries, axes=(1, 2, 3))
    spectrum.setflags(write=False)
    return DemagKernel(mesh.dims, entries, spectrum)


def apply_demag(kernel: DemagKernel, m: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Demagnetizing field of ``m`` (real or complex), zeroed outside the mask."""
    mesh.check(m)
    if tuple(kernel.dims) != mesh.dims:
        raise ValueError("kernel was built for a different mesh")
    if np.iscomplexobj(m):
        return apply_demag(kernel, m.real.copy(), mesh) + 1j * apply_demag(kernel, m.imag.copy(), mesh)
    nz, ny, nx = mesh.shape
    src = np.where(mesh.mask[..., None], m, 0.0)
    padded = np.zeros((3,) + kernel.padded_shape)
    padded[:, :nz, :ny, :nx] = np.moveaxis(src, -1, 0)
    mk = np.fft.rfftn(padded, axes=(1, 2, 3))
    s = kernel.spectrum
    xx, yy, zz, xy, xz, yz = s
    hk = np.stack([
        xx * mk[0] + xy * mk[1] + xz * mk[2],
        xy * mk[0] + yy * mk[1] + yz * mk[2],
        xz * mk[0] + yz * mk[1] + zz * mk[2],
    ])
    hp = np.fft.irfftn(hk, s=kernel.padded_shape, axes=(1, 2, 3))
    out = np.moveaxis(hp[:, :nz, :ny, :nx], 0, -1).copy()
    return mesh.restrict(out)
