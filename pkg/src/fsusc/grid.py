"""Regular cubic mesh over a bounding box, interior-cell mask and cell-wise vector fields.

Fields are plain numpy arrays of shape ``(nz, ny, nx, 3)`` (real or complex).
C-order flattening of such an array gives the linear cell index
``ix + nx * (iy + ny * iz)`` followed by the component, which is the ordering
used by every dense assembly in :mod:`fsusc.dense`.  Cells outside the mask
always hold the zero vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDomainError, MeshMismatchError


@dataclass(frozen=True, eq=False)
class Mesh:
    dims: tuple[int, int, int]
    h: float
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        nx, ny, nz = self.dims
        if min(nx, ny, nz) < 1:
            raise ValueError(f"mesh dims must be positive, got {self.dims}")
        if not self.h > 0:
            raise ValueError(f"cell size must be positive, got {self.h}")
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.shape:
            raise ValueError(f"mask shape {mask.shape} does not match {self.shape}")
        if not mask.any():
            raise EmptyDomainError()
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "h", float(self.h))

    @property
    def shape(self) -> tuple[int, int, int]:
        """Array shape of a scalar field, ``(nz, ny, nx)``."""
        nx, ny, nz = self.dims
        return (nz, ny, nx)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_interior(self) -> int:
        return int(self.mask.sum())

    @property
    def cell_volume(self) -> float:
        return self.h**3

    def zeros(self, dtype=float) -> np.ndarray:
        return np.zeros(self.shape + (3,), dtype=dtype)

    def uniform(self, vec, dtype=float) -> np.ndarray:
        """Constant vector on interior cells, zero elsewhere."""
        out = self.zeros(dtype)
        out[self.mask] = np.asarray(vec, dtype=dtype)
        return out

    def restrict(self, f: np.ndarray) -> np.ndarray:
        """Zero ``f`` outside the mask (in place) and return it."""
        f[~self.mask] = 0
        return f

    def check(self, f: np.ndarray) -> None:
        if f.shape != self.shape + (3,):
            raise MeshMismatchError(f"field shape {f.shape} does not match mesh {self.shape + (3,)}")

    def cell_centers(self) -> np.ndarray:
        """Cell-center coordinates in units of cells, shape ``(nz, ny, nx, 3)`` ordered (x, y, z)."""
        nx, ny, nz = self.dims
        iz, iy, ix = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
        return np.stack([ix + 0.5, iy + 0.5, iz + 0.5], axis=-1)

    def key(self) -> dict:
        """Plain description used for hashing and checkpoints."""
        return {
            "dims": list(self.dims),
            "h": self.h,
            "mask_sha": _mask_digest(self.mask),
        }


def _mask_digest(mask: np.ndarray) -> str:
    import hashlib

    return hashlib.sha256(np.packbits(mask.ravel()).tobytes()).hexdigest()


def make_mesh(dims, h: float, shape_spec="box") -> Mesh:
    """Build a mesh over the box ``dims`` with cell edge ``h``.

    ``shape_spec`` is ``"box"`` or ``("cylinder_z", radius)`` with the radius in
    cells; the cylinder axis runs through the box center along z.  A cell is
    interior when its center lies inside the shape.
    """
    nx, ny, nz = (int(d) for d in dims)
    if min(nx, ny, nz) < 1:
        raise ValueError(f"mesh dims must be positive, got {dims}")
    kind, arg = _parse_shape(shape_spec)
    if kind == "box":
        mask = np.ones((nz, ny, nx), dtype=bool)
    else:
        radius = float(arg)
        x0, y0 = nx / 2.0, ny / 2.0
        cy = np.arange(ny) + 0.5
        cx = np.arange(nx) + 0.5
        disk = (cx[None, :] - x0) ** 2 + (cy[:, None] - y0) ** 2 <= radius**2
        mask = np.broadcast_to(disk, (nz, ny, nx)).copy()
    return Mesh((nx, ny, nz), h, mask)


def _parse_shape(shape_spec):
    if shape_spec is None or shape_spec == "box":
        return "box", None
    if isinstance(shape_spec, dict):
        kind = shape_spec.get("kind")
        if kind == "box":
            return "box", None
        if kind == "cylinder_z":
            return "cylinder_z", shape_spec["radius"]
    elif isinstance(shape_spec, (tuple, list)) and len(shape_spec) == 2 and shape_spec[0] == "cylinder_z":
        return "cylinder_z", shape_spec[1]
    raise ValueError(f"unknown shape spec {shape_spec!r}")


def same_mesh(a: Mesh, b: Mesh) -> bool:
    return a is b or (a.dims == b.dims and a.h == b.h and np.array_equal(a.mask, b.mask))


def dot(mesh: Mesh, a: np.ndarray, b: np.ndarray) -> complex | float:
    """L2 inner product ``h^3 sum_i a_i . conj(b_i)`` over interior cells."""
    mesh.check(a)
    mesh.check(b)
    m = mesh.mask
    s = np.vdot(b[m], a[m])  # vdot conjugates its first argument
    if not (np.iscomplexobj(a) or np.iscomplexobj(b)):
        s = float(np.real(s))
    return mesh.cell_volume * s


def norm(mesh: Mesh, a: np.ndarray) -> float:
    return float(np.sqrt(abs(dot(mesh, a, a))))


def cell_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cell-wise bilinear ``a_i . b_i`` (no conjugation)."""
    return np.einsum("...c,...c->...", a, b)


def normalize(m: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Rescale interior vectors to unit length; zero outside the mask."""
    out = np.zeros_like(m)
    v = m[mesh.mask]
    out[mesh.mask] = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return out
