from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Mesh

ANISOTROPY_FORMS = ("perpendicular", "easy_axis")


@dataclass(frozen=True, eq=False)
class MaterialParams:
    """Homogeneous material and external-field parameters (dimensionless units).

    ``u`` (easy axis) and ``ell`` (applied field) are either a single 3-vector
    or a full ``(nz, ny, nx, 3)`` field.  ``anisotropy_form`` selects the
    anisotropy field: ``"perpendicular"`` is ``K (m - (m.u) u)``, ``"easy_axis"``
    is the textbook ``K (m.u) u``.
    """

    A: float
    K: float
    alpha: float
    u: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    ell: np.ndarray = field(default_factory=lambda: np.zeros(3))
    anisotropy_form: str = "perpendicular"

    def __post_init__(self):
        if not self.A >= 0:
            raise ValueError(f"A must be >= 0, got {self.A}")
        if not self.K >= 0:
            raise ValueError(f"K must be >= 0, got {self.K}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.anisotropy_form not in ANISOTROPY_FORMS:
            raise ValueError(f"anisotropy_form must be one of {ANISOTROPY_FORMS}")
        u = np.array(self.u, dtype=float)
        ell = np.array(self.ell, dtype=float)
        if u.shape[-1] != 3 or ell.shape[-1] != 3:
            raise ValueError("u and ell must carry 3 components")
        if u.ndim == 1:
            if abs(np.linalg.norm(u) - 1.0) > 1e-12:
                raise ValueError(f"easy axis must be a unit vector, |u| = {np.linalg.norm(u)}")
        u.setflags(write=False)
        ell.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "ell", ell)
        for name in ("A", "K", "alpha"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def u_field(self, mesh: Mesh) -> np.ndarray:
        if self.u.ndim == 1:
            return mesh.uniform(self.u)
        mesh.check(self.u)
        norms = np.linalg.norm(self.u[mesh.mask], axis=-1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("easy axis field must be unit length on every interior cell")
        return mesh.restrict(self.u.copy())

    def ell_field(self, mesh: Mesh) -> np.ndarray:
        if self.ell.ndim == 1:
            return mesh.uniform(self.ell)
        mesh.check(self.ell)
        return mesh.restrict(self.ell.copy())

    def field_scale(self, h: float) -> float:
        """``A/h^2 + 1 + K``: the effective-field magnitude bound used for step sizes and estimates."""
        return self.A / h**2 + 1.0 + self.K
