"""Run configuration, binary equilibrium checkpoints and CSV/JSON result files."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
import zlib
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import CheckpointError, ConfigError
from .grid import Mesh, make_mesh
from .material import MaterialParams


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BoxShape(_Strict):
    kind: Literal["box"] = "box"


class CylinderShape(_Strict):
    kind: Literal["cylinder_z"]
    radius: float = Field(gt=0, description="radius in cells, axis through the box center")


Vec3 = tuple[float, float, float]


class MeshConfig(_Strict):
    dims: tuple[int, int, int]
    h: float = Field(gt=0)
    shape: Union[BoxShape, CylinderShape] = Field(default_factory=BoxShape, discriminator="kind")

    @field_validator("dims")
    @classmethod
    def _positive(cls, v):
        if min(v) < 1:
            raise ValueError("dims must be positive")
        return v


class MaterialConfig(_Strict):
    A: float = Field(ge=0)
    K: float = Field(ge=0)
    alpha: float = Field(gt=0)
    u: Vec3 = (0.0, 0.0, 1.0)
    ell: Vec3 = (0.0, 0.0, 0.0)
    anisotropy_form: Literal["perpendicular", "easy_axis"] = "perpendicular"

    @field_validator("u")
    @classmethod
    def _unit(cls, v):
        if abs(math.sqrt(sum(c * c for c in v)) - 1.0) > 1e-12:
            raise ValueError("easy axis must be a unit vector")
        return v


class EquilibriumConfig(_Strict):
    m0: Vec3 = (0.0, 0.0, 1.0)
    tol_eq: float = Field(default=1e-9, gt=0)
    max_steps: int = Field(default=200_000, gt=0)
    relax_alpha: Optional[float] = Field(default=None, gt=0)

    @field_validator("m0")
    @classmethod
    def _nonzero(cls, v):
        if not any(v):
            raise ValueError("m0 must be nonzero")
        return v


class SweepConfig(_Strict):
    omega_min: Optional[float] = Field(default=None, gt=0)
    omega_max: Optional[float] = Field(default=None, gt=0)
    count: int = Field(default=50, ge=1)
    frequencies: Optional[list[float]] = None
    directions: list[Literal["x", "y", "z"]] = ["x", "y", "z"]
    tol: float = Field(default=1e-5, gt=0)
    max_iter: int = Field(default=2000, gt=0)
    preconditioner: Literal["none", "projection", "exact", "laplacian", "circulant"] = "circulant"
    workers: int = Field(default=1, ge=1)
    chi_scale: float = 1.0
    alpha_scaled_band: bool = True
    svd_omega: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _grid(self):
        if self.frequencies is None and (self.omega_min is None or self.omega_max is None):
            raise ValueError("give either frequencies or omega_min and omega_max")
        if self.frequencies is not None and not self.frequencies:
            raise ValueError("empty frequency list")
        if self.frequencies is not None and any(not w > 0 for w in self.frequencies):
            raise ValueError("frequencies must be strictly positive")
        if self.omega_min is not None and self.omega_max is not None and self.omega_min > self.omega_max:
            raise ValueError("omega_min must not exceed omega_max")
        if not self.directions:
            raise ValueError("directions must not be empty")
        return self

    def frequency_list(self) -> list[float]:
        if self.frequencies is not None:
            return sorted((float(w) for w in self.frequencies), reverse=True)
        if self.count == 1:
            return [float(self.omega_max)]
        return [float(w) for w in np.geomspace(self.omega_max, self.omega_min, self.count)]


class OutputConfig(_Strict):
    dir: str = "out"
    checkpoint: str = "equilibrium.fsusc"


class RunConfig(_Strict):
    mesh: MeshConfig
    material: MaterialConfig
    equilibrium: EquilibriumConfig = Field(default_factory=EquilibriumConfig)
    sweep: Optional[SweepConfig] = None
    output: OutputConfig = Field(default_factory=OutputConfig)

    def build_mesh(self) -> Mesh:
        shape = self.mesh.shape
        shape_arg = "box" if shape.kind == "box" else ("cylinder_z", shape.radius)
        return make_mesh(self.mesh.dims, self.mesh.h, shape_arg)

    def build_params(self) -> MaterialParams:
        mat = self.material
        return MaterialParams(mat.A, mat.K, mat.alpha, np.array(mat.u), np.array(mat.ell), mat.anisotropy_form)

    def build_m0(self, mesh: Mesh) -> np.ndarray:
        v = np.array(self.equilibrium.m0, dtype=float)
        return mesh.uniform(v / np.linalg.norm(v))

    def param_hash(self) -> bytes:
        """SHA-256 over the sections that determine the equilibrium."""
        payload = self.model_dump(mode="json", include={"mesh", "material", "equilibrium"})
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).digest()


def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True)


# Checkpoint layout (little endian):
#   b"FSUSC1"
#   header: nx, ny, nz (uint32), h (float64), param hash (32 bytes),
#           residual (float64), steps (uint64)
#   m: nz*ny*nx*3 float64, C order over (iz, iy, ix, component)
#   beta: nz*ny*nx float64
#   CRC32 of all preceding bytes (uint32)
MAGIC = b"FSUSC1"
_HEADER = struct.Struct("<3Id32sdQ")


def write_checkpoint(path, mesh: Mesh, m: np.ndarray, beta: np.ndarray, param_hash: bytes,
                     residual: float, steps: int) -> None:
    body = bytearray(MAGIC)
    body += _HEADER.pack(*mesh.dims, mesh.h, param_hash, float(residual), int(steps))
    body += np.ascontiguousarray(m, dtype="<f8").tobytes()
    body += np.ascontiguousarray(beta, dtype="<f8").tobytes()
    body += struct.pack("<I", zlib.crc32(body))
    Path(path).write_bytes(bytes(body))


def read_checkpoint(path) -> dict:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc.strerror}") from exc
    if len(data) < len(MAGIC) + _HEADER.size + 4 or not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise CheckpointError(f"{path}: checksum mismatch (corrupted checkpoint)")
    nx, ny, nz, h, phash, residual, steps = _HEADER.unpack_from(body, len(MAGIC))
    n = nx * ny * nz
    off = len(MAGIC) + _HEADER.size
    if len(body) != off + 8 * 4 * n:
        raise CheckpointError(f"{path}: unexpected payload size")
    m = np.frombuffer(body, dtype="<f8", count=3 * n, offset=off).reshape(nz, ny, nx, 3).copy()
    beta = np.frombuffer(body, dtype="<f8", count=n, offset=off + 24 * n).reshape(nz, ny, nx).copy()
    return {"dims": (nx, ny, nz), "h": h, "param_hash": phash, "residual": residual,
            "steps": steps, "m": m, "beta": beta}


def fmt(x) -> str:
    """Round-trip float formatting (17 significant digits)."""
    return format(float(x), ".17g")


def write_iteration_table(path, rows, directions) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["omega"]
        for d in directions:
            header += [f"iterations_{d}", f"error_{d}"]
        w.writerow(header)
        for row in rows:
            w.writerow(iteration_cells(row, directions))


def iteration_cells(row, directions) -> list:
    cells = [fmt(row.omega)]
    for d in directions:
        rep = row.reports.get(d)
        if rep is None:
            cells += ["", ""]
        else:
            cells += [str(rep.iterations), fmt(rep.final_true_residual) if rep.converged else "nan"]
    return cells


CHI_COLUMNS = [f"chi_{a}{b}_{part}" for a in "xyz" for b in "xyz" for part in ("re", "im")]


def chi_cells(row) -> list:
    cells = [fmt(row.omega)]
    for l in range(3):
        for k in range(3):
            z = row.chi[l, k]
            cells += [fmt(z.real), fmt(z.imag)]
    return cells


def write_chi_table(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega"] + CHI_COLUMNS)
        for row in rows:
            w.writerow(chi_cells(row))


def write_residual_histories(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", "direction", "iteration", "residual", "true_residual", "normal_residual"])
        for row in rows:
            for d, rep in row.reports.items():
                for i, (a, b, c) in enumerate(zip(rep.residual_history, rep.true_residual_history,
                                                  rep.normal_residual_history)):
                    w.writerow([fmt(row.omega), d, i, fmt(a), fmt(b), fmt(c)])


def write_sigma(path, sigma) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "sigma"])
        for i, s in enumerate(sigma):
            w.writerow([i, fmt(s)])


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")
