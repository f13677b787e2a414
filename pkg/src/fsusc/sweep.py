"""Frequency sweeps: susceptibility tensor assembly, worker pool, resonance summary."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cgn import SolveReport, solve_cgn
from .errors import FsuscError
from .linear_system import FrequencySystem
from .preconditioners import PreconditionerKind, build_precond

log = logging.getLogger(__name__)

AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


def log_frequencies(omega_min, omega_max, count=50):
    """``count`` log-spaced frequencies, highest first."""
    if not 0 < omega_min <= omega_max:
        raise ValueError("need 0 < omega_min <= omega_max")
    return list(np.geomspace(omega_max, omega_min, count))


@dataclass
class SweepPlan:
    frequencies: list
    directions: tuple = ("x", "y", "z")
    tol: float = 5e-2
    max_iter: int = 2000
    preconditioner: PreconditionerKind = PreconditionerKind.CIRCULANT
    workers: int = 1
    chi_scale: float = 1.0
    alpha_scaled_band: bool = True

    def __post_init__(self):
        freqs = [float(w) for w in self.frequencies]
        if not freqs:
            raise ValueError("empty frequency list")
        if any(not w > 0 for w in freqs):
            raise ValueError("frequencies must be strictly positive")
        self.frequencies = sorted(freqs, reverse=True)
        bad = [d for d in self.directions if d not in AXES]
        if bad or not self.directions:
            raise ValueError(f"directions must be a non-empty subset of x, y, z; got {self.directions}")
        self.directions = tuple(d for d in "xyz" if d in self.directions)
        self.preconditioner = PreconditionerKind(self.preconditioner)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class SusceptibilityRow:
    """One frequency: ``chi[:, k]`` is the response to excitation along axis ``k``.

    Columns of directions that were not requested (or failed) are NaN.
    """

    omega: float
    chi: np.ndarray
    reports: dict = field(default_factory=dict)

    def has_column(self, direction) -> bool:
        k = "xyz".index(direction)
        return not np.any(np.isnan(self.chi[:, k]))


def _solve_row(omega, plan: SweepPlan, eq, params, kernel, mesh) -> SusceptibilityRow:
    chi = np.full((3, 3), np.nan, dtype=complex)
    reports = {}
    try:
        sys = FrequencySystem(omega, eq, params, kernel, mesh)
        precond = build_precond(sys, plan.preconditioner, plan.alpha_scaled_band)
    except FsuscError as exc:
        for d in plan.directions:
            reports[d] = SolveReport(error=str(exc))
        return SusceptibilityRow(omega, chi, reports)
    for d in plan.directions:
        k = "xyz".index(d)
        try:
            mu, report = solve_cgn(sys, sys.build_rhs(AXES[d]), precond, plan.tol, plan.max_iter)
        except FsuscError as exc:
            reports[d] = SolveReport(error=str(exc))
            continue
        reports[d] = report
        if report.converged:
            chi[:, k] = plan.chi_scale * mu[mesh.mask].sum(axis=0) / mesh.n_interior
    return SusceptibilityRow(omega, chi, reports)


def iter_sweep(plan: SweepPlan, eq, params, kernel, mesh):
    """Yield one :class:`SusceptibilityRow` per frequency, in plan order.

    ``chi[l, k] = scale * mean_i (mu_k)_i . e_l``, the volume-averaged response
    per unit excitation along ``e_k``.  Rows are independent, so the result
    does not depend on ``plan.workers``.
    """
    def job(omega):
        row = _solve_row(omega, plan, eq, params, kernel, mesh)
        log.info("omega=%g done: %s", omega, {d: r.iterations for d, r in row.reports.items()})
        return row

    if plan.workers == 1:
        for w in plan.frequencies:
            yield job(w)
        return
    pool = ThreadPoolExecutor(max_workers=plan.workers)
    try:
        yield from pool.map(job, plan.frequencies)
    finally:
        pool.shutdown(wait=True, cancel_futures=True)


def run_sweep(plan: SweepPlan, eq, params, kernel, mesh) -> list[SusceptibilityRow]:
    return list(iter_sweep(plan, eq, params, kernel, mesh))


@dataclass
class Peak:
    entry: tuple
    omega: float | None
    value: complex | None
    status: str  # "resolved", "boundary" or "no resonance"


def resonance_report(rows, entries=None) -> dict:
    """Frequency of maximal ``|Im chi|`` per tensor entry.

    The peak is refined by parabolic interpolation of ``|Im chi|`` over the
    three grid points around the discrete maximum (in ``log omega`` for
    log-spaced grids, linear otherwise); a maximum at either end of the grid
    is reported with status ``"boundary"``.
    """
    if len(rows) < 3:
        raise ValueError("resonance report needs at least 3 rows")
    rows = sorted(rows, key=lambda r: r.omega)
    omegas = np.array([r.omega for r in rows])
    chis = np.stack([r.chi for r in rows])
    if entries is None:
        entries = [(l, k) for l in range(3) for k in range(3)]
    spacing = np.diff(omegas)
    use_log = np.all(omegas > 0) and not np.allclose(spacing, spacing[0])
    axis = np.log(omegas) if use_log else omegas
    out = {}
    for l, k in entries:
        series = chis[:, l, k]
        if np.any(np.isnan(series)):
            out[(l, k)] = Peak((l, k), None, None, "no resonance")
            continue
        mag = np.abs(series.imag)
        if not np.any(mag > 0):
            out[(l, k)] = Peak((l, k), None, None, "no resonance")
            continue
        j = int(np.argmax(mag))
        if j == 0 or j == len(mag) - 1:
            out[(l, k)] = Peak((l, k), float(omegas[j]), complex(series[j]), "boundary")
            continue
        x0, x1, x2 = axis[j - 1: j + 2]
        y0, y1, y2 = mag[j - 1: j + 2]
        denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
        a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
        b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
        xp = -b / (2 * a) if a < 0 else x1
        xp = min(max(xp, x0), x2)
        omega = float(np.exp(xp)) if use_log else float(xp)
        re = np.interp(xp, axis, series.real)
        im = np.interp(xp, axis, series.imag)
        out[(l, k)] = Peak((l, k), omega, complex(re, im), "resolved")
    return out
