"""Relaxation of the Landau-Lifshitz dynamics to an equilibrium magnetization."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .demag import DemagKernel
from .errors import BlowUpError, MaxStepsExceeded
from .grid import Mesh, normalize
from .material import MaterialParams
from .operators import EquilibriumDiagonal, build_B, effective_field

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EquilibriumState:
    m: np.ndarray = field(repr=False)
    beta: EquilibriumDiagonal = field(repr=False)
    ell: np.ndarray = field(repr=False)
    residual: float
    steps_taken: int
    residual_history: list = field(default_factory=list, repr=False)


def _cross(a, b):
    return np.cross(a, b)


def ll_rhs(m, params: MaterialParams, kernel: DemagKernel, mesh: Mesh, alpha=None, heff=None):
    """``-m x Heff - alpha m x (m x Heff)`` with ``Heff = H_h(m) + ell``."""
    if alpha is None:
        alpha = params.alpha
    if heff is None:
        heff = effective_field(m, params, kernel, mesh)
    mxh = _cross(m, heff)
    return mesh.restrict(-mxh - alpha * _cross(m, mxh))


def torque_residual(m, params, kernel, mesh, heff=None) -> float:
    """``max_i |m_i x Heff_i|`` over interior cells."""
    if heff is None:
        heff = effective_field(m, params, kernel, mesh)
    t = _cross(m, heff)[mesh.mask]
    return float(np.linalg.norm(t, axis=-1).max())


def initial_dt(params: MaterialParams, h: float) -> float:
    return 0.01 / params.field_scale(h)


def relax(
    m0,
    params: MaterialParams,
    kernel: DemagKernel,
    mesh: Mesh,
    tol_eq: float = 1e-9,
    max_steps: int = 200_000,
    relax_alpha: float | None = None,
    dt0: float | None = None,
) -> EquilibriumState:
    """Integrate the dynamics with renormalized Heun steps until the torque residual is below ``tol_eq``.

    ``relax_alpha`` replaces the damping during relaxation only; equilibria do
    not depend on it.  Step control: a step moving any spin by more than 0.1 is
    rejected and ``dt`` halved; a step that raises the residual is likewise
    rejected unless ``dt`` is already at its floor ``dt0 / 16``; ``dt`` grows by
    1.25 after 10 consecutive clean steps.
    """
    if not tol_eq > 0:
        raise ValueError("tol_eq must be positive")
    mesh.check(m0)
    norms = np.linalg.norm(m0[mesh.mask], axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("initial magnetization must be unit length on interior cells")
    alpha = params.alpha if relax_alpha is None else float(relax_alpha)
    dt = initial_dt(params, mesh.h) if dt0 is None else float(dt0)
    dt_min = dt * 1e-8
    dt_floor = dt / 16

    m = normalize(m0, mesh)
    heff = effective_field(m, params, kernel, mesh)
    res = torque_residual(m, params, kernel, mesh, heff)
    history = [res]
    steps = 0
    clean = 0
    attempts = 0
    while res > tol_eq:
        if steps >= max_steps:
            raise MaxStepsExceeded(res, steps)
        attempts += 1
        if attempts > 4 * max_steps:
            raise MaxStepsExceeded(res, steps)
        k1 = ll_rhs(m, params, kernel, mesh, alpha, heff)
        pred = normalize(m + dt * k1, mesh)
        k2 = ll_rhs(pred, params, kernel, mesh, alpha)
        raw = m + 0.5 * dt * (k1 + k2)
        dev = float(np.abs(np.linalg.norm(raw[mesh.mask], axis=-1) - 1.0).max())
        if dev > 0.5:
            raise BlowUpError(dev, steps)
        m_new = normalize(raw, mesh)
        change = float(np.abs(m_new - m).max())
        if change > 0.1 and dt > dt_min:
            dt *= 0.5
            clean = 0
            continue
        heff_new = effective_field(m_new, params, kernel, mesh)
        res_new = torque_residual(m_new, params, kernel, mesh, heff_new)
        if res_new > res and dt > dt_floor:
            # retry smaller; at dt_floor the step is taken anyway since the
            # torque legitimately grows while leaving a saddle
            dt = max(0.5 * dt, dt_floor)
            clean = 0
            continue
        m, heff = m_new, heff_new
        steps += 1
        if res_new > res:
            clean = 0
        else:
            clean += 1
            if clean >= 10:
                dt *= 1.25
                clean = 0
        res = res_new
        history.append(res)
    log.debug("relaxed in %d steps, residual %.3e", steps, res)
    beta = build_B(m, params, kernel, mesh, tol_eq=max(tol_eq, res))
    return EquilibriumState(m, beta, params.ell_field(mesh), res, steps, history)


def state_from_m(m, params, kernel, mesh, tol_eq=1e-9) -> EquilibriumState:
    """Wrap a given magnetization (checked against ``tol_eq``) as an equilibrium state."""
    m = normalize(m, mesh)
    res = torque_residual(m, params, kernel, mesh)
    beta = build_B(m, params, kernel, mesh, tol_eq=tol_eq)
    return EquilibriumState(m, beta, params.ell_field(mesh), res, 0, [res])


def with_beta(state: EquilibriumState, beta: EquilibriumDiagonal) -> EquilibriumState:
    return replace(state, beta=beta)
