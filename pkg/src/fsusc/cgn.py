"""Conjugate gradient on the normal equations (CGNR) for the preconditioned frequency system."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CGNBreakdown
from .linear_system import FrequencySystem


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``residual_history`` holds ``|r_k| / |r_0|`` for the preconditioned residual
    ``r = b - A x`` (the quantity CGNR minimizes, hence non-increasing);
    ``normal_residual_history`` holds ``|A^H r_k| / |A^H r_0|`` and
    ``true_residual_history`` holds ``|M mu_k - rhs| / |rhs|``, the stopping quantity.
    """

    iterations: int = 0
    residual_history: list = field(default_factory=list)
    normal_residual_history: list = field(default_factory=list)
    true_residual_history: list = field(default_factory=list)
    converged: bool = False
    final_true_residual: float = 0.0
    wall_time: float = 0.0
    error: str | None = None


def _norm(x):
    return float(np.sqrt(np.vdot(x, x).real))


def cgnr(apply_A, apply_AH, b, tol=1e-5, max_iter=1000, split=None, true_residual=None, check_every=10):
    """CGNR for ``A x = b``.

    Without ``split`` the stopping test is ``|r_k| <= tol |r_0|``.  With
    ``split = (left, raw, rhs)``, where ``A = left o raw`` and ``b = left(rhs)``,
    the unpreconditioned residual ``rhs - raw(x)`` is updated alongside at no
    extra operator cost and the test is made on it instead; the optional
    ``true_residual(x)`` recomputes it explicitly every ``check_every``
    iterations and before accepting convergence.
    """
    t0 = time.perf_counter()
    report = SolveReport()
    x = np.zeros_like(b, dtype=complex)
    r = np.array(b, dtype=complex)
    r0 = _norm(r)
    if r0 == 0.0:
        report.converged = True
        report.residual_history = [0.0]
        report.normal_residual_history = [0.0]
        report.true_residual_history = [0.0]
        report.wall_time = time.perf_counter() - t0
        return x, report
    tracked = split is not None
    if tracked:
        left, raw, rhs = split
        t = np.array(rhs, dtype=complex)
        t0_norm = _norm(t)
    s = apply_AH(r)
    gamma = float(np.vdot(s, s).real)
    s0 = np.sqrt(gamma)
    p = s.copy()
    report.residual_history.append(1.0)
    report.normal_residual_history.append(1.0)
    report.true_residual_history.append(1.0)
    k = 0
    while k < max_iter:
        if tracked:
            w = raw(p)
            q = left(w)
        else:
            q = apply_A(p)
        qq = float(np.vdot(q, q).real)
        pp = float(np.vdot(p, p).real)
        if qq <= np.finfo(float).tiny or qq <= 1e-300 * pp:
            report.iterations = k
            report.wall_time = time.perf_counter() - t0
            raise CGNBreakdown(f"breakdown at iteration {k}: |A p|^2 = {qq:.3e} vs |p|^2 = {pp:.3e}")
        a = gamma / qq
        x += a * p
        r -= a * q
        k += 1
        rel = _norm(r) / r0
        report.residual_history.append(rel)
        if tracked:
            t -= a * w
            true_rel = _norm(t) / t0_norm
        else:
            true_rel = rel
        if true_residual is not None and (true_rel <= tol or k % check_every == 0):
            true_rel = true_residual(x)
        report.true_residual_history.append(true_rel)
        s = apply_AH(r)
        gamma_new = float(np.vdot(s, s).real)
        report.normal_residual_history.append(np.sqrt(gamma_new) / s0)
        if true_rel <= tol:
            report.converged = True
            break
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
    report.iterations = k
    if not report.converged:
        report.error = "max_iter exceeded"
    report.wall_time = time.perf_counter() - t0
    return x, report


def preconditioned_operator(sys: FrequencySystem, precond):
    """``(R, R^H)`` with ``R = M P_right``; the left factor is ``precond``."""
    if precond.project:
        def right(u):
            return sys.project(u)
    else:
        def right(u):
            return u

    def apply_raw(u):
        return sys.apply_M(right(u))

    def apply_raw_adjoint(v):
        return right(sys.apply_M_adjoint(v))

    return apply_raw, apply_raw_adjoint


def solve_cgn(sys: FrequencySystem, rhs, precond, tol=1e-5, max_iter=1000):
    """Solve ``M mu = rhs`` and return ``(mu, report)`` with ``mu`` in the tangent space.

    Runs CGNR on ``P^{-1} M P_right z = P^{-1} rhs`` and stops on the true
    relative residual ``|M mu - rhs| / |rhs| <= tol``.
    """
    t0 = time.perf_counter()
    rhs = sys.project(np.asarray(rhs, dtype=complex))
    rhs_norm = _norm(rhs)
    if rhs_norm == 0.0:
        report = SolveReport(converged=True, residual_history=[0.0], normal_residual_history=[0.0],
                             true_residual_history=[0.0])
        report.wall_time = time.perf_counter() - t0
        return np.zeros_like(rhs), report
    raw, raw_h = preconditioned_operator(sys, precond)

    def true_residual(z):
        return _norm(sys.apply_M(sys.project(z)) - rhs) / rhs_norm

    z, report = cgnr(
        lambda u: precond.solve(raw(u)),
        lambda v: raw_h(precond.solve_adjoint(v)),
        precond.solve(rhs), tol, max_iter,
        split=(precond.solve, raw, rhs), true_residual=true_residual,
    )
    mu = sys.project(z)
    report.final_true_residual = _norm(sys.apply_M(mu) - rhs) / rhs_norm
    report.wall_time = time.perf_counter() - t0
    return mu, report
