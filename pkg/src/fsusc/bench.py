"""The 4x4x4 benchmark: iteration counts, preconditioner ordering and singular-value clustering."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cgn import solve_cgn
from .demag import build_demag_kernel
from .dense import clustered_fraction, operator_matrix, singular_values
from .equilibrium import relax
from .grid import make_mesh
from .linear_system import FrequencySystem
from .material import MaterialParams
from .preconditioners import PreconditionerKind, build_precond

BENCH_DIMS = (4, 4, 4)
BENCH_EDGE = 1e-6
BENCH_A = 0.88e-10
BENCH_K = 0.57e-2
BENCH_ALPHA = 0.5
BENCH_TOL = 1e-5
OMEGA_MIN = 0.452e3
OMEGA_MAX = 0.452e5

KINDS = ("none", "projection", "exact", "laplacian", "circulant")

# (lo, hi) iteration bands per kind and frequency; None means "no lower bound"
ITERATION_BANDS = {
    "none": {OMEGA_MIN: (40, 85), OMEGA_MAX: (35, 70)},
    "projection": {OMEGA_MIN: (35, 70), OMEGA_MAX: (20, 40)},
    "laplacian": {OMEGA_MIN: (None, 15), OMEGA_MAX: (None, 15)},
    "circulant": {OMEGA_MIN: (None, 45), OMEGA_MAX: (None, 40)},
}
COND_BAND = (3000.0, 15000.0)


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


@dataclass
class BenchSetup:
    mesh: object
    params: MaterialParams
    kernel: object
    eq: object
    relax_time: float


@dataclass
class BenchRuns:
    iterations: dict = field(default_factory=dict)  # (kind, omega) -> iterations
    converged: dict = field(default_factory=dict)
    cond_min: float = float("nan")
    cond_max: float = float("nan")
    wall_time: float = 0.0


def bench_setup() -> BenchSetup:
    t0 = time.perf_counter()
    mesh = make_mesh(BENCH_DIMS, BENCH_EDGE / BENCH_DIMS[0])
    params = MaterialParams(BENCH_A, BENCH_K, BENCH_ALPHA)
    kernel = build_demag_kernel(mesh)
    eq = relax(mesh.uniform([0.0, 0.0, 1.0]), params, kernel, mesh)
    return BenchSetup(mesh, params, kernel, eq, time.perf_counter() - t0)


def run_bench(setup: BenchSetup) -> BenchRuns:
    t0 = time.perf_counter()
    runs = BenchRuns()
    for omega in (OMEGA_MIN, OMEGA_MAX):
        sys = FrequencySystem(omega, setup.eq, setup.params, setup.kernel, setup.mesh)
        rhs = sys.build_rhs((1.0, 0.0, 0.0))
        for kind in KINDS:
            _, rep = solve_cgn(sys, rhs, build_precond(sys, kind), BENCH_TOL, 2000)
            runs.iterations[kind, omega] = rep.iterations
            runs.converged[kind, omega] = rep.converged
        s = singular_values(operator_matrix(sys))
        if omega == OMEGA_MIN:
            runs.cond_min = float(s[0] / s[-1])
        else:
            runs.cond_max = float(s[0] / s[-1])
    runs.wall_time = time.perf_counter() - t0 + setup.relax_time
    return runs


def _in_band(value, band) -> bool:
    lo, hi = band
    return (lo is None or value >= lo) and value <= hi


def iteration_criteria(runs: BenchRuns) -> list[CriterionResult]:
    out = []
    for label, kind in (("1a", "none"), ("1b", "projection"), ("1c", "laplacian"), ("1d", "circulant")):
        ok = True
        parts = []
        for omega in (OMEGA_MIN, OMEGA_MAX):
            it = runs.iterations[kind, omega]
            band = ITERATION_BANDS[kind][omega]
            ok &= runs.converged[kind, omega] and _in_band(it, band)
            lo = "" if band[0] is None else f"{band[0]}.."
            parts.append(f"w={omega:g}: {it} (band {lo}{band[1]})")
        out.append(CriterionResult(f"{label} {kind} iterations", ok, "; ".join(parts)))
    lo, hi = COND_BAND
    out.append(CriterionResult(
        "1e restricted cond(M) at w_min", lo <= runs.cond_min <= hi,
        f"{runs.cond_min:.4g} (band {lo:g}..{hi:g}; at w_max {runs.cond_max:.4g})",
    ))
    out.append(CriterionResult("1 runtime", runs.wall_time < 30.0, f"{runs.wall_time:.1f} s (limit 30 s)"))
    return out


def ordering_ok(counts: list[int], slack: float = 0.2) -> bool:
    """Non-decreasing up to at most one adjacent inversion of at most ``slack`` relative size."""
    inversions = 0
    for a, b in zip(counts, counts[1:]):
        if a <= b:
            continue
        inversions += 1
        if a > (1 + slack) * b:
            return False
    return inversions <= 1


def ordering_criterion(runs: BenchRuns) -> CriterionResult:
    order = ("exact", "laplacian", "circulant", "projection", "none")
    counts = [runs.iterations[k, OMEGA_MIN] for k in order]
    desc = " <= ".join(f"{k}={c}" for k, c in zip(order, counts))
    return CriterionResult("2 preconditioner ordering at w_min", ordering_ok(counts), desc)


def clustering_fractions(setup: BenchSetup, omega: float = OMEGA_MIN) -> dict:
    sys = FrequencySystem(omega, setup.eq, setup.params, setup.kernel, setup.mesh)
    out = {}
    for kind in ("none", "projection", "circulant", "laplacian"):
        precond = None if kind == "none" else build_precond(sys, kind)
        out[kind] = clustered_fraction(singular_values(operator_matrix(sys, precond)))
    return out


def clustering_criterion(fractions: dict) -> CriterionResult:
    seq = [fractions["none"], fractions["circulant"], fractions["laplacian"]]
    ok = seq[0] < seq[1] < seq[2]
    desc = ", ".join(f"{k}={v:.3f}" for k, v in fractions.items())
    return CriterionResult("9 clustered fraction none < circulant < laplacian", ok, desc)


def run_all() -> list[CriterionResult]:
    setup = bench_setup()
    runs = run_bench(setup)
    results = iteration_criteria(runs)
    results.append(ordering_criterion(runs))
    results.append(clustering_criterion(clustering_fractions(setup)))
    return results


def format_table(results) -> str:
    return "\n".join(r.line() for r in results)
