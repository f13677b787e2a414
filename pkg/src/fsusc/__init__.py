"""Frequency-domain micromagnetic susceptibility: equilibrium relaxation, preconditioned CGNR solves and sweeps."""
from .cgn import SolveReport, cgnr, solve_cgn
from .demag import DemagKernel, apply_demag, build_demag_kernel
from .equilibrium import EquilibriumState, relax
from .errors import FsuscError
from .grid import Mesh, make_mesh
from .linear_system import FrequencySystem
from .material import MaterialParams
from .operators import apply_H, build_B
from .preconditioners import PreconditionerKind, build_precond
from .sweep import SweepPlan, resonance_report, run_sweep

__all__ = [
    "DemagKernel", "EquilibriumState", "FrequencySystem", "FsuscError", "MaterialParams", "Mesh",
    "PreconditionerKind", "SolveReport", "SweepPlan", "apply_H", "apply_demag", "build_B",
    "build_demag_kernel", "build_precond", "cgnr", "make_mesh", "relax", "resonance_report",
    "run_sweep", "solve_cgn",
]
__version__ = "0.1.0"
