"""Command-line entry point: ``fsusc {relax,sweep,svd,bench}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import bench, io
from .demag import build_demag_kernel
from .dense import operator_matrix, singular_values
from .equilibrium import EquilibriumState, relax
from .errors import CheckpointError, ConfigError, FsuscError
from .linear_system import FrequencySystem
from .operators import EquilibriumDiagonal
from .preconditioners import PreconditionerKind, build_precond
from .sweep import SweepPlan, iter_sweep

log = logging.getLogger("fsusc")

EXIT_USAGE = 2
KINDS = [k.value for k in PreconditionerKind]


def _out_dir(args, cfg) -> Path:
    out = Path(args.out if args.out else cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _checkpoint_path(args, cfg, out: Path) -> Path:
    return Path(args.checkpoint) if args.checkpoint else out / cfg.output.checkpoint


def load_equilibrium(path, cfg, mesh, params):
    """Read a checkpoint and check it belongs to ``cfg``."""
    data = io.read_checkpoint(path)
    if data["param_hash"] != cfg.param_hash() or data["dims"] != mesh.dims or data["h"] != mesh.h:
        raise CheckpointError(f"stale checkpoint {path}: it was written for a different mesh or material")
    beta = EquilibriumDiagonal(data["beta"], data["residual"])
    return EquilibriumState(data["m"], beta, params.ell_field(mesh), data["residual"], data["steps"],
                            [data["residual"]])


def cmd_relax(args) -> int:
    cfg = io.load_config(args.config)
    mesh, params = cfg.build_mesh(), cfg.build_params()
    out = _out_dir(args, cfg)
    eqc = cfg.equilibrium
    kernel = build_demag_kernel(mesh)
    state = relax(cfg.build_m0(mesh), params, kernel, mesh, eqc.tol_eq, eqc.max_steps, eqc.relax_alpha)
    path = _checkpoint_path(args, cfg, out)
    io.write_checkpoint(path, mesh, state.m, state.beta.beta, cfg.param_hash(), state.residual, state.steps_taken)
    print(f"residual {state.residual:.3e}  steps {state.steps_taken}  "
          f"beta min {state.beta.min:.6g}  max {state.beta.max:.6g}")
    print(f"checkpoint written to {path}")
    return 0


def _plan(cfg, args) -> SweepPlan:
    if cfg.sweep is None:
        raise ConfigError("sweep: section required for this command")
    sw = cfg.sweep
    if args.workers is not None and args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    if args.tol is not None and not args.tol > 0:
        raise ConfigError("--tol must be positive")
    return SweepPlan(
        sw.frequency_list(), tuple(sw.directions),
        tol=args.tol if args.tol is not None else sw.tol,
        max_iter=sw.max_iter,
        preconditioner=args.precond or sw.preconditioner,
        workers=args.workers if args.workers is not None else sw.workers,
        chi_scale=sw.chi_scale,
        alpha_scaled_band=sw.alpha_scaled_band,
    )


def cmd_sweep(args) -> int:
    cfg = io.load_config(args.config)
    plan = _plan(cfg, args)
    mesh, params = cfg.build_mesh(), cfg.build_params()
    out = _out_dir(args, cfg)
    eq = load_equilibrium(_checkpoint_path(args, cfg, out), cfg, mesh, params)
    kernel = build_demag_kernel(mesh)

    t0 = time.perf_counter()
    rows = []
    interrupted = False
    with open(out / "iterations.csv", "w", newline="") as f_it, open(out / "chi.csv", "w", newline="") as f_chi:
        w_it = csv.writer(f_it, lineterminator="\n")
        w_chi = csv.writer(f_chi, lineterminator="\n")
        header = ["omega"]
        for d in plan.directions:
            header += [f"iterations_{d}", f"error_{d}"]
        w_it.writerow(header)
        w_chi.writerow(["omega"] + io.CHI_COLUMNS)
        try:
            for row in iter_sweep(plan, eq, params, kernel, mesh):
                rows.append(row)
                w_it.writerow(io.iteration_cells(row, plan.directions))
                w_chi.writerow(io.chi_cells(row))
                f_it.flush()
                f_chi.flush()
        except KeyboardInterrupt:
            interrupted = True
    io.write_residual_histories(out / "residuals.csv", rows)
    meta = {
        "config": cfg.model_dump(mode="json"),
        "preconditioner": plan.preconditioner.value,
        "tol": plan.tol,
        "max_iter": plan.max_iter,
        "workers": plan.workers,
        "frequencies": plan.frequencies,
        "rows": [
            {"omega": r.omega,
             "solves": {d: {"iterations": rep.iterations, "converged": rep.converged,
                            "true_residual": rep.final_true_residual, "wall_time": rep.wall_time,
                            "error": rep.error} for d, rep in r.reports.items()}}
            for r in rows
        ],
        "completed_rows": len(rows),
        "interrupted": interrupted,
        "wall_time": time.perf_counter() - t0,
    }
    io.write_json(out / "metadata.json", meta)
    failed = sum(1 for r in rows for rep in r.reports.values() if not rep.converged)
    print(f"{len(rows)} of {len(plan.frequencies)} rows written to {out}; {failed} solves did not converge")
    if interrupted:
        return 130
    return 0 if failed == 0 else 1


def cmd_svd(args) -> int:
    cfg = io.load_config(args.config)
    out = _out_dir(args, cfg)
    if args.identity:
        n = 3 * cfg.build_mesh().n_interior
        sigma = singular_values(np.eye(n))
    else:
        mesh, params = cfg.build_mesh(), cfg.build_params()
        eq = load_equilibrium(_checkpoint_path(args, cfg, out), cfg, mesh, params)
        omega = args.omega
        if omega is None and cfg.sweep is not None:
            omega = cfg.sweep.svd_omega or min(cfg.sweep.frequency_list())
        if omega is None:
            raise ConfigError("sweep.svd_omega: give a frequency (or --omega)")
        kernel = build_demag_kernel(mesh)
        sys_ = FrequencySystem(omega, eq, params, kernel, mesh)
        kind = PreconditionerKind(args.precond or "none")
        precond = None if kind is PreconditionerKind.NONE else build_precond(sys_, kind)
        sigma = singular_values(operator_matrix(sys_, precond, restricted=args.restricted))
    path = out / "sigma.csv"
    io.write_sigma(path, sigma)
    print(f"{len(sigma)} singular values written to {path}; cond = {sigma[0] / sigma[-1]:.6g}")
    return 0


def cmd_bench(args) -> int:
    results = bench.run_all()
    print(bench.format_table(results))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fsusc", description="Frequency-domain micromagnetic susceptibility solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, checkpoint=True):
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--out", metavar="DIR")
        if checkpoint:
            sp.add_argument("--checkpoint", metavar="PATH")

    sp = sub.add_parser("relax", help="relax to equilibrium and write a checkpoint")
    common(sp)
    sp.set_defaults(func=cmd_relax)

    sp = sub.add_parser("sweep", help="susceptibility sweep from a checkpoint")
    common(sp)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--precond", choices=KINDS)
    sp.add_argument("--tol", type=float)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("svd", help="singular values of the (preconditioned) operator")
    common(sp)
    sp.add_argument("--precond", choices=KINDS)
    sp.add_argument("--omega", type=float)
    sp.add_argument("--restricted", action="store_true", help="restrict to the tangent frame (drops the zero cluster)")
    sp.add_argument("--identity", action="store_true", help="test hook: spectrum of the identity")
    sp.set_defaults(func=cmd_svd)

    sp = sub.add_parser("bench", help="run the 4x4x4 benchmark and print a pass/fail table")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FsuscError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
