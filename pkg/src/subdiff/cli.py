"""Experiment runner.

Parses a run configuration from the command line, executes the slow
and/or fast scheme on the standard forced test problem, and writes
report.csv (per-run cost and error summary), errors.csv (deterministic
per-step L2 errors), binary solution streams, and optional diagnostic
dumps into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import ClusterTree
from .dg_stepper import RunConfig, RunResult, fast_run, slow_run, stability_diagnostic
from .history_engine import HistoryEngine, SolutionSink
from .reference_solution import exact_field, u11
from .spatial_fem import EllipticSolver, SpatialGrid, l2_norm, sine_mode, benchmark_source
from .time_mesh import uniform_mesh


@dataclass
class ExperimentSpec:
    """Full description of one CLI invocation."""

    nu: float = 0.5
    T: float = 6.0
    N: int = 2000
    dim: int = 2
    m: int = 40
    K: float | None = None
    mode: str = "both"
    r: int | None = None
    eta: float | None = None
    Q: int = 2
    G: int | None = None
    diag_stability: bool = False
    out: Path = Path(".")
    sweep_N: list[int] = field(default_factory=list)
    sweep_r: list[int] = field(default_factory=list)

    def diffusivity(self) -> float:
        # default puts the lowest Laplacian eigenvalue at 1, matching the
        # closed-form reference solution
        if self.K is not None:
            return self.K
        return 1.0 / (self.dim * math.pi**2)


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="subdiff",
        description="Run the subdiffusion solver on the forced sine-mode test problem.",
    )
    p.add_argument("--nu", type=float, default=0.5, help="fractional order in (0,1)")
    p.add_argument("--T", type=float, default=6.0, help="final time")
    p.add_argument("--N", type=int, default=2000, help="number of time steps")
    p.add_argument("--dim", type=int, choices=(1, 2), default=2, help="spatial dimension")
    p.add_argument("--m", type=int, default=40, help="spatial subdivisions per axis")
    p.add_argument("--K", type=float, default=None,
                   help="diffusivity (default: 1/(dim*pi^2), first eigenvalue 1)")
    p.add_argument("--mode", choices=("slow", "fast", "both"), default="both")
    p.add_argument("--r", type=int, default=None, help="expansion order (default: auto)")
    p.add_argument("--eta", type=float, default=None,
                   help="admissibility parameter (default: auto; requires --r)")
    p.add_argument("--Q", type=int, default=2, help="cluster tree branching factor")
    p.add_argument("--G", type=int, default=None, help="cluster tree depth (default: auto)")
    p.add_argument("--diag-stability", action="store_true",
                   help="run the quadratic-cost stability diagnostic and dump the tree")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--sweep-N", type=_int_list, default=None,
                   help="comma-separated step counts for a scaling sweep")
    p.add_argument("--sweep-r", type=_int_list, default=None,
                   help="comma-separated expansion orders to compare")
    return p


def parse_args(argv: list[str] | None = None) -> ExperimentSpec:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.eta is not None and args.mode == "slow":
        parser.error("--eta applies to the fast scheme only and conflicts with --mode slow")
    if args.eta is not None and args.r is None:
        parser.error("--eta requires an explicit --r")
    if args.r is not None and args.mode == "slow":
        parser.error("--r applies to the fast scheme only and conflicts with --mode slow")
    if args.sweep_r is not None and args.mode == "slow":
        parser.error("--sweep-r applies to the fast scheme only and conflicts with --mode slow")
    if not 0.0 < args.nu < 1.0:
        parser.error("--nu must lie in (0, 1)")
    return ExperimentSpec(
        nu=args.nu, T=args.T, N=args.N, dim=args.dim, m=args.m, K=args.K,
        mode=args.mode, r=args.r, eta=args.eta, Q=args.Q, G=args.G,
        diag_stability=args.diag_stability, out=args.out,
        sweep_N=args.sweep_N or [], sweep_r=args.sweep_r or [],
    )


REPORT_COLUMNS = ["mode", "r", "eta", "N", "max_nodal_error", "setup_s",
                  "rhs_s", "solver_s", "total_s", "rhs_ops", "peak_values"]


def _single_run(spec: ExperimentSpec, mode: str, N: int, r: int | None,
                out: Path) -> tuple[dict, list[tuple[int, float, float]]]:
    """Execute one run and return its report row and per-step L2 errors."""
    mesh = uniform_mesh(N, spec.T)
    grid = SpatialGrid(dim=spec.dim, m=spec.m, K=spec.diffusivity())
    source = benchmark_source(grid)
    j = 1 if spec.dim == 2 else None
    u0 = sine_mode(grid, 1, j)
    config = RunConfig(nu=spec.nu, mesh=mesh, grid=grid, r=r, eta=spec.eta,
                       Q=spec.Q, G=spec.G)
    if mode == "slow":
        result = slow_run(config, source, u0)
        r_used, eta_used = "", ""
    else:
        tag = f"_r{r}" if r is not None else ""
        sink = SolutionSink(out / f"solution_fast_N{N}{tag}.bin",
                            {"nu": spec.nu, "T": spec.T, "N": N,
                             "dim": spec.dim, "m": spec.m, "M": grid.M})
        result = fast_run(config, source, u0, sink=sink)
        r_used, eta_used = result.r, f"{result.eta:.12g}"

    solver = EllipticSolver(grid)
    mode_vals = [u11(spec.nu, float(t)) for t in mesh.levels[1:]]
    shape = sine_mode(grid, 1, j)
    max_err = 0.0
    step_errors = []
    for n, u in enumerate(result.solutions, start=1):
        exact = mode_vals[n - 1] * shape
        diff = u - exact
        max_err = max(max_err, float(np.max(np.abs(diff))))
        step_errors.append((n, float(mesh.levels[n]), l2_norm(solver, diff)))
    row = {
        "mode": mode, "r": r_used, "eta": eta_used, "N": N,
        "max_nodal_error": f"{max_err:.12e}",
        "setup_s": f"{result.setup_seconds:.6f}",
        "rhs_s": f"{result.rhs_seconds:.6f}",
        "solver_s": f"{result.solver_seconds:.6f}",
        "total_s": f"{result.total_seconds:.6f}",
        "rhs_ops": result.rhs_ops,
        "peak_values": result.peak_values,
    }
    return row, step_errors


def run(spec: ExperimentSpec) -> int:
    out = spec.out
    out.mkdir(parents=True, exist_ok=True)
    modes = ["slow", "fast"] if spec.mode == "both" else [spec.mode]
    n_values = spec.sweep_N or [spec.N]
    rows: list[dict] = []
    error_rows: list[dict] = []
    for N in n_values:
        for mode in modes:
            r_values: list[int | None]
            if mode == "fast" and spec.sweep_r:
                r_values = list(spec.sweep_r)
            else:
                r_values = [spec.r if mode == "fast" else None]
            for r in r_values:
                row, step_errors = _single_run(spec, mode, N, r, out)
                rows.append(row)
                for n, t, err in step_errors:
                    error_rows.append({
                        "mode": mode, "r": row["r"], "N": N, "step": n,
                        "t": f"{t:.12g}", "l2_error": f"{err:.12e}",
                    })
    with (out / "report.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    with (out / "errors.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["mode", "r", "N", "step", "t", "l2_error"])
        writer.writeheader()
        writer.writerows(error_rows)

    if spec.diag_stability:
        mesh = uniform_mesh(spec.N, spec.T)
        grid = SpatialGrid(dim=spec.dim, m=spec.m, K=spec.diffusivity())
        config = RunConfig(nu=spec.nu, mesh=mesh, grid=grid, r=spec.r,
                           eta=spec.eta, Q=spec.Q, G=spec.G)
        report = stability_diagnostic(config)
        tree = ClusterTree(mesh, spec.Q, config.resolved_depth())
        lines = [
            f"r {report.r}",
            f"eta {report.eta:.12g}",
            f"row_ratio {report.row_ratio:.6e}",
            f"col_ratio {report.col_ratio:.6e}",
            f"certified {report.certified}",
            "",
        ]
        covers = HistoryEngine(tree, _weights_for(spec, mesh), report.r,
                               report.eta, m=1)
        for leaf in tree.leaves():
            lines.append(f"leaf {leaf}")
            lines.append(tree.dump(covers.cover_for(leaf.lo)))
        (out / "tree_dump.txt").write_text("\n".join(lines) + "\n")
    return 0


def _weights_for(spec: ExperimentSpec, mesh):
    from .frac_weights import KernelParams, WeightEngine

    return WeightEngine(KernelParams(spec.nu), mesh)


def main(argv: list[str] | None = None) -> int:
    try:
        spec = parse_args(argv)
        return run(spec)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
