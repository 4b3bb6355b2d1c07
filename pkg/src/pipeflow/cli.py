"""Command-line driver: solve, converge, continuation, compare-outlet,
constants, uniqueness.

Exit codes: 0 success, 2 nonlinear divergence or stalled continuation,
3 configuration errors.  Output files for one run live in the configured
directory and are listed in the run manifest; CSV and VTK bytes depend
only on the case file and seed.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod, diagnostics, geometry, io, solver
from .errors import ConfigError, ContinuationStalled, Diverged, PipeflowError
from .fem import FESpace, assembly
from .reference_flow import build_reference_flow

EXIT_OK, EXIT_DIVERGED, EXIT_CONFIG = 0, 2, 3


class _Run:
    """Shared per-command context: parsed case, mesh, space, output dir."""

    def __init__(self, case_path: str, target_h: float | None = None):
        self.case_path = Path(case_path)
        text = self.case_path.read_text(encoding="utf-8")
        self.case_hash = io.config_hash(text)
        self.cfg = cfgmod.parse_case_text(text)
        self.spec = cfgmod.make_domain(self.cfg)
        self.data = cfgmod.make_data(self.cfg, self.spec)
        self.solver_cfg = cfgmod.make_solver_config(self.cfg)
        h = target_h if target_h is not None else self.cfg["mesh"]["target_h"]
        self.mesh = geometry.generate_mesh(self.spec, h)
        self.space = FESpace(self.mesh, self.spec)
        self.outdir = Path(self.cfg["outputs"]["directory"])
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.t0 = time.perf_counter()

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.outdir / name

    def mesh_stats(self) -> dict:
        return {
            "n_vertices": int(self.mesh.n_vertices),
            "n_triangles": int(self.mesh.n_triangles),
            "min_angle_deg": self.mesh.min_angle(),
            "max_edge": self.mesh.max_edge_length(),
        }

    def finish(self, command: str, solver_summary=None, diag=None) -> None:
        manifest = io.RunManifest(
            command=command,
            config_hash=self.case_hash,
            version=__version__,
            mesh_stats=self.mesh_stats(),
            solver_summary=solver_summary or {},
            diagnostics=diag or {},
            timings={"wall_seconds": time.perf_counter() - self.t0},
            files=list(self.files),
        )
        io.write_manifest(self.outdir / "manifest.json", manifest)


def _write_fields(run: _Run, fields) -> None:
    if run.cfg["outputs"]["write_mesh"]:
        io.write_mesh(run.path("mesh.txt"), run.mesh)
    if run.cfg["outputs"]["write_vtk"]:
        vel = np.column_stack([fields.velocity[0:2 * run.mesh.n_vertices:2],
                               fields.velocity[1:2 * run.mesh.n_vertices:2]])
        io.write_vtk(run.path("u_p.vtk"), run.mesh, vel, fields.pressure)


def _energy_row(rep) -> tuple[list, list]:
    header = ["lhs", "force_work", "traction_work", "ref_viscous", "ref_convection_ww",
              "ref_convection_uwu", "ddn_dissipation", "identity_residual",
              "inequality_ok", "backflow_energy"]
    row = [rep.lhs, rep.force_work, rep.traction_work, rep.ref_viscous, rep.ref_convection_ww,
           rep.ref_convection_uwu, rep.ddn_dissipation, rep.identity_residual,
           rep.inequality_ok, rep.backflow_energy]
    return header, row


def cmd_solve(args) -> int:
    run = _Run(args.case)
    try:
        fields, wref = solver.solve(run.space, run.data, run.solver_cfg)
    except Diverged as exc:
        io.write_csv(run.outdir / "residuals.csv", ["iteration", "residual"],
                     [[i, r] for i, r in enumerate(exc.history)])
        run.files.append("residuals.csv")
        run.finish("solve", {"status": "diverged", "iterations": len(exc.history) - 1})
        print(f"solve diverged after {len(exc.history) - 1} iterations", file=sys.stderr)
        return EXIT_DIVERGED
    rep = diagnostics.energy_report(run.space, run.data, wref, fields)
    header, row = _energy_row(rep)
    io.write_csv(run.path("energy.csv"), header, [row])
    _write_fields(run, fields)

    exact = cfgmod.make_exact(run.cfg)
    diag = {"identity_residual": rep.identity_residual, "backflow_energy": rep.backflow_energy}
    if exact is not None:
        l2v, h1v, l2p = assembly.error_norms(run.space, fields, exact)
        diag.update({"L2_vel": l2v, "H1_vel": h1v, "L2_pres": l2p})
        print(f"H1 velocity error: {h1v:.6e}")
    print(f"converged in {fields.metadata['iterations']} iterations, "
          f"final residual {fields.residual_norms[-1]:.3e}")
    run.finish("solve", {"status": "converged", "iterations": fields.metadata["iterations"],
                         "final_residual": fields.residual_norms[-1]}, diag)
    return EXIT_OK


def cmd_converge(args) -> int:
    base = _Run(args.case)
    exact = cfgmod.make_exact(base.cfg)
    if exact is None:
        print("converge needs an [exact] section", file=sys.stderr)
        return EXIT_CONFIG
    h0 = base.cfg["mesh"]["target_h"]
    rows = []
    errs = []
    for level in range(args.levels):
        run = base if level == 0 else _Run(args.case, target_h=h0 / 2**level)
        fields, _ = solver.solve(run.space, run.data, run.solver_cfg)
        l2v, h1v, l2p = assembly.error_norms(run.space, fields, exact)
        errs.append((l2v, h1v, l2p))
        rates = [None, None, None]
        if level > 0:
            prev = errs[level - 1]
            cur = errs[level]
            noise = 1e-12
            rates = [np.log2(prev[k] / cur[k]) if prev[k] > noise and cur[k] > noise else None
                     for k in range(3)]
        rows.append([level, h0 / 2**level, l2v, h1v, l2p, *rates])
    header = ["level", "h", "L2_vel", "H1_vel", "L2_pres", "rate_L2_vel", "rate_H1_vel", "rate_L2_pres"]
    io.write_csv(base.path("convergence.csv"), header, rows)
    base.finish("converge", {"levels": args.levels})
    return EXIT_OK


def cmd_continuation(args) -> int:
    run = _Run(args.case)
    try:
        state = solver.continuation_solve(run.space, run.data, run.solver_cfg)
    except ContinuationStalled as exc:
        run.finish("continuation", {"status": "stalled", "lambda": exc.lam, "step": exc.step})
        print(f"continuation stalled at lambda={exc.lam:.6g}", file=sys.stderr)
        return EXIT_DIVERGED
    rows = []
    accepted = [entry for entry in state.step_log if entry[2]]
    for lam, sol, j, entry in zip(state.lambdas, state.solutions, state.gradient_norms, accepted):
        rows.append([lam, j, sol.metadata["iterations"], entry[1]])
    io.write_csv(run.path("continuation.csv"), ["lambda", "J", "iterations", "step"], rows)
    run.finish("continuation", {"status": "converged", "n_lambdas": len(state.lambdas),
                                "max_J": max(state.gradient_norms)})
    return EXIT_OK


def cmd_compare_outlet(args) -> int:
    run = _Run(args.case)
    wref = build_reference_flow(run.space, run.data)
    rows = []
    n_ok = 0
    diag = {}
    for condition in (solver.DDN, solver.DO_NOTHING):
        cfg_b = cfgmod.make_solver_config(run.cfg)
        cfg_b.outlet_condition = condition
        cfg_b.divergence_streak = 10**9  # record the full residual trace
        scale = max(solver.DiscreteProblem(run.space, run.data, wref, cfg_b).scale, 1e-300)
        try:
            fields, _ = solver.solve(run.space, run.data, cfg_b, wref=wref)
            rep = diagnostics.energy_report(run.space, run.data, wref, fields)
            history = np.asarray(fields.residual_norms) / scale
            rows.append([condition, True, fields.metadata["iterations"],
                         history[-1], history[:101].min(), rep.backflow_energy])
            diag[condition] = {"backflow_energy": rep.backflow_energy}
            n_ok += 1
        except (Diverged, ContinuationStalled) as exc:
            history = np.asarray(getattr(exc, "history", [np.nan])) / scale
            rows.append([condition, False, len(history) - 1,
                         history[-1], history[:101].min(), None])
    io.write_csv(run.path("outlet_compare.csv"),
                 ["condition", "converged", "iterations", "final_rel_residual",
                  "min_rel_residual_100", "backflow_energy"],
                 rows)
    run.finish("compare-outlet", {"n_converged": n_ok}, diag)
    return EXIT_OK if n_ok > 0 else EXIT_DIVERGED


def cmd_constants(args) -> int:
    run = _Run(args.case)
    kmat = assembly.assemble_stiffness(run.space)
    bmat = assembly.assemble_divergence(run.space)
    ksc = assembly.assemble_scalar_stiffness(run.space)
    eta = run.data.eta

    def builder(g):
        from .fem.space import ProblemData
        return build_reference_flow(run.space, ProblemData(eta, g_star=g),
                                    k_mat=kmat, b_mat=bmat, k_scalar=ksc)

    consts = diagnostics.estimate_constants(run.space, builder, eta,
                                            n_samples=args.samples, seed=args.seed)
    header = ["S_star", "trace_constant", "infsup_constant", "M_star", "omega_star",
              "eta", "n_samples", "seed"]
    io.write_csv(run.path("constants.csv"), header,
                 [[consts.s_star, consts.trace_constant, consts.infsup_constant,
                   consts.m_star, consts.omega_star, consts.eta, consts.n_samples, consts.seed]])
    run.finish("constants", {}, {"omega_star": consts.omega_star})
    return EXIT_OK


def cmd_uniqueness(args) -> int:
    run = _Run(args.case)
    report = solver.uniqueness_probe(run.space, run.data, args.starts, args.seed,
                                     config=run.solver_cfg)
    rows = [[k, report.converged[k], report.iterations[k]] for k in range(report.n_starts)]
    io.write_csv(run.path("uniqueness.csv"), ["start", "converged", "iterations"], rows)
    io.write_csv(run.path("uniqueness_summary.csv"),
                 ["n_starts", "n_converged", "max_pairwise_h1", "data_magnitude", "seed"],
                 [[report.n_starts, sum(report.converged), report.max_pairwise_h1,
                   report.data_magnitude, args.seed]])
    run.finish("uniqueness", {"n_converged": sum(report.converged)},
               {"max_pairwise_h1": report.max_pairwise_h1})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipeflow",
                                     description="steady pipe-flow solver with directional outflow")
    parser.add_argument("--version", action="version", version=f"pipeflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a case and write fields + energy report")
    p.add_argument("case")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("converge", help="refinement study against the exact block")
    p.add_argument("case")
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("continuation", help="lambda sweep from the trivial member")
    p.add_argument("case")
    p.set_defaults(func=cmd_continuation)

    p = sub.add_parser("compare-outlet", help="directional vs plain traction outflow")
    p.add_argument("case")
    p.set_defaults(func=cmd_compare_outlet)

    p = sub.add_parser("constants", help="estimate embedding/trace/inf-sup constants")
    p.add_argument("case")
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("uniqueness", help="multi-start uniqueness probe")
    p.add_argument("case")
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_uniqueness)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ContinuationStalled as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DIVERGED
    except Diverged as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DIVERGED
    except PipeflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
