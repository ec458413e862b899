"""Command-line front end.

Subcommands: gen, solve-grid, train, predict, bounds, experiment.
Precedence is defaults < flags < config file: a JSON config passed via
--config overrides anything given on the command line, so a config file
fully pins down a run.  Unknown config keys are rejected.

Exit codes: 0 success, 2 usage/validation, 3 I/O, 4 integration failure,
5 model-document error, 6 training divergence.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analysis, discovery, experiments, kan, lmm, odeint, systems, training

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INTEGRATION = 4
EXIT_MODEL = 5
EXIT_DIVERGED = 6


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError:
        raise ValueError(f"expected a comma-separated number list, got {text!r}") from None


def _system_from_args(args) -> systems.SystemDef:
    name = args.system.lower()
    if name == "opinion":
        return systems.opinion_system(dim=args.dim, alpha=args.alpha, seed=args.seed)
    return systems.by_name(name)


def _apply_config(args: argparse.Namespace, allowed: set[str]) -> None:
    """Overlay a JSON config document onto parsed flags (config wins)."""
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key, value in doc.items():
        setattr(args, key, value)


def _write_grid_csv(path, times, states, fhat, ftrue=None) -> None:
    d = states.shape[1]
    header = (["t"] + [f"x{i+1}" for i in range(d)] + [f"fhat{i+1}" for i in range(d)]
              + ([f"ftrue{i+1}" for i in range(d)] if ftrue is not None else []))
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for n in range(states.shape[0]):
            row = [times[n], *states[n], *fhat[n]]
            if ftrue is not None:
                row.extend(ftrue[n])
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def cmd_gen(args) -> int:
    sys_def = _system_from_args(args)
    x0 = _parse_vector(args.x0) if args.x0 else sys_def.x0
    if x0.shape != (sys_def.dim,):
        raise ValueError(f"x0 must have {sys_def.dim} components, got {x0.shape[0]}")
    t0 = sys_def.t_train[0] if args.t0 is None else args.t0
    t1 = sys_def.t_train[1] if args.t1 is None else args.t1
    traj = odeint.integrate(sys_def.field, x0, t0, t1, args.h)
    odeint.save_trajectory(traj, args.out)
    print(f"wrote {args.out}: {traj.n_steps + 1} samples, dim {traj.dim}, "
          f"t in [{traj.t0:g}, {traj.t1:g}], h = {traj.h:g}")
    return EXIT_OK


def cmd_solve_grid(args) -> int:
    traj = odeint.load_trajectory(args.data)
    scheme = lmm.scheme(args.scheme, args.steps)
    window, fhat = discovery.solve_all_components(scheme, traj)
    sl = slice(window.r, window.q + 1)
    times = traj.times[sl]
    states = traj.states[sl]
    ftrue = None
    if args.system:
        sys_def = _system_from_args(args)
        if sys_def.dim != traj.dim:
            raise ValueError(f"system dimension {sys_def.dim} != trajectory dim {traj.dim}")
        ftrue = np.apply_along_axis(sys_def.field, 1, states)
    _write_grid_csv(args.out, times, states, fhat, ftrue)
    report = discovery.condition_number(discovery.assemble(scheme, traj, 0))
    print(f"wrote {args.out}: window [{window.r}, {window.q}], tau = {window.tau}, "
          f"kappa2 = {report:.6g}")
    if ftrue is not None:
        print(f"max grid error vs true field: {np.max(np.abs(fhat - ftrue)):.6g}")
    return EXIT_OK


def cmd_train(args) -> int:
    traj = odeint.load_trajectory(args.data)
    config = training.TrainConfig(
        family=args.scheme, steps=args.steps, degree=args.k, intervals=args.grid,
        hidden=args.hidden, learning_rate=args.lr, iterations=args.iters,
        seed=args.seed, loss_kind=args.loss,
    )
    true_field = _system_from_args(args).field if args.system else None
    net, report = training.train(config, traj, true_field=true_field)
    kan.save_model(net, args.out)
    doc = {
        "config": report.config,
        "final_loss": report.final_loss,
        "best_loss": report.best_loss,
        "best_iteration": report.best_iteration,
        "wall_clock_s": report.wall_clock_s,
        "seminorm_error": report.seminorm_error,
        "seminorm_error_components": report.seminorm_error_components,
        "loss_trace": report.loss_trace.tolist(),
    }
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
    print(f"wrote {args.out}: best loss {report.best_loss:.6g} "
          f"at iteration {report.best_iteration}, final loss {report.final_loss:.6g}")
    if report.seminorm_error is not None:
        print(f"field seminorm error: {report.seminorm_error:.6g}")
    return EXIT_OK


def cmd_predict(args) -> int:
    net = kan.load_model(args.model)
    x0 = _parse_vector(args.x0)
    if x0.shape != (net.d_in,):
        raise ValueError(f"x0 must have {net.d_in} components, got {x0.shape[0]}")
    traj = odeint.integrate(lambda y: kan.forward(net, y), x0, args.t0, args.t1, args.h,
                            provenance="learned")
    odeint.save_trajectory(traj, args.out)
    print(f"wrote {args.out}: {traj.n_steps + 1} samples over [{traj.t0:g}, {traj.t1:g}]")
    return EXIT_OK


def cmd_bounds(args) -> int:
    holder = analysis.HolderSpec(alpha=args.alpha, lam=args.lam, radius=args.radius)
    lipschitz = args.lipschitz
    if args.model:
        lipschitz = analysis.lipschitz_estimate(kan.load_model(args.model))
    n_hidden = args.hidden if args.hidden is not None else 2 * args.d + 1
    report = analysis.bounds_report(holder, args.k, args.grid, n_hidden, args.d, lipschitz)
    print("bound report")
    for key, value in report.inputs.items():
        print(f"  {key} = {value}")
    print(f"  upper_bound           = {report.upper_bound:.10g}")
    print(f"  upper_bound_unit_box  = {report.upper_bound_unit_box:.10g}")
    print(f"  vc_lower_bound_shape  = {report.vc_shape:.10g}   (modulo unknown constant)")
    print(f"  note: {report.notes}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({
                "upper_bound": report.upper_bound,
                "upper_bound_unit_box": report.upper_bound_unit_box,
                "vc_lower_bound_shape": report.vc_shape,
                "inputs": report.inputs,
                "notes": report.notes,
            }, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_experiment(args) -> int:
    summary = experiments.run(args.name, args.out_dir, quick=not args.full, seed=args.seed)
    print(f"experiment {args.name} finished; summary written to {args.out_dir}/summary.json")
    for key in ("seminorm_error", "fitted_C", "log_error_slope",
                "linf_error_train_interval"):
        if key in summary:
            print(f"  {key} = {summary[key]:.6g}")
    return EXIT_OK


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="kanlmm",
        description="Vector-field discovery from trajectories: spline networks "
                    "trained on linear-multistep residuals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    tables = {}

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON config; its keys override flags")
        tables[name] = p
        return p

    p = add("gen", cmd_gen, "integrate a benchmark system and write a trajectory CSV")
    p.add_argument("--system", required=True, choices=["linear", "glycolytic", "opinion"])
    p.add_argument("--h", type=float, default=1e-3, help="output grid step")
    p.add_argument("--t0", type=float, default=None, help="start time (default: system)")
    p.add_argument("--t1", type=float, default=None, help="end time (default: system)")
    p.add_argument("--x0", default=None, help="comma-separated initial state override")
    p.add_argument("--dim", type=int, default=50, help="agent count (opinion only)")
    p.add_argument("--alpha", type=float, default=1.0, help="interaction scale (opinion only)")
    p.add_argument("--seed", type=int, default=0, help="initial-condition seed (opinion only)")
    p.add_argument("--out", required=True)

    p = add("solve-grid", cmd_solve_grid, "recover field grid values by forward substitution")
    p.add_argument("--data", required=True, help="trajectory CSV")
    p.add_argument("--scheme", default="am", choices=list(lmm.FAMILIES))
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--system", default=None, choices=["linear", "glycolytic", "opinion"],
                   help="known system for a ftrue comparison column")
    p.add_argument("--dim", type=int, default=50, help="agent count (opinion only)")
    p.add_argument("--alpha", type=float, default=1.0, help="interaction scale (opinion only)")
    p.add_argument("--seed", type=int, default=0, help="system seed (opinion only)")
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, "fit a spline network to a trajectory")
    p.add_argument("--data", required=True, help="trajectory CSV")
    p.add_argument("--scheme", default="am", choices=list(lmm.FAMILIES))
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--k", type=int, default=3, help="spline degree")
    p.add_argument("--grid", type=int, default=64, help="spline interval count G")
    p.add_argument("--hidden", type=int, default=None, help="hidden width (default 2d+1)")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--iters", type=int, default=2200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss", default="jah", choices=list(training.LOSS_KINDS))
    p.add_argument("--system", default=None, choices=["linear", "glycolytic", "opinion"],
                   help="known system for error reporting")
    p.add_argument("--dim", type=int, default=50, help="agent count (opinion only)")
    p.add_argument("--alpha", type=float, default=1.0, help="interaction scale (opinion only)")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--report", default=None, help="training report JSON path")

    p = add("predict", cmd_predict, "integrate a saved model forward in time")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--out", required=True)

    p = add("bounds", cmd_bounds, "evaluate the approximation bound calculators")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--hidden", type=int, default=None, help="hidden width (default 2d+1)")
    p.add_argument("--d", type=int, required=True, help="input dimension")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--lipschitz", type=float, default=1.0)
    p.add_argument("--model", default=None, help="estimate the Lipschitz constant from this model")
    p.add_argument("--out", default=None, help="also write the report as JSON")

    p = add("experiment", cmd_experiment, "run a benchmark experiment protocol")
    p.add_argument("name", choices=list(experiments.EXPERIMENT_NAMES))
    p.add_argument("--out-dir", required=True)
    p.add_argument("--full", action="store_true",
                   help="full reference scale (slow); default is quick desk scale")
    p.add_argument("--seed", type=int, default=0)

    return parser, tables


def main(argv=None) -> int:
    parser, tables = build_parser()
    args = parser.parse_args(argv)
    allowed = {a.dest for a in tables[args.command]._actions} - {"help", "config", "func"}
    try:
        _apply_config(args, allowed)
        return args.func(args)
    except (kan.ModelFormatError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except training.TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except odeint.IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
