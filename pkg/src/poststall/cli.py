"""Command-line driver: ``plan``, ``optimize``, ``simulate``, ``benchmark`` and ``trim``.

Exit codes: 0 success, 1 domain failure (no feasible plan, collision when
``--expect success``), 2 usage or configuration error.  Every output file is
written to a temporary name in the output directory and renamed into place.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .environment import build_field, load_map
from .errors import ConfigError, PoststallError
from .harness import (
    Mode,
    Outcome,
    RunConfig,
    benchmark_knots,
    closed_loop_run,
    launch_state,
    mismatch_pair,
    write_bench_csv,
)
from .params import load_params
from .seed_planner import plan_seed, select_endpoint, write_plan_csv
from .solver import Status, load_solver_config
from .trajopt import (
    RADIUS,
    Method,
    NlpProblem,
    Trajectory,
    resolve_warm,
    seed_from_path,
    solve,
    terminal_state,
    trim_guess,
)
from .trim import trim_turn_radius
from .tvlqr import riccati_backward

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _atomic_write(path: Path, writer) -> None:
    """Call ``writer(tmp_path)`` then rename the result over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text(path: Path, text: str) -> None:
    _atomic_write(path, lambda p: Path(p).write_text(text))


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _caps(text):
    """``start:stop:step`` (inclusive, degrees) or a comma list of degrees."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("caps range is start:stop:step")
        try:
            a, b, s = (float(p) for p in parts)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad caps range {text!r}") from exc
        if s <= 0 or b < a:
            raise argparse.ArgumentTypeError("caps range needs step > 0 and stop >= start")
        return list(np.arange(a, b + 0.5 * s, s))
    values = _float_list(text)
    if not values:
        raise argparse.ArgumentTypeError("empty caps list")
    return values


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="aircraft parameter file (default: packaged Edge 540)")
    common.add_argument("--map", help="hallway map file (default: packaged two-corner hallway)")
    common.add_argument("--solver-config", help="YAML solver settings")
    common.add_argument("--out-dir", default=".", help="directory for output files (default: .)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")

    p = _Parser(prog="poststall", description="Post-stall fixed-wing planning, optimisation and simulation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("plan", parents=[common], help="sampling-based seed path from the map start to its goal")
    s.add_argument("--radius", type=float, default=RADIUS, help="planning clearance radius in m")

    s = sub.add_parser("optimize", parents=[common], help="one receding-horizon trajectory from the map start")
    s.add_argument("--knots", type=int, default=10, help="knot intervals N (default: 10)")
    s.add_argument("--method", choices=["hs", "euler"], default="hs", help="transcription (default: hs)")
    s.add_argument("--horizon", type=float, default=1.0, help="planning horizon in s (default: 1.0)")
    s.add_argument("--warm", action="store_true", help="also re-solve warm from a perturbed start")

    s = sub.add_parser("simulate", parents=[common], help="closed-loop receding-horizon flight")
    s.add_argument("--feedback", type=_on_off, default=True, metavar="on|off", help="TVLQR feedback (default: on)")
    s.add_argument("--mismatch", default="identified", metavar="none|identified|perturbed|FILE",
                   help="truth vs controller model (default: identified, i.e. identified area corrections "
                        "flown by a model without them)")
    s.add_argument("--mode", choices=[m.value for m in Mode], default="lockstep", help="(default: lockstep)")
    s.add_argument("--knots", type=int, default=10, help="knot intervals per replan (default: 10)")
    s.add_argument("--method", choices=["hs", "euler"], default="hs")
    s.add_argument("--max-time", type=float, default=8.0, help="simulated time limit in s (default: 8)")
    s.add_argument("--expect", choices=["any", "success"], default="any",
                   help="with 'success', exit 1 unless the goal is reached")

    s = sub.add_parser("benchmark", parents=[common], help="knot-point sweep on the 90 degree corner")
    s.add_argument("--method", choices=["hs", "euler"], default="hs")
    s.add_argument("--knots", type=_int_list, default=[6, 8, 10, 14, 20], help="comma list (default: 6,8,10,14,20)")
    s.add_argument("--trials", type=int, default=5, help="perturbed trials per N (default: 5)")
    s.add_argument("--warm", action="store_true", help="re-solve each trial warm from the unperturbed solution")
    s.add_argument("--no-cost", action="store_true", help="skip the following-cost simulation")

    s = sub.add_parser("trim", parents=[common], help="minimum steady-turn radius against wing angle-of-attack cap")
    s.add_argument("--caps", type=_caps, default=_caps("10:70:5"),
                   help="degrees, start:stop:step or a comma list (default: 10:70:5)")
    s.add_argument("--speed-bounds", type=_float_list, default=[0.5, 15.0], help="min,max speed in m/s")
    s.add_argument("--max-turn-rate", type=float, default=None, help="turn-rate bound in rad/s")
    return p


# -- subcommands ----------------------------------------------------------------------------


def _cmd_plan(args, ctx) -> int:
    spec, fld = ctx["map"], ctx["field"]
    tp = plan_seed(fld, spec.start[:3], spec.goal, args.radius, seed=args.seed)
    out = Path(args.out_dir)
    _atomic_write(out / "plan.csv", lambda p: write_plan_csv(p, tp))
    _write_text(out / "plan_summary.txt",
                f"length: {tp.smooth.length:.4f}\ntotal_time: {tp.total_time:.4f}\nsegments: {len(tp.smooth.pieces)}\n")
    return EXIT_OK


def _cmd_optimize(args, ctx) -> int:
    spec, fld, params, solver = ctx["map"], ctx["field"], ctx["params"], ctx["solver"]
    rng = np.random.default_rng(args.seed)
    x_i = launch_state(spec, params, rng, jitter=0.0)
    tp = plan_seed(fld, x_i[:3], spec.goal, RADIUS, seed=args.seed)
    trim = trim_guess(params, spec.start[4])
    seed = seed_from_path(tp, args.knots, params, horizon=args.horizon, trim=trim)
    X = seed.states.copy()
    X[0] = x_i
    p_end, v_end = select_endpoint(tp, args.horizon)
    x_f = terminal_state(p_end, v_end, trim, yaw_ref=X[-1, 5])
    prob = NlpProblem(N=args.knots, method=Method.parse(args.method), x_i=x_i, x_f=x_f, params=params, field=fld)
    traj, report, warm = solve(prob, Trajectory(X, seed.inputs, seed.h), config=solver)
    out = Path(args.out_dir)
    _atomic_write(out / "trajectory.csv", traj.to_csv)
    text = report.to_text()
    if args.warm and warm is not None:
        x_p = x_i.copy()
        x_p[:3] += rng.uniform(-0.05, 0.05, size=3)
        _, rep_w, _ = resolve_warm(prob, warm, x_p, solver)
        text += "".join(f"warm_{line}\n" for line in rep_w.to_text().splitlines())
    _write_text(out / "report.txt", text)
    if report.status is Status.FEASIBLE:
        policy = riccati_backward(traj, params)
        _atomic_write(out / "gains.csv", policy.to_csv)
        return EXIT_OK
    print(f"optimize: {report.status.value} after {report.iterations} iterations "
          f"(defect {report.max_defect:.2e}, violation {report.max_violation:.2e})", file=sys.stderr)
    return EXIT_DOMAIN


def _cmd_simulate(args, ctx) -> int:
    params = ctx["params"]
    truth, model = mismatch_pair(args.mismatch, params, args.seed)
    cfg = RunConfig(truth_params=truth, model_params=model, feedback=args.feedback, rng_seed=args.seed,
                    max_sim_time=args.max_time, mode=Mode(args.mode), knots=args.knots,
                    method=Method.parse(args.method), solver=ctx["solver_sim"])
    log = closed_loop_run(ctx["map"], cfg, ctx["field"])
    out = Path(args.out_dir)
    _atomic_write(out / "run.csv", log.to_csv)
    _atomic_write(out / "plans.csv", log.plans_to_csv)
    _write_text(out / "summary.txt", f"mismatch: {args.mismatch}\n" + log.summary_text(cfg))
    solve_times = sorted(p.solve_time for p in log.plans)
    _write_text(out / "timing.txt", f"median_solve_time: {np.median(solve_times) if solve_times else float('nan'):.4f}\n")
    if args.expect == "success" and log.outcome is not Outcome.REACHED:
        print(f"simulate: outcome {log.outcome.value} at t = {log.end_time:.3f} s", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def _cmd_benchmark(args, ctx) -> int:
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    rows = benchmark_knots(args.method, args.knots, trials=args.trials, warm=args.warm, params=ctx["params"],
                           config=ctx["solver"], seed=args.seed, costs=not args.no_cost)
    name = f"bench_{args.method}_{'warm' if args.warm else 'cold'}.csv"
    _atomic_write(Path(args.out_dir) / name, lambda p: write_bench_csv(p, rows))
    return EXIT_OK


TRIM_COLUMNS = ("alpha_cap_deg", "radius", "speed", "alpha", "bank", "pitch", "turn_rate", "thrust", "wing_aoa_deg",
                "residual")


def _cmd_trim(args, ctx) -> int:
    if len(args.speed_bounds) != 2 or not 0 < args.speed_bounds[0] < args.speed_bounds[1]:
        raise ConfigError("--speed-bounds must be min,max with 0 < min < max")
    caps = np.radians(args.caps)
    if np.any(caps <= 0) or np.any(caps >= np.pi / 2):
        raise ConfigError("caps must lie strictly between 0 and 90 degrees")
    results = trim_turn_radius(caps, tuple(args.speed_bounds), ctx["params"], args.max_turn_rate)

    def write(path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRIM_COLUMNS)
            for r in results:
                w.writerow([f"{np.degrees(r.alpha_cap):.6g}", f"{r.radius:.9g}", f"{r.speed:.9g}", f"{r.alpha:.9g}",
                            f"{r.bank:.9g}", f"{r.pitch:.9g}", f"{r.turn_rate:.9g}", f"{r.thrust:.9g}",
                            f"{np.degrees(r.wing_aoa):.9g}", f"{r.residual:.3e}"])

    _atomic_write(Path(args.out_dir) / "trim.csv", write)
    return EXIT_OK


COMMANDS = {"plan": _cmd_plan, "optimize": _cmd_optimize, "simulate": _cmd_simulate, "benchmark": _cmd_benchmark,
            "trim": _cmd_trim}


def _load_inputs(args) -> dict:
    """Parse every referenced file before any computation starts."""
    ctx = {"params": load_params(args.params), "solver": load_solver_config(args.solver_config)}
    ctx["solver_sim"] = ctx["solver"] if args.solver_config else RunConfig.__dataclass_fields__["solver"].default
    if args.command in ("plan", "optimize", "simulate"):
        ctx["map"] = load_map(args.map)
        ctx["field"] = build_field(ctx["map"])
    if args.command == "simulate" and args.mismatch not in ("none", "identified", "perturbed"):
        if not Path(args.mismatch).is_file():
            raise ConfigError(f"mismatch file {args.mismatch} does not exist")
        load_params(args.mismatch)
    return ctx


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        ctx = _load_inputs(args)
        return COMMANDS[args.command](args, ctx)
    except (ConfigError, ValueError) as exc:
        print(f"poststall {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PoststallError as exc:
        print(f"poststall {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
