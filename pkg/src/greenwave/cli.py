"""Command-line front end: ``greenwave <subcommand> [options]``.

Exit status 0 on success, 1 on runtime failure, 2 on usage, parse or
validation errors. Inputs default to the shipped Telegraph Road dataset.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, datasets
from .corridor import NodePlan, load_corridor, load_plan, plan_to_dict
from .errors import (
    CorridorFormatError,
    DomainError,
    GreenWaveError,
    PlanError,
    ScenarioError,
)
from .flow import GreenbergModel, flow_curve, peak_flow
from .formats import (
    RunManifest,
    diagram_svg,
    json_document,
    phases_csv,
    timing_csv,
    trajectories_csv,
    waves_csv,
)
from .placement import PlacementConfig, check_constraints, eta, optimize_plan
from .simulator import (
    compute_metrics,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
    wave_metrics,
)
from .timing import build_timing_table
from .waves import NORTH, phase_timings, wave_paths, window_for_horizon


class UsageError(Exception):
    """Bad input file or argument; maps to exit status 2."""


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p.read_text(encoding="utf-8")


_OUTPUT_ARGS = {"func", "out", "trace", "trajectories", "phases"}


def _params(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _OUTPUT_ARGS}


class _Inputs:
    """Corridor, plan and their content hashes, from files or the shipped data."""

    def __init__(self, args, command: str):
        self.manifest = RunManifest(command, params=_params(args))
        if args.corridor:
            text = _read_text(args.corridor)
            self.corridor = load_corridor(text)
        else:
            text = datasets.read_resource("telegraph_corridor.csv")
            self.corridor = datasets.telegraph_corridor()
        self.manifest.add_input("corridor", text)
        plan_arg = getattr(args, "plan", None)
        if plan_arg:
            ptext = _read_text(plan_arg)
            try:
                self.plan = load_plan(ptext, self.corridor)
            except json.JSONDecodeError as exc:
                raise UsageError(f"{plan_arg}: invalid JSON ({exc})") from None
        else:
            ptext = datasets.read_resource("telegraph_plan.json")
            self.plan = load_plan(ptext, self.corridor)
        self.manifest.add_input("plan", ptext)
        if args.cycle_time is not None:
            self.plan = self.plan.with_cycle_time(args.cycle_time)


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _scenario(args, manifest: RunManifest):
    name = args.scenario
    if Path(name).is_file():
        text = Path(name).read_text(encoding="utf-8")
    elif name in datasets.scenario_names():
        text = datasets.read_resource(f"scenarios/{name}.json")
    else:
        raise UsageError(f"no such file or shipped scenario: {name}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{name}: invalid JSON ({exc})") from None
    if args.seed is not None:
        doc["rng_seed"] = args.seed
    manifest.add_input("scenario", text)
    return scenario_from_dict(doc), doc


def _xi_arg(value):
    return None if value is None else float(value)


def cmd_plan(args) -> int:
    inp = _Inputs(args, "plan")
    table = build_timing_table(inp.corridor, inp.plan, _xi_arg(args.xi_max))
    _emit(args, timing_csv(table, inp.manifest, full_precision=args.full_precision))
    return 0


def _config(args) -> PlacementConfig:
    kwargs = dict(speed_band=args.speed_band, xi_max=args.xi_max)
    if args.v_min is not None:
        kwargs["v_min"] = args.v_min
    if args.v_max is not None:
        kwargs["v_max"] = args.v_max
    if getattr(args, "max_iterations", None) is not None:
        kwargs["max_iterations"] = args.max_iterations
    if getattr(args, "seed", None) is not None:
        kwargs["seed"] = args.seed
    return PlacementConfig(**kwargs)


def cmd_eta(args) -> int:
    inp = _Inputs(args, "eta")
    cfg = _config(args)
    viol = check_constraints(inp.corridor, inp.plan, cfg)
    lo, hi = inp.plan.span
    doc = {
        "eta_kph": eta(inp.corridor, inp.plan),
        "span_km": hi - lo,
        "cycle_time_s": inp.plan.cycle_time,
        "violations": [{"where": v.site, "reason": v.reason} for v in viol],
    }
    _emit(args, json_document(doc, inp.manifest))
    return 0


def cmd_optimize(args) -> int:
    inp = _Inputs(args, "optimize")
    res = optimize_plan(inp.corridor, inp.plan, _config(args))
    doc = {
        "plan": plan_to_dict(res.plan),
        "eta_kph": res.eta,
        "seed_eta_kph": res.seed_eta,
        "feasible": res.feasible,
        "iterations": res.iterations,
        "violations": [{"where": v.site, "reason": v.reason} for v in res.violations],
    }
    _emit(args, json_document(doc, inp.manifest))
    if args.trace:
        lines = [f"# manifest sha256={inp.manifest.digest}", "evaluation,eta_kph,violations"]
        lines += [f"{i},{e!r},{n}" for i, e, n in res.trace]
        Path(args.trace).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_flow_curve(args) -> int:
    model = GreenbergModel()
    manifest = RunManifest("flow-curve", params=_params(args))
    rho_star, q_star = peak_flow(model)
    lines = [f"# manifest sha256={manifest.digest}", f"# peak rho={rho_star!r} q={q_star!r}", "rho_veh_per_km,u_kph,q_veh_per_h"]
    lines += [f"{r:.4f},{u:.4f},{q:.4f}" for r, u, q in flow_curve(model, args.step)]
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_waves(args) -> int:
    inp = _Inputs(args, "waves")
    table = build_timing_table(inp.corridor, inp.plan)
    paths = wave_paths(inp.plan)
    _emit(args, waves_csv(paths, args.t_max, args.step, inp.manifest))
    if args.phases:
        timings = phase_timings(table, window=window_for_horizon(args.t_max, inp.plan.cycle_time))
        Path(args.phases).write_text(phases_csv(table, timings, args.t_max, inp.manifest), encoding="utf-8")
    return 0


def _run(args, command: str):
    inp = _Inputs(args, command)
    scenario, _ = _scenario(args, inp.manifest)
    table = build_timing_table(inp.corridor, inp.plan)
    logs = run_scenario(inp.corridor, inp.plan, table, scenario)
    return inp, scenario, table, logs


def _origin_km(plan: NodePlan, direction: str) -> float:
    real = [n for n in plan.nodes if n.is_real]
    return real[0].odometer if direction == NORTH else real[-1].odometer


def cmd_simulate(args) -> int:
    inp, scenario, table, logs = _run(args, "simulate")
    m = compute_metrics(logs, args.baseline)
    doc = {
        "scenario": scenario_to_dict(scenario),
        "metrics": m.to_dict(),
        "per_wave": [w.to_dict() for w in wave_metrics(logs, args.baseline)],
        "vehicles": [
            {
                "index": lg.index,
                "wave": lg.wave,
                "kind": lg.kind.value,
                "entry_s": lg.entry_time,
                "finish_s": lg.finish_time,
                "travel_s": lg.travel_time,
                "stops": [{"site": s.site, "wait_s": s.wait} for s in lg.stops],
            }
            for lg in logs
        ],
    }
    _emit(args, json_document(doc, inp.manifest))
    if args.trajectories:
        north, south = wave_paths(inp.plan)
        head = north if scenario.direction == NORTH else south
        text = trajectories_csv(logs, head, _origin_km(inp.plan, scenario.direction), scenario.direction, args.step, inp.manifest)
        Path(args.trajectories).write_text(text, encoding="utf-8")
    return 0


def _selection(choice: str | None, n: int) -> list[int]:
    if choice is None or choice == "all":
        return list(range(n))
    if choice in ("", "none"):
        return []
    try:
        idx = [int(s) for s in choice.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad vehicle selection {choice!r}") from None
    bad = [i for i in idx if not 0 <= i < n]
    if bad:
        raise UsageError(f"vehicle index out of range: {bad}")
    return idx


def cmd_diagram(args) -> int:
    inp, scenario, table, logs = _run(args, "diagram")
    chosen = [logs[i] for i in _selection(args.vehicles, len(logs))]
    origin = _origin_km(inp.plan, scenario.direction)
    sign = 1.0 if scenario.direction == NORTH else -1.0
    t_max = max((lg.entry_time + lg.dt * (len(lg.x) - 1) for lg in logs), default=inp.plan.cycle_time)
    if args.format == "csv":
        lines = [f"# manifest sha256={inp.manifest.digest}", "vehicle,t_s,odometer_km,v_mps,a_mps2"]
        for lg in chosen:
            tr = lg.trajectory
            t = np.arange(tr.t0, tr.t_end + 1e-9, args.step)
            x = tr.position(t)
            v = tr.speed(t)
            a = tr.acceleration(t)
            for ti, xi, vi, ai in zip(t, x, v, a):
                lines.append(f"{lg.index},{ti:.3f},{origin + sign * xi / 1000.0:.6f},{vi:.6f},{ai:.6f}")
        _emit(args, "\n".join(lines) + "\n")
        return 0
    timings = phase_timings(table, window=window_for_horizon(t_max, inp.plan.cycle_time))
    polylines = []
    for lg in chosen:
        tr = lg.trajectory
        t = np.arange(tr.t0, tr.t_end + 1e-9, args.step)
        polylines.append((str(lg.index), t, origin + sign * tr.position(t) / 1000.0))
    _emit(args, diagram_svg(table, timings, polylines, t_max, inp.manifest))
    return 0


def build_parser() -> argparse.ArgumentParser:
    def global_flags(default):
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--out", default=default, help="write the main output here instead of standard output")
        g.add_argument("--seed", type=int, default=default, help="random seed (optimizer, scenario draw)")
        g.add_argument("--cycle-time", type=float, default=default, help="cycle time in seconds (default: the plan's)")
        return g

    # accepted before or after the subcommand; the subcommand copy must not reset them
    top = global_flags(None)
    common = global_flags(argparse.SUPPRESS)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--corridor", help="corridor CSV (default: shipped Telegraph Road)")
    data.add_argument("--plan", help="node plan JSON (default: shipped Telegraph Road plan)")

    limits = argparse.ArgumentParser(add_help=False)
    limits.add_argument("--speed-band", type=float, default=16.0, help="allowed |v_g - limit| in km/h")
    limits.add_argument("--v-min", type=float, default=None)
    limits.add_argument("--v-max", type=float, default=None)
    limits.add_argument("--xi-max", type=float, default=0.45)

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--scenario", default="sim1", help="scenario JSON file or shipped name")
    sim.add_argument("--baseline", type=float, default=datasets.TELEGRAPH_BASELINE_S, help="delay baseline in seconds")
    sim.add_argument("--step", type=float, default=1.0, help="sampling step of emitted trajectories (s)")

    p = argparse.ArgumentParser(prog="greenwave", description="Green-wave signal timing for arterial corridors.", parents=[top])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("plan", parents=[common, data], help="timing table CSV")
    s.add_argument("--full-precision", action="store_true", help="write full float precision")
    s.add_argument("--xi-max", type=float, default=None)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("eta", parents=[common, data, limits], help="placement objective and constraint check")
    s.set_defaults(func=cmd_eta)

    s = sub.add_parser("optimize", parents=[common, data, limits], help="search virtual node placement")
    s.add_argument("--max-iterations", type=int, default=None)
    s.add_argument("--trace", help="write the objective trace CSV here")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("flow-curve", parents=[common], help="Greenberg speed/flow curve CSV")
    s.add_argument("--step", type=float, default=1.0, help="density step (veh/km)")
    s.set_defaults(func=cmd_flow_curve)

    s = sub.add_parser("waves", parents=[common, data], help="green-arrow intervals CSV")
    s.add_argument("--t-max", type=float, default=1200.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--phases", help="also write per-site phase timelines here")
    s.set_defaults(func=cmd_waves)

    s = sub.add_parser("simulate", parents=[common, data, sim], help="run a scenario, emit metrics JSON")
    s.add_argument("--trajectories", help="write per-vehicle trajectory CSV here")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("diagram", parents=[common, data, sim], help="time-space diagram (SVG or CSV)")
    s.add_argument("--vehicles", default=None, help="comma-separated vehicle indices, 'all' or 'none'")
    s.add_argument("--format", choices=("svg", "csv"), default="svg")
    s.set_defaults(func=cmd_diagram)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"greenwave: error: {exc}", file=sys.stderr)
        return 2
    except (CorridorFormatError, PlanError, ScenarioError, DomainError) as exc:
        print(f"greenwave: invalid input: {exc}", file=sys.stderr)
        return 2
    except GreenWaveError as exc:
        print(f"greenwave: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"greenwave: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
