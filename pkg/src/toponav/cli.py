"""Command line entry point: ``run``, ``sweep-gamma``, ``eval-waypoints``, ``plot``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness.config import load_config
from .harness.fixtures import SUITES, suite_path
from .harness.scenario import ScenarioError, load_scenario
from .harness.suite import (
    evaluate_reference_waypoints,
    gamma_sweep,
    run_suite,
    write_results,
    write_traces,
)

EXIT_SCENARIO = 2


def _scenario_paths(names) -> list[Path]:
    """Paths, bundled suite names, or ``full`` for all bundled suites."""
    out = []
    for name in names or ["full"]:
        if name == "full":
            out += [suite_path(k) for k in SUITES]
        elif name in SUITES and not Path(name).exists():
            out.append(suite_path(name))
        else:
            out.append(Path(name))
    return out


def _load(paths):
    return [load_scenario(p) for p in paths]


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    for name in ("gamma", "seed", "sliding", "chassis_radius", "max_goal_predictions"):
        value = getattr(args, name, None)
        if value is not None:
            changes[name] = value
    if getattr(args, "tryout", None) is not None:
        changes["tryout"] = args.tryout == "on"
    if getattr(args, "delete_ghosts", None) is not None:
        changes["delete_ghosts"] = args.delete_ghosts == "on"
    return cfg.replace(**changes)


def _emit(lines, out):
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    paths = _scenario_paths(args.scenario)
    scenarios = _load(paths)
    cfg = _config(args)
    runs = []
    for path, sc in zip(paths, scenarios):
        run = run_suite(sc, args.policy, cfg, args.parallelism)
        runs.append(run)
        if args.traces:
            write_traces(run, args.traces, str(path))
    if args.out:
        write_results(runs, args.out)
    for run in runs:
        print(run.lines()[-1])
    return 0


def cmd_sweep_gamma(args) -> int:
    scenarios = _load(_scenario_paths(args.scenario or ["allowed"]))
    values = [float(v) for v in args.values.split(",") if v.strip()]
    sweep = gamma_sweep(scenarios, values, args.policy, _config(args), args.parallelism)
    lines = [
        f"gamma: value={g!r} node_count={s['node_count']!r} SR={s['SR']!r} SPL={s['SPL']!r} "
        f"episodes={s['episodes']} errors={s['errors']}"
        for g, s in sweep
    ]
    nodes = [s["node_count"] for _, s in sweep]
    trend = all(b <= a for a, b in zip(nodes, nodes[1:]))
    lines.append(f"trend: node_count_non_increasing={'yes' if trend else 'no'}")
    _emit(lines, args.out)
    return 0


def cmd_eval_waypoints(args) -> int:
    lines = []
    for sc in _load(_scenario_paths(args.scenario)):
        rows = evaluate_reference_waypoints(sc, _config(args))
        for eid, pose, ev in rows:
            lines.append(
                f"waypoints: scenario={sc.name} episode={eid} pose={','.join(repr(float(v)) for v in pose)} "
                f"count_diff={ev.count_diff} percent_open={ev.percent_open!r} "
                f"chamfer={ev.chamfer!r} hausdorff={ev.hausdorff!r}")
    if not lines:
        print("no reference waypoint sets found", file=sys.stderr)
        return EXIT_SCENARIO
    _emit(lines, args.out)
    return 0


def cmd_plot(args) -> int:
    from .harness.plot import plot_trace, read_trace

    records = read_trace(args.trace)
    source = args.scenario or records[0].get("scenario")
    world = load_scenario(source).world if source else None
    print(plot_trace(records, args.out, world))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="toponav", description="Topological-map navigation on occupancy-grid worlds.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_help="scenario file or bundled suite name (allowed, forbidden, deadlock, full)"):
        sp.add_argument("--scenario", action="append", help=scenario_help + "; repeatable")
        sp.add_argument("--config", help="INI file with a [run] section")
        sp.add_argument("--policy", default="teacher",
                        choices=("teacher", "teacher_r2r", "teacher_rxr", "gasa", "random", "adversarial"))
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--sliding", choices=("allowed", "forbidden"))
        sp.add_argument("--tryout", choices=("on", "off"))
        sp.add_argument("--delete-ghosts", choices=("on", "off"))
        sp.add_argument("--chassis-radius", type=float)
        sp.add_argument("--max-goal-predictions", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--parallelism", type=int, default=1)
        sp.add_argument("--out", help="results file (default: stdout)")

    run = sub.add_parser("run", help="run episodes and write a results file")
    common(run)
    run.add_argument("--traces", help="directory for per-episode JSON-lines traces")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep-gamma", help="mean node count per localization threshold")
    common(sweep)
    sweep.add_argument("--values", default="0.25,0.5,0.75,1.0")
    sweep.set_defaults(func=cmd_sweep_gamma)

    ev = sub.add_parser("eval-waypoints", help="score predicted waypoints against reference sets")
    common(ev)
    ev.set_defaults(func=cmd_eval_waypoints)

    plot = sub.add_parser("plot", help="render a trace to an image (format from --out suffix)")
    plot.add_argument("--trace", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--scenario", help="scenario for the background grid (default: recorded in trace)")
    plot.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
