"""Command-line workflow driver.

Subcommands: validate, optimize, analyze, simulate, compare,
synth-scenario. A run-configuration JSON names the task graph, power
parameters, frequency ladder, deadline mapping, scenarios, and methods;
see the bundled `waters_config.json` and the README for the schema.
Outputs are bit-reproducible: data files carry no timestamps, and tool
metadata goes to a separate run_meta.json.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources

from . import __version__
from .deadlines import DeadlineMap, deadline_from_velocity, velocity_deadline_ns
from .errors import DyndlError
from .modechange import summarize_margins, transition_matrix, write_transition_csv
from .optimizer import (
    FrequencyLadder,
    ModeTable,
    baseline_table,
    derive_dmax,
    optimize_multi_mode,
    optimize_single_mode,
    quantize_speeds,
    static_table,
)
from .plots import grouped_bar_svg, timeline_svg
from .power import PowerParams, SystemConfig, normalized_dynamic_power
from .scenario import (
    Scenario,
    load_scenario,
    save_scenario,
    synthesize_constant,
    synthesize_ramp,
    synthesize_random,
    synthesize_square,
)
from .simulator import SimOptions, SimTrace, simulate, summarize, write_trace_csv
from .taskgraph import TaskGraph, enumerate_paths, load_graph, validate_graph

NS_PER_S = 1_000_000_000
NS_PER_MS = 1_000_000

KMH_TO_MPS = 1.0 / 3.6

METHODS = ("baseline", "static", "multimode")


@dataclass
class RunConfig:
    graph: TaskGraph
    params: PowerParams
    ladder: FrequencyLadder
    lambda_m: float
    a_max_mps2: float
    mode_count: int
    d_min_ns: int
    d_max_ns: int | None  # None means derive
    scenario_specs: list[str]
    methods: list[str]
    horizon_ns: int
    sensor_period_ns: int
    out_dir: str


def _bundled(name: str):
    return resources.files("dyndl.data").joinpath(name)


def load_graph_ref(ref: str) -> TaskGraph:
    if ref == "waters":
        with resources.as_file(_bundled("waters_graph.json")) as p:
            return load_graph(p)
    return load_graph(ref)


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        doc = json.load(fh)
    graph = load_graph_ref(doc["graph"])
    ladder_doc = doc.get("ladder", {})
    if "levels" in ladder_doc:
        ladder = FrequencyLadder(tuple(float(v) for v in ladder_doc["levels"]))
    else:
        ladder = FrequencyLadder.evenly_spaced(
            ladder_doc.get("f_min_mhz", 345.0),
            ladder_doc.get("f_max_mhz", 2000.0),
            ladder_doc.get("count", 12),
        )
    pw = doc.get("power", {})
    params = PowerParams(
        alpha_mw=pw.get("alpha_mw", 842.04),
        beta_mw=pw.get("beta_mw", 232.81),
        gamma=pw.get("gamma", 2.64),
        s_min=pw.get("s_min", ladder.s_min),
    )
    dl = doc.get("deadline", {})
    lambda_m = dl.get("lambda_m", 20.0)
    a_max = dl.get("a_max_mps2", 2.5)
    mode_count = dl.get("mode_count", 24)
    if "d_min_ns" in dl:
        d_min_ns = int(dl["d_min_ns"])
    else:
        v_max = dl.get("v_max_kmh", 114.0) * KMH_TO_MPS
        d_min_ns = velocity_deadline_ns(v_max, lambda_m, a_max)
    d_max_raw = dl.get("d_max_ns", "derive")
    d_max_ns = None if d_max_raw == "derive" else int(d_max_raw)
    out_dir = doc.get("out_dir") or os.environ.get("DYNDL_OUT", "out")
    return RunConfig(
        graph=graph,
        params=params,
        ladder=ladder,
        lambda_m=lambda_m,
        a_max_mps2=a_max,
        mode_count=mode_count,
        d_min_ns=d_min_ns,
        d_max_ns=d_max_ns,
        scenario_specs=list(doc.get("scenarios", [])),
        methods=list(doc.get("methods", list(METHODS))),
        horizon_ns=int(doc.get("horizon_s", 60) * NS_PER_S),
        sensor_period_ns=int(doc.get("sensor_period_ms", 200)) * NS_PER_MS,
        out_dir=out_dir,
    )


def parse_scenario_spec(spec: str, horizon_ns: int) -> Scenario:
    """File path, or synth:constant:V | synth:ramp:V0:V1 |
    synth:square:V_LO:V_HI:PERIOD_S | synth:random:SEED (velocities m/s)."""
    if spec.startswith("synth:"):
        parts = spec.split(":")
        kind = parts[1]
        if kind == "constant":
            return synthesize_constant(float(parts[2]), horizon_ns)
        if kind == "ramp":
            return synthesize_ramp(float(parts[2]), float(parts[3]), horizon_ns)
        if kind == "square":
            return synthesize_square(
                float(parts[2]), float(parts[3]), int(float(parts[4]) * NS_PER_S), horizon_ns
            )
        if kind == "random":
            return synthesize_random(int(parts[2]), horizon_ns)
        raise DyndlError(f"unknown synthetic scenario kind {kind!r}")
    if spec.startswith("kmh:"):
        return load_scenario(spec[4:], units="kmh")
    if spec == "lowspeed":
        with resources.as_file(_bundled("scenario_lowspeed.csv")) as p:
            return load_scenario(p)
    return load_scenario(spec)


def _write_meta(out_dir: str, argv: list[str]) -> None:
    with open(os.path.join(out_dir, "run_meta.json"), "w") as fh:
        json.dump({"tool": "dyndl", "version": __version__, "argv": argv}, fh, indent=2)


def _deadline_map(cfg: RunConfig, d_max_ns: int) -> DeadlineMap:
    return DeadlineMap.build(cfg.lambda_m, cfg.a_max_mps2, cfg.d_min_ns, d_max_ns,
                             cfg.mode_count)


def _single_mode_map(cfg: RunConfig, table: ModeTable) -> DeadlineMap:
    d_min = table.mode_deadlines_ns[0]
    return DeadlineMap(cfg.lambda_m, cfg.a_max_mps2, d_min, d_min + 1, (d_min,))


# --- subcommands ---

def cmd_validate(args) -> int:
    graph = load_graph_ref(args.graph)
    report = validate_graph(graph)
    print(report.to_json() if args.json else str(report))
    return 0 if report.ok else 1


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    d_max = cfg.d_max_ns or derive_dmax(cfg.graph, cfg.params)
    dmap = _deadline_map(cfg, d_max)
    print(f"deadline range: [{cfg.d_min_ns / 1e6:.1f}, {d_max / 1e6:.1f}] ms, "
          f"{cfg.mode_count} modes")

    table = optimize_multi_mode(cfg.graph, cfg.params, dmap.mode_deadlines_ns)
    quant = quantize_speeds(table, cfg.ladder)
    static = static_table(cfg.graph, cfg.params, cfg.d_min_ns)
    base = baseline_table(cfg.graph, cfg.params, static)
    for name, tbl in (("mode_table_continuous", table), ("mode_table_quantized", quant),
                      ("static_table", static), ("baseline_table", base)):
        with open(os.path.join(out, name + ".json"), "w") as fh:
            fh.write(tbl.to_json())
            fh.write("\n")

    # per-mode normalized dynamic power (fully loaded full-speed CPU = 100%)
    rows = []
    for j in range(1, cfg.mode_count + 1):
        single = optimize_single_mode(cfg.graph, cfg.params, dmap.mode_deadlines_ns[j - 1])
        rows.append({
            "mode": j,
            "deadline_ms": dmap.mode_deadlines_ns[j - 1] / 1e6,
            "baseline": 100.0,
            "static": 100.0 * normalized_dynamic_power(static.mode_config(1), cfg.graph, cfg.params),
            "single_mode": 100.0 * normalized_dynamic_power(single, cfg.graph, cfg.params),
            "multi_mode": 100.0 * normalized_dynamic_power(table.mode_config(j), cfg.graph, cfg.params),
            "multi_mode_quantized": 100.0 * normalized_dynamic_power(quant.mode_config(j), cfg.graph, cfg.params),
        })
    with open(os.path.join(out, "power_by_mode.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    grouped_bar_svg(
        os.path.join(out, "power_by_mode.svg"),
        [str(r["mode"]) for r in rows],
        {
            "baseline": [r["baseline"] for r in rows],
            "static": [r["static"] for r in rows],
            "single mode": [r["single_mode"] for r in rows],
            "multi mode": [r["multi_mode"] for r in rows],
        },
        title="Normalized dynamic power by mode",
        y_label="% of full-speed fully-loaded dynamic power",
    )
    _write_meta(out, sys.argv[1:])
    print(f"mode 1 normalized dynamic power: {rows[0]['multi_mode']:.1f}%")
    print(f"mode {cfg.mode_count}: {rows[-1]['multi_mode']:.1f}%")
    print(f"tables and power_by_mode.{{csv,svg}} written to {out}/")
    return 0


def cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    with open(args.table) as fh:
        table = ModeTable.from_json(fh.read())
    paths = enumerate_paths(cfg.graph)
    analyses = transition_matrix(table, paths)
    write_transition_csv(analyses, os.path.join(out, "transitions.csv"))
    summary = summarize_margins(analyses)
    with open(os.path.join(out, "transition_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    _write_meta(out, sys.argv[1:])
    print(json.dumps(summary, indent=2))
    return 0


def _table_for_method(method: str, tables_dir: str, discrete: bool) -> ModeTable:
    if method == "multimode":
        name = "mode_table_quantized.json" if discrete else "mode_table_continuous.json"
    elif method == "static":
        name = "static_table.json"
    else:
        name = "baseline_table.json"
    with open(os.path.join(tables_dir, name)) as fh:
        table = ModeTable.from_json(fh.read())
    return table


def _run_one(cfg: RunConfig, table: ModeTable, scenario: Scenario,
             discrete: bool) -> SimTrace:
    if table.mode_count > 1:
        dmap = _deadline_map(cfg, cfg.d_max_ns)
    else:
        dmap = _single_mode_map(cfg, table)
    if discrete and not table.quantized and table.mode_count > 1:
        table = quantize_speeds(table, cfg.ladder)
    opts = SimOptions(horizon_ns=cfg.horizon_ns, sensor_period_ns=cfg.sensor_period_ns)
    return simulate(cfg.graph, table, dmap, scenario, cfg.params, opts)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if cfg.d_max_ns is None:
        cfg.d_max_ns = derive_dmax(cfg.graph, cfg.params)
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    with open(args.table) as fh:
        table = ModeTable.from_json(fh.read())
    scenario = parse_scenario_spec(args.scenario, cfg.horizon_ns)
    trace = _run_one(cfg, table, scenario, discrete=False)
    write_trace_csv(trace, out)
    report = summarize(trace, cfg.params, trace)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    _emit_timeline(cfg, table, scenario, trace, os.path.join(out, "timeline.svg"))
    _write_meta(out, sys.argv[1:])
    print(f"energy: {trace.energy_j:.3f} J over {trace.horizon_ns / 1e9:.0f} s; "
          f"{len(trace.mode_events)} mode changes; "
          f"{len(trace.violations)} violations; "
          f"{len(trace.deadline_misses)} deadline misses")
    return 0 if not trace.violations and not trace.deadline_misses else 2


def _emit_timeline(cfg: RunConfig, table: ModeTable, scenario: Scenario,
                   trace: SimTrace, path: str) -> None:
    dmap = _deadline_map(cfg, cfg.d_max_ns) if table.mode_count > 1 \
        else _single_mode_map(cfg, table)
    requirement = []
    step = max(cfg.horizon_ns // 600, 1)
    for t in range(0, cfg.horizon_ns, step):
        requirement.append((t, deadline_from_velocity(scenario.velocity_at(t), dmap)))
    guaranteed = [(0, dmap.mode_deadlines_ns[trace.initial_mode - 1])]
    for ev in trace.mode_events:
        guaranteed.append((ev.trigger_ns, dmap.mode_deadlines_ns[ev.to_mode - 1]))
    transient = []
    for ev in trace.mode_events:
        if ev.protocol == "AEAP" and ev.completed_ns is not None:
            from .modechange import worst_transition_delay
            paths = enumerate_paths(cfg.graph)
            _, delay = worst_transition_delay(
                table.periods_ns[ev.from_mode_eff - 1],
                table.periods_ns[ev.to_mode - 1], paths)
            transient.append((ev.trigger_ns, ev.completed_ns, delay))
    bins = 300
    bin_ns = max(1, cfg.horizon_ns // bins)
    acc = [0.0] * bins
    for seg in trace.segments:
        power = cfg.params.busy_power_mw(seg.speed) - cfg.params.idle_power_mw()
        b0 = min(seg.start_ns // bin_ns, bins - 1)
        b1 = min((seg.end_ns - 1) // bin_ns, bins - 1)
        for b in range(b0, b1 + 1):
            lo = max(seg.start_ns, b * bin_ns)
            hi = min(seg.end_ns, (b + 1) * bin_ns)
            acc[b] += power * max(0, hi - lo)
    power_mw = [(b * bin_ns, cfg.params.idle_power_mw() + acc[b] / bin_ns)
                for b in range(bins)]
    timeline_svg(path, cfg.horizon_ns, requirement, guaranteed, transient, power_mw,
                 title=f"{scenario.name}: deadlines and power")


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    if cfg.d_max_ns is None:
        cfg.d_max_ns = derive_dmax(cfg.graph, cfg.params)
    tables_dir = args.tables or cfg.out_dir
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    specs = list(cfg.scenario_specs)
    if args.random_scenarios:
        specs += [f"synth:random:{args.seed + k}" for k in range(args.random_scenarios)]
    if not specs:
        print("no scenarios configured", file=sys.stderr)
        return 1
    rows = []
    all_clean = True
    for spec in specs:
        scenario = parse_scenario_spec(spec, cfg.horizon_ns)
        for method in cfg.methods:
            for discrete in (False, True):
                table = _table_for_method(method, tables_dir, discrete)
                trace = _run_one(cfg, table, scenario, discrete)
                ok = not trace.violations and not trace.deadline_misses
                all_clean = all_clean and ok
                rows.append({
                    "scenario": scenario.name,
                    "method": method,
                    "frequency": "discrete" if discrete else "continuous",
                    "energy_j": trace.energy_j,
                    "violations": len(trace.violations),
                    "requirement_exceedances": len(trace.requirement_exceedances),
                    "deadline_misses": len(trace.deadline_misses),
                    "mode_changes": len(trace.mode_events),
                })
                print(f"{scenario.name:>24} {method:>10} "
                      f"{'disc' if discrete else 'cont'}: "
                      f"{trace.energy_j:8.3f} J, {len(trace.mode_events):3d} mode changes, "
                      f"{len(trace.violations)} violations")
    with open(os.path.join(out, "energy_compare.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    scenarios = sorted({r["scenario"] for r in rows})
    series = {}
    for method in cfg.methods:
        for freq in ("continuous", "discrete"):
            vals = []
            for sc in scenarios:
                vals += [r["energy_j"] for r in rows
                         if r["scenario"] == sc and r["method"] == method
                         and r["frequency"] == freq]
            series[f"{method} ({freq})"] = vals
    grouped_bar_svg(os.path.join(out, "energy_compare.svg"), scenarios, series,
                    title="Energy by scenario and method", y_label="energy (J)")
    _write_meta(out, sys.argv[1:])
    return 0 if all_clean else 2


def cmd_synth_scenario(args) -> int:
    horizon_ns = int(args.horizon_s * NS_PER_S)
    if args.kind == "constant":
        sc = synthesize_constant(args.v, horizon_ns)
    elif args.kind == "ramp":
        sc = synthesize_ramp(args.v, args.v2, horizon_ns)
    elif args.kind == "square":
        sc = synthesize_square(args.v, args.v2, int(args.period_s * NS_PER_S), horizon_ns)
    else:
        sc = synthesize_random(args.seed, horizon_ns)
    save_scenario(sc, args.out)
    print(f"wrote {args.out} ({len(sc.samples)} samples)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dyndl",
        description="Multi-mode period/speed optimization and EDF replay "
                    "for velocity-dependent end-to-end deadlines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a task graph file")
    p.add_argument("--graph", required=True, help="graph JSON path or 'waters'")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("optimize", help="solve mode tables and power by mode")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("analyze", help="mode-change transition matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("simulate", help="replay one scenario through the EDF runtime")
    p.add_argument("--config", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--scenario", required=True, help="CSV path or synth:... spec")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="energy comparison across scenarios and methods")
    p.add_argument("--config", required=True)
    p.add_argument("--tables", default=None, help="directory with optimize outputs")
    p.add_argument("--out", default=None)
    p.add_argument("--random-scenarios", type=int, default=0,
                   help="append N seeded random scenarios")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("synth-scenario", help="write a synthetic velocity CSV")
    p.add_argument("--kind", choices=("constant", "ramp", "square", "random"),
                   required=True)
    p.add_argument("--v", type=float, default=8.0, help="velocity (m/s)")
    p.add_argument("--v2", type=float, default=25.0, help="second velocity (ramp/square)")
    p.add_argument("--period-s", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon-s", type=float, default=60.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth_scenario)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DyndlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
