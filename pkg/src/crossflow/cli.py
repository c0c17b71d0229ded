"""Command-line front end.

Subcommands wire the simulator, the flow-path analyses, the self-tuning
dependence engine, and the metrics into reproducible batch workflows.  All
randomness flows from explicit seeds; outputs are byte-identical across
reruns of the same invocation.

Exit codes: 0 success (possibly empty results), 2 usage, 3 data or format
error, 4 invalid analysis configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

OUT_DIR_ENV = "CROSSFLOW_OUT"

from .config import Configuration, InvalidConfigError
from .engine import (
    ArbiterState,
    Budget,
    CostModel,
    EngineError,
    MethodTable,
    PinnedController,
    QLearnController,
    arbitrate,
    dep_data_from_run,
    merge_query,
    method_event_stream,
    render_round_log,
)
from .metrics import (
    DepData,
    MetricsError,
    attack_surface,
    ipc_metrics,
    path_stats,
    render_correlation_matrix,
    render_ipc_report,
    vulnerableness,
)
from .methodpaths import DependenceSet, render_paths
from .pipeline import MODES, analyze_flows
from .qlearn import LearnerParams
from .simulator import (
    Scenario,
    ScenarioError,
    all_graph_variants,
    generate_program,
    simulate,
)
from .staticgraph import (
    ConfigurationError,
    GraphFormatError,
    SourceSinkConfig,
    read_graph_set,
    write_graph_set,
)
from .stats import DegenerateDataError, kmeans2, spearman
from .stmtpaths import render_stmt_paths, summary_counts
from .trace import MethodId, TraceError, read_bundle, write_bundle

USAGE_ERROR = 2
DATA_ERROR = 3
CONFIG_ERROR = 4


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _method_str(m: MethodId) -> str:
    return m.qualified()


def _parse_method(text: str) -> MethodId:
    parts = text.split(".", 2)
    if len(parts) != 3:
        raise ValueError(f"method must be process.Class.method, got {text!r}")
    return MethodId(*parts)


def _load_scenario(path: Path) -> Scenario:
    data = json.loads(path.read_text(encoding="utf-8"))
    return Scenario(
        topology=data["topology"],
        seed=int(data.get("seed", 0)),
        length=int(data.get("length", 80)),
        tiers=data.get("tiers"),
    )


def _load_cfg(path: Path) -> SourceSinkConfig:
    data = json.loads(path.read_text(encoding="utf-8"))
    return SourceSinkConfig(
        sources=frozenset(data.get("sources", ())),
        sinks=frozenset(data.get("sinks", ())),
        msg_api_list=tuple(data.get("msg_apis", ("net.send", "net.recv"))),
    )


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    scenario = _load_scenario(Path(args.scenario))
    if args.seed is not None:
        scenario = Scenario(
            scenario.topology, int(args.seed), scenario.length, scenario.tiers
        )
    model = generate_program(scenario)
    traces, truth = simulate(model, scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_bundle(
        out / "traces",
        traces,
        {
            "topology": scenario.topology,
            "seed": scenario.seed,
            "length": scenario.length,
            "tiers": scenario.tiers,
        },
    )
    write_graph_set(out / "graphs", all_graph_variants(model))
    with open(out / "groundtruth.jsonl", "w", encoding="utf-8") as fh:
        for m1, m2 in sorted(truth.dyn_dep, key=lambda p: (p[0].sort_key(), p[1].sort_key())):
            fh.write(json.dumps(
                {"type": "dep", "from": _method_str(m1), "to": _method_str(m2)}
            ) + "\n")
        for path in sorted(truth.dyn_paths):
            fh.write(json.dumps({"type": "path", "stmts": list(path)}) + "\n")
    cfg = model.default_cfg()
    (out / "config.json").write_text(
        json.dumps(
            {
                "sources": sorted(cfg.sources),
                "sinks": sorted(cfg.sinks),
                "msg_apis": list(cfg.msg_api_list),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote bundle, graphs, ground truth under {out}")
    return 0


# ---------------------------------------------------------------------------
# flowpaths
# ---------------------------------------------------------------------------


def cmd_flowpaths(args) -> int:
    traces, _ = read_bundle(Path(args.bundle))
    graphs = read_graph_set(Path(args.graphs))
    cfg = _load_cfg(Path(args.config))
    result = analyze_flows(
        traces,
        graphs,
        cfg,
        mode=args.mode,
        path_limit=args.path_limit,
        stmt_path_limit=args.stmt_path_limit,
        strict_splice=args.strict_splice,
        coverage_style=args.coverage,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "phase1.txt").write_text(render_paths(result.phase1.paths), encoding="utf-8")
    (out / "phase2.txt").write_text(render_stmt_paths(result.phase2), encoding="utf-8")
    counts = summary_counts(result.phase2)
    counts["phase1_paths"] = len(result.phase1.paths)
    counts["phase1_truncated"] = int(result.phase1.truncated)
    (out / "summary.txt").write_text(
        "".join(f"{k} {v}\n" for k, v in sorted(counts.items())), encoding="utf-8"
    )
    print(f"wrote flow-path reports under {out}")
    return 0


# ---------------------------------------------------------------------------
# tune
# ---------------------------------------------------------------------------


def cmd_tune(args) -> int:
    traces, _ = read_bundle(Path(args.bundle))
    graphs = read_graph_set(Path(args.graphs))
    budget = Budget.from_total(args.budget)
    costs = (
        CostModel.from_file(Path(args.cost_model))
        if args.cost_model
        else CostModel()
    )
    if args.wallclock:
        costs.mode = "wallclock"
    pinned = None
    if args.pin_config:
        pinned = Configuration.from_string(args.pin_config).require_valid()

    table = MethodTable.from_traces(traces)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    deps_files = {}
    for idx, proc in enumerate(sorted(traces)):
        trace = traces[proc]
        coverage = {
            ev.stmt_id for ev in trace.events if ev.kind == "stmt_cover"
        }
        if pinned is not None:
            controller = PinnedController(pinned)
            state = ArbiterState(
                event_threshold=args.tc, time_threshold=args.tt, config=pinned
            )
        else:
            controller = QLearnController(
                budget.total,
                LearnerParams(epsilon=args.epsilon),
                seed=args.seed * 31 + idx,
                next_state_max=args.next_state_max,
            )
            state = ArbiterState(
                event_threshold=args.tc, time_threshold=args.tt
            )
        rounds = arbitrate(
            method_event_stream(trace, table),
            state, budget, costs, controller, graphs, coverage, table,
            flush=True,
        )
        (out / f"rounds_{proc}.log").write_text(
            render_round_log(rounds), encoding="utf-8"
        )
        if args.dump_qtable and isinstance(controller, QLearnController):
            (out / f"qtable_{proc}.txt").write_text(
                controller.table.dump(), encoding="utf-8"
            )
        final = next((r.deps for r in reversed(rounds) if r.deps is not None), {})
        deps_name = f"deps_{proc}.txt"
        deps_files[proc] = deps_name
        with open(out / deps_name, "w", encoding="utf-8") as fh:
            for method in sorted(final, key=MethodId.sort_key):
                for member in sorted(final[method].members, key=MethodId.sort_key):
                    fh.write(f"dep {_method_str(method)} {_method_str(member)}\n")
    (out / "run.json").write_text(
        json.dumps(
            {
                "bundle": str(args.bundle),
                "graphs": str(args.graphs),
                "budget": args.budget,
                "seed": args.seed,
                "processes": sorted(traces),
                "deps_files": deps_files,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote round logs and dependence maps under {out}")
    return 0


def _load_run(run_dir: Path):
    manifest = json.loads((run_dir / "run.json").read_text(encoding="utf-8"))
    traces, _ = read_bundle(Path(manifest["bundle"]))
    per_process = {}
    for proc, name in manifest["deps_files"].items():
        deps: dict[MethodId, set[MethodId]] = {}
        for line in (run_dir / name).read_text(encoding="utf-8").splitlines():
            parts = line.split()
            if len(parts) != 3 or parts[0] != "dep":
                continue
            method = _parse_method(parts[1])
            member = _parse_method(parts[2])
            deps.setdefault(method, set()).add(member)
        per_process[proc] = {
            method: DependenceSet(method, frozenset(members))
            for method, members in deps.items()
        }
    return manifest, traces, per_process


# ---------------------------------------------------------------------------
# query
# ---------------------------------------------------------------------------


def cmd_query(args) -> int:
    run_dir = Path(args.run)
    _, traces, per_process = _load_run(run_dir)
    parts = args.method.split(".")
    if len(parts) == 2:
        query: MethodId | tuple[str, str] = (parts[0], parts[1])
    else:
        query = _parse_method(args.method)
    merged = merge_query(query, per_process, traces)
    for member in sorted(merged.members, key=MethodId.sort_key):
        print(_method_str(member))
    return 0


# ---------------------------------------------------------------------------
# metrics / quality / correlate / classify
# ---------------------------------------------------------------------------


def _dep_data_from_json(path: Path) -> DepData:
    data = json.loads(path.read_text(encoding="utf-8"))
    parse = _parse_method
    return DepData(
        local_ds={
            parse(k): frozenset(parse(v) for v in vs)
            for k, vs in data.get("local", {}).items()
        },
        remote_ds={
            parse(k): frozenset(parse(v) for v in vs)
            for k, vs in data.get("remote", {}).items()
        },
        executed=frozenset(parse(v) for v in data["executed"]),
        messages={
            (a, b): int(n)
            for a, b, n in (tuple(item) for item in data.get("messages", ()))
        },
    )


def cmd_metrics(args) -> int:
    if args.depdata:
        dep = _dep_data_from_json(Path(args.depdata))
    else:
        _, traces, per_process = _load_run(Path(args.run))
        dep = dep_data_from_run(traces, per_process)
    report = ipc_metrics(dep, table_rcc=args.table_rcc)
    text = render_ipc_report(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_quality(args) -> int:
    lengths = []
    if args.paths_report:
        for line in Path(args.paths_report).read_text(encoding="utf-8").splitlines():
            if line.startswith("path level=stmt"):
                lengths.append(len(line.split("->")))
    count, mean_len = path_stats(lengths, args.ksloc)
    vuln_entries = []
    n_non_nvd = 0
    if args.vulns:
        vdata = json.loads(Path(args.vulns).read_text(encoding="utf-8"))
        n_non_nvd = int(vdata.get("n_non_nvd", 0))
        vuln_entries = [tuple(e) for e in vdata.get("entries", ())]
    vector = {
        "exec_time": args.exec_time,
        "code_churn": args.code_churn,
        "cyclomatic": args.cyclomatic,
        "defect_density": args.defect_density,
        "path_count": count,
        "path_length": mean_len,
        "attack_surface": attack_surface(
            args.endpoints, args.ports, args.files, args.sloc
        ),
        "vulnerableness": vulnerableness(
            n_non_nvd, vuln_entries, corrected=args.vuln_corrected
        ),
    }
    text = json.dumps(vector, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_correlate(args) -> int:
    ipc_rows = json.loads(Path(args.ipc).read_text(encoding="utf-8"))
    quality_rows = json.loads(Path(args.quality).read_text(encoding="utf-8"))
    text = render_correlation_matrix(ipc_rows, quality_rows, spearman)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_classify(args) -> int:
    points = json.loads(Path(args.features).read_text(encoding="utf-8"))
    result = kmeans2(points, seed=args.seed)
    lines = [
        f"point {i} cluster {label}" for i, label in enumerate(result.labels)
    ]
    for i, center in enumerate(result.centers):
        coords = " ".join(f"{c:.10g}" for c in center)
        lines.append(f"center {i} {coords}")
    lines.append(f"inertia {result.inertia:.10g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------


def _add_out(parser: argparse.ArgumentParser, required: bool = True) -> None:
    """--out falls back to the CROSSFLOW_OUT environment variable."""
    env_default = os.environ.get(OUT_DIR_ENV)
    parser.add_argument(
        "--out",
        default=env_default,
        required=required and env_default is None,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossflow",
        description="Trace-driven cross-process information-flow and "
        "dependence analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate traces, graphs, ground truth")
    p.add_argument("--scenario", required=True)
    _add_out(p)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("flowpaths", help="two-phase information flow paths")
    p.add_argument("--bundle", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--mode", choices=MODES, default="default")
    p.add_argument("--path-limit", type=int, default=16)
    p.add_argument("--stmt-path-limit", type=int, default=24)
    p.add_argument("--strict-splice", action="store_true")
    p.add_argument("--coverage", choices=("direct", "branches"), default="direct")
    _add_out(p)
    p.set_defaults(func=cmd_flowpaths)

    p = sub.add_parser("tune", help="self-tuning online dependence analysis")
    p.add_argument("--bundle", required=True)
    p.add_argument("--graphs", required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--tc", type=int, default=10)
    p.add_argument("--tt", type=float, default=0.0)
    p.add_argument("--pin-config", default=None)
    p.add_argument("--cost-model", default=None)
    p.add_argument("--wallclock", action="store_true")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--next-state-max", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-qtable", action="store_true")
    _add_out(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("query", help="merged dependence set for a method")
    p.add_argument("--run", required=True)
    p.add_argument("--method", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("metrics", help="IPC coupling/cohesion report")
    p.add_argument("--run")
    p.add_argument("--depdata")
    p.add_argument("--table-rcc", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("quality", help="assemble a quality metric vector")
    p.add_argument("--paths-report", default=None)
    p.add_argument("--ksloc", type=float, default=1.0)
    p.add_argument("--sloc", type=float, default=1000.0)
    p.add_argument("--endpoints", type=int, default=0)
    p.add_argument("--ports", type=int, default=0)
    p.add_argument("--files", type=int, default=0)
    p.add_argument("--vulns", default=None)
    p.add_argument("--vuln-corrected", action="store_true")
    p.add_argument("--exec-time", type=float, default=0.0)
    p.add_argument("--code-churn", type=float, default=0.0)
    p.add_argument("--cyclomatic", type=float, default=0.0)
    p.add_argument("--defect-density", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_quality)

    p = sub.add_parser("correlate", help="IPC x quality Spearman matrix")
    p.add_argument("--ipc", required=True)
    p.add_argument("--quality", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("classify", help="two-cluster feature classification")
    p.add_argument("--features", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "metrics" and not (args.run or args.depdata):
        parser.error("metrics needs --run or --depdata")
    try:
        return args.func(args)
    except (ScenarioError, ConfigurationError) as exc:
        return _fail(USAGE_ERROR, str(exc))
    except InvalidConfigError as exc:
        return _fail(
            CONFIG_ERROR,
            f"{exc} (invalid masks: 001xxx, 010xxx, 011xxx, 0xxx1x, xxx0x1, 000000)",
        )
    except (EngineError, DegenerateDataError) as exc:
        return _fail(CONFIG_ERROR, str(exc))
    except (TraceError, GraphFormatError, MetricsError, json.JSONDecodeError) as exc:
        return _fail(DATA_ERROR, str(exc))
    except FileNotFoundError as exc:
        return _fail(USAGE_ERROR, f"missing file: {exc.filename}")
    except (KeyError, ValueError) as exc:
        return _fail(DATA_ERROR, f"bad input data: {exc}")


if __name__ == "__main__":
    sys.exit(main())
