"""Command-line front end: single runs, sweeps, verification, audits.

Exit codes: 0 all matched/passed, 1 usage or configuration error,
2 stabilization or verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional, Sequence

from . import __version__
from .catalog import ConfigError, counts_of, parse_inputs, resolve_protocol
from .engine import (
    GraphError,
    build_graph,
    measure_meeting_time,
    parse_rewire,
    run,
    write_trace,
)
from .oracle import scaling_report, verify_exhaustive, audit_memory

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILURE = 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=10_000_000)
    p.add_argument("--confirm-window", type=int, default=None)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--rewire", default="none", help="none | swap:p")
    p.add_argument("--trace", default=None, help="write the activation trace here")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", default=None, help="write records here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anonet",
        description="simulate and verify bounded-memory gossip protocols",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--config",
        default=None,
        help="flat key=value file mirroring the long flags; CLI overrides it",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one protocol run")
    p_run.add_argument("--protocol", required=True)
    p_run.add_argument("--graph", required=True)
    p_run.add_argument("--input", required=True)
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="grid of runs with a scaling fit")
    p_sweep.add_argument("--protocol", required=True)
    p_sweep.add_argument("--graph", required=True, help="family: complete|cycle|path|star|gnp:p")
    p_sweep.add_argument("--sizes", required=True, help="comma-separated n grid")
    p_sweep.add_argument("--seeds", type=int, default=20, help="seeds per size")
    p_sweep.add_argument("--input", default="0:50%,1:rest")
    p_sweep.add_argument("--summary", default=None, help="write summary JSON here")
    _add_common(p_sweep)

    p_verify = sub.add_parser("verify", help="exhaustive stabilization check")
    p_verify.add_argument("--protocol", required=True)
    p_verify.add_argument("--graph", required=True)
    group = p_verify.add_mutually_exclusive_group(required=True)
    group.add_argument("--input")
    group.add_argument("--all-inputs", action="store_true")
    p_verify.add_argument("--max-configs", type=int, default=10_000_000)
    _add_common(p_verify)

    p_audit = sub.add_parser("audit", help="memory budget audit")
    p_audit.add_argument("protocols", nargs="+")
    p_audit.add_argument("--n", type=int, default=8)
    _add_common(p_audit)
    p_audit.set_defaults(format="table")  # human table unless --format json

    p_meet = sub.add_parser("meet", help="token meeting-time statistics")
    p_meet.add_argument("--graph", nargs="+", required=True)
    p_meet.add_argument("--trials", type=int, default=200)
    _add_common(p_meet)

    return parser


def _load_config_defaults(argv: Sequence[str], parser: argparse.ArgumentParser):
    """Two-phase parse so a key=value config file provides defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv
    overrides = []
    try:
        with open(known.config, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{known.config}:{lineno}: expected key=value")
                key, value = line.split("=", 1)
                overrides.append((key.strip(), value.strip()))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {known.config}: {exc}") from exc
    # config entries become leading arguments so explicit flags win
    argv = list(argv)
    insert_at = 1 if argv and argv[0] in _subcommands(parser) else 0
    extra = []
    for key, value in overrides:
        extra.extend([f"--{key}", value])
    return argv[:insert_at] + extra + argv[insert_at:]


def _subcommands(parser) -> set:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return set(action.choices)
    return set()


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _histogram(outputs) -> dict:
    hist: dict = {}
    for o in outputs:
        hist[str(o)] = hist.get(str(o), 0) + 1
    return dict(sorted(hist.items()))


def cmd_run(args) -> int:
    resolved = resolve_protocol(args.protocol)
    graph = build_graph(args.graph, seed=args.seed)
    inputs = parse_inputs(args.input, graph.n, resolved.protocol.colors, seed=args.seed)
    counts = counts_of(inputs, resolved.protocol.colors)
    try:
        expected = resolved.oracle_fn(counts)
    except ValueError as exc:
        raise ConfigError(f"tie, unsupported: {exc}") from exc
    empty = expected is None
    run_expected = 0 if empty else expected
    result = run(
        resolved.protocol,
        graph,
        inputs,
        seed=args.seed,
        max_steps=args.max_steps,
        confirmation_window=args.confirm_window,
        expected=run_expected,
        rewire_policy=parse_rewire(args.rewire),
        rate=args.rate,
        record_trace=args.trace is not None,
    )
    if args.trace:
        write_trace(args.trace, result.trace)
    record = {
        "schema_version": SCHEMA_VERSION,
        "protocol": args.protocol,
        "graph": args.graph,
        "n": graph.n,
        "edges": graph.m,
        "seed": args.seed,
        "first_correct_step": result.first_correct_step,
        "stabilized": result.stabilized,
        "total_steps": result.total_steps,
        "elapsed_time": result.elapsed_time,
        "outputs_histogram": _histogram(result.final_outputs),
        "oracle_value": expected,
        "match": bool(result.matched),
        "empty": empty,
    }
    _emit(args, json.dumps(record, sort_keys=True))
    return EXIT_OK if (result.stabilized and result.matched) else EXIT_FAILURE


def cmd_sweep(args) -> int:
    resolved = resolve_protocol(args.protocol)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not sizes:
        raise ConfigError("empty size grid")
    family = args.graph
    rows = []
    samples: dict = {}
    excluded = 0
    failures = 0
    for n in sizes:
        spec = f"gnp:{n}:{family.split(':', 1)[1]}" if family.startswith("gnp:") else f"{family}:{n}"
        samples[n] = []
        for seed in range(args.seeds):
            try:
                graph = build_graph(spec, seed=seed)
                inputs = parse_inputs(args.input, graph.n, resolved.protocol.colors, seed=seed)
                counts = counts_of(inputs, resolved.protocol.colors)
                expected = resolved.oracle_fn(counts)
                result = run(
                    resolved.protocol,
                    graph,
                    inputs,
                    seed=seed,
                    max_steps=args.max_steps,
                    confirmation_window=args.confirm_window,
                    expected=0 if expected is None else expected,
                    rewire_policy=parse_rewire(args.rewire),
                    rate=args.rate,
                )
            except (ConfigError, GraphError) as exc:
                rows.append([args.protocol, n, "", spec, seed, "", "", f"error:{exc}"])
                failures += 1
                continue
            rows.append(
                [
                    args.protocol,
                    n,
                    graph.m,
                    spec,
                    seed,
                    "" if result.first_correct_step is None else result.first_correct_step,
                    result.total_steps,
                    result.stabilized,
                ]
            )
            if result.stabilized and result.first_correct_step is not None:
                samples[n].append(max(1, result.first_correct_step))
            else:
                excluded += 1
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["protocol", "n", "edges", "graph", "seed", "first_correct_step", "total_steps", "stabilized"]
    )
    writer.writerows(rows)
    _emit(args, buf.getvalue().rstrip("\n"))
    summary: dict = {
        "schema_version": SCHEMA_VERSION,
        "protocol": args.protocol,
        "graph_family": family,
        "sizes": sizes,
        "seeds": args.seeds,
        "excluded_runs": excluded,
    }
    try:
        fit = scaling_report(samples)
        summary["exponent"] = fit.exponent
        summary["exponent_stderr"] = fit.stderr
        summary["means"] = dict(zip([str(s) for s in fit.sizes], fit.means))
    except ValueError as exc:
        summary["exponent"] = None
        summary["fit_error"] = str(exc)
    text = json.dumps(summary, sort_keys=True)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=sys.stderr)
    return EXIT_FAILURE if (excluded or failures) else EXIT_OK


def cmd_verify(args) -> int:
    resolved = resolve_protocol(args.protocol)
    graph = build_graph(args.graph, seed=args.seed)
    colors = resolved.protocol.colors
    if args.all_inputs:
        if colors ** graph.n > 1 << 22:
            raise ConfigError(f"{colors}^{graph.n} inputs is too many to enumerate")
        input_sets = []
        for code in range(colors**graph.n):
            vals = []
            x = code
            for _ in range(graph.n):
                vals.append(x % colors)
                x //= colors
            input_sets.append(vals)
    else:
        input_sets = [parse_inputs(args.input, graph.n, colors, seed=args.seed)]
    any_fail = False
    lines = []
    for inputs in input_sets:
        counts = counts_of(inputs, colors)
        try:
            expected = resolved.oracle_fn(counts)
        except ValueError as exc:  # e.g. plurality tie
            lines.append(json.dumps({"input": "".join(map(str, inputs)), "verdict": "SKIPPED", "reason": str(exc)}))
            continue
        if expected is None:
            expected = 0
        res = verify_exhaustive(
            resolved.protocol, graph, inputs, expected, max_configs=args.max_configs
        )
        if res.verdict == "FAIL":
            any_fail = True
        lines.append(json.dumps(res.record(args.protocol, args.graph, inputs), sort_keys=True))
    _emit(args, "\n".join(lines))
    return EXIT_FAILURE if any_fail else EXIT_OK


def cmd_audit(args) -> int:
    lines = []
    violation = False
    for spec in args.protocols:
        resolved = resolve_protocol(spec)
        proto = resolved.protocol
        n = args.n
        graphs = [build_graph(f"complete:{n}"), build_graph(f"cycle:{max(3, n)}")]
        input_sets = []
        for r in range(n + 1):
            if proto.colors == 2:
                input_sets.append([0] * r + [1] * (n - r))
            else:
                base = [(i % proto.colors) for i in range(n)]
                input_sets.append(sorted(base))
                break
        note = "output register adds one bit over the counter tuple" if resolved.kind == "bit" else ""
        report = audit_memory(proto, graphs, input_sets, note=note)
        if args.format == "json":
            lines.append(
                json.dumps(
                    {
                        "protocol": report.protocol,
                        "declared_bits": report.declared_bits,
                        "measured_bits": report.measured_bits,
                        "distinct_states": report.distinct_states,
                        "ok": report.ok,
                        "note": report.note,
                    },
                    sort_keys=True,
                )
            )
        else:
            lines.append(report.row())
        violation = violation or not report.ok
    _emit(args, "\n".join(lines))
    return EXIT_FAILURE if violation else EXIT_OK


def cmd_meet(args) -> int:
    stats = []
    for spec in args.graph:
        graph = build_graph(spec, seed=args.seed)
        stats.append(measure_meeting_time(graph, args.trials, seed=args.seed, rate=args.rate))
    records = [
        {
            "graph": s.graph,
            "n": s.n,
            "trials": s.trials,
            "mean_steps": s.mean_steps,
            "stderr_steps": s.stderr_steps,
            "mean_time": s.mean_time,
            "stderr_time": s.stderr_time,
        }
        for s in stats
    ]
    out: dict = {"schema_version": SCHEMA_VERSION, "measurements": records}
    if len(stats) >= 3:
        fit = scaling_report({s.n: [s.mean_time] for s in stats})
        out["time_exponent"] = fit.exponent
    _emit(args, json.dumps(out, sort_keys=True))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _load_config_defaults(argv, parser)
        args = parser.parse_args(argv)
        handler = {
            "run": cmd_run,
            "sweep": cmd_sweep,
            "verify": cmd_verify,
            "audit": cmd_audit,
            "meet": cmd_meet,
        }[args.command]
        return handler(args)
    except (ConfigError, GraphError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
