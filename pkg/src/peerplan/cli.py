"""Command-line entry points.

Exit codes: 0 success, 1 usage problems (bad flags or invalid values),
2 runtime failures (I/O and friends).
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness, planner
from .netgraph import load_edge_list, serialize_edge_list
from .rng import substream

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; our contract reserves 2 for runtime
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="peerplan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="emit a synthetic graph as an edge list")
    gen.add_argument("--model", required=True, choices=("er", "ba", "ws"))
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--prob", type=float, help="er: edge probability")
    gen.add_argument("--attachments", type=int, help="ba: edges per new node")
    gen.add_argument("--ring-degree", type=int, help="ws: ring neighbor count")
    gen.add_argument("--rewire-prob", type=float, help="ws: rewiring probability")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", help="output path (default stdout)")

    sim = sub.add_parser("simulate", help="run one intervention, print its event trace")
    sim.add_argument("--graph", required=True, help="edge-list file")
    sim.add_argument("--strategy", default="change", choices=planner.STRATEGIES)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--samples", type=int, help="final evaluation sample count")
    sim.add_argument("--config", help="JSON file of intervention-config overrides")
    sim.add_argument("--out", help="trace output path (default stdout)")

    exp = sub.add_parser("experiment", help="run an experiment document, write CSV")
    exp.add_argument("--config", required=True, help="experiment JSON document")
    exp.add_argument("--out", help="CSV path (overrides the document's 'out')")
    exp.add_argument("--seed", type=int, help="override the document's master seed")
    exp.add_argument("--timing", action="store_true", help="include wall-clock column")

    ev = sub.add_parser("evaluate", help="expected spread of a seed set across p values")
    ev.add_argument("--graph", required=True, help="edge-list file")
    ev.add_argument("--seeds", required=True, help="file with one node token per line")
    ev.add_argument("--grid", default="0.05,0.15,0.25,0.35,0.45,0.55,0.65,0.75,0.85,0.95")
    ev.add_argument("--samples", type=int, default=10_000)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", help="CSV path (default stdout)")

    srv = sub.add_parser("serve", help="start the live session service")
    srv.add_argument("--host", default=os.environ.get("PEERPLAN_HOST", "127.0.0.1"))
    srv.add_argument("--port", type=int,
                     default=int(os.environ.get("PEERPLAN_PORT", "8000")))
    srv.add_argument("--data-dir", help="event-log directory (default env or ./peerplan-data)")
    return parser


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise RuntimeError(f"cannot read {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _UsageError(f"{path}: not valid JSON ({exc})") from exc


def _read_graph(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return load_edge_list(fh)
    except OSError as exc:
        raise RuntimeError(f"cannot read {path!r}: {exc}") from exc


def _write_text(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError(f"cannot write {path!r}: {exc}") from exc


def _cmd_generate(args) -> int:
    spec = {"model": args.model, "n": args.n}
    needed = {
        "er": ("prob",),
        "ba": ("attachments",),
        "ws": ("ring_degree", "rewire_prob"),
    }[args.model]
    for name in needed:
        value = getattr(args, name)
        if value is None:
            raise _UsageError(f"--{name.replace('_', '-')} is required for model {args.model}")
        spec[name] = value
    g = harness.generate_graph(spec, seed=args.seed)
    _write_text(serialize_edge_list(g), args.out)
    return 0


def _cmd_simulate(args) -> int:
    g = _read_graph(args.graph)
    overrides = harness.config_overrides_from_json(_read_json(args.config)) if args.config else {}
    if args.samples is not None:
        overrides["final_eval_samples"] = args.samples
    cfg = planner.default_config(g.n, strategy=args.strategy, seed=args.seed, **overrides)
    result = planner.simulate_intervention(g, cfg)
    lines = result.trace_jsonl()
    summary = {
        "committed": sorted(
            g.roster.token_of(v) for v in result.committed
        ),
        "spread": {repr(p): est.mean for p, est in result.evaluations.items()},
    }
    _write_text(lines + json.dumps({"ts": len(result.state.events), "kind": "evaluation", **summary},
                                   sort_keys=True, separators=(",", ":")) + "\n", args.out)
    return 0


def _cmd_experiment(args) -> int:
    doc = _read_json(args.config)
    spec = harness.load_experiment_spec(doc)
    if args.seed is not None:
        spec = harness.ExperimentSpec(
            spec.graphs, spec.strategies, spec.replications, spec.config,
            spec.eval_grid, args.seed, spec.out,
        )
    rows = harness.run_experiment(spec)
    out = args.out or spec.out
    text = harness.rows_to_csv(rows, include_timing=args.timing)
    _write_text(text, out)
    return 0


def _cmd_evaluate(args) -> int:
    g = _read_graph(args.graph)
    try:
        with open(args.seeds, "r", encoding="utf-8") as fh:
            tokens = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    except OSError as exc:
        raise RuntimeError(f"cannot read {args.seeds!r}: {exc}") from exc
    missing = [t for t in tokens if t not in g.roster]
    if missing:
        raise _UsageError(f"seed tokens not in roster: {missing}")
    seeds = [g.roster.index_of(t) for t in tokens]
    try:
        grid = [float(p) for p in args.grid.split(",") if p.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad --grid: {exc}") from exc
    from . import cascade  # deferred: keeps --help fast

    lines = ["p,mean,stderr"]
    for p in grid:
        est = cascade.estimate_spread(g, seeds, p, args.samples, substream(args.seed, "eval", repr(p)))
        lines.append(f"{p:g},{est.mean!r},{est.stderr!r}")
    _write_text("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "simulate": _cmd_simulate,
    "experiment": _cmd_experiment,
    "evaluate": _cmd_evaluate,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
