"""Command-line interface: run chains, search blockings, run benchmarks.

Exit codes: 0 success, 1 usage error, 2 model/input error, 3 runtime
failure.  Failures print a machine-readable JSON object to stderr.
Relative output paths are resolved under $AUTOBLOCK_REPORT_DIR when set.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .bench import SUITES, environment_metadata, run_suite
from .diagnostics import efficiency_report
from .errors import ModelError
from .graph import load_model
from .models import EXAMPLES, get_example
from .samplers import SamplerPlan, run_mcmc
from .search import AutoblockConfig, autoblock

REPORT_DIR_ENV = "AUTOBLOCK_REPORT_DIR"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _resolve_out(path):
    base = os.environ.get(REPORT_DIR_ENV)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def _parse_plan(spec, graph) -> SamplerPlan:
    if spec == "all-scalar":
        return SamplerPlan.all_scalar(graph.d)
    if spec == "all-blocked":
        return SamplerPlan.all_blocked(graph.d)
    with open(spec, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    groups_raw = payload["groups"] if isinstance(payload, dict) else payload
    name_to_slot = {name: i for i, name in enumerate(graph.slot_names)}
    groups = []
    for group in groups_raw:
        resolved = []
        for member in group:
            if isinstance(member, str):
                if member not in name_to_slot:
                    raise ModelError(f"plan names unknown slot {member!r}")
                resolved.append(name_to_slot[member])
            else:
                resolved.append(int(member))
        groups.append(tuple(resolved))
    return SamplerPlan(graph.d, tuple(groups))


def _cmd_run(args) -> int:
    graph = load_model(args.model)
    plan = _parse_plan(args.plan, graph)
    chain = run_mcmc(graph, plan, args.iterations, args.seed)
    report = efficiency_report(chain)
    prefix = _resolve_out(args.out)
    chain.to_csv(f"{prefix}.csv")
    meta = {
        "model": args.model,
        "plan": plan.named_groups(graph.slot_names),
        "iterations": args.iterations,
        "seed": args.seed,
        "sampling_seconds": chain.sampling_seconds,
        "report": report.to_dict(),
        "environment": environment_metadata(),
    }
    with open(f"{prefix}.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
    print(f"wrote {prefix}.csv and {prefix}.json "
          f"(E={report.efficiency:.4g}, C/10k={report.runtime_per_10k:.4g}s)")
    return 0


def _cmd_autoblock(args) -> int:
    graph = load_model(args.model)
    heights = tuple(float(h) for h in args.grid.split(","))
    config = AutoblockConfig(
        iterations_per_run=args.iterations,
        cut_heights=heights,
        discard_fraction=args.discard,
        max_outer_iterations=args.max_outer,
        seed=args.seed,
    )
    trace = autoblock(graph, config)
    out = _resolve_out(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(trace.to_json(indent=2))
    final = trace.final_plan
    print(f"selected {final.describe()} after {len(trace.iterations)} "
          f"iterations ({trace.termination_reason}); wrote {out}")
    return 0


def _cmd_benchmark(args) -> int:
    if not args.suite:
        print("available suites:")
        for name in sorted(SUITES):
            print(f"  {name}")
        return 0
    report = run_suite(args.suite, args.iterations, args.seed)
    prefix = _resolve_out(args.out)
    report.write(prefix)
    print(f"wrote {prefix}.csv and {prefix}.json ({len(report.rows)} rows)")
    return 0


def _cmd_examples_export(args) -> int:
    graph, informed = get_example(args.name, args.seed)
    out = _resolve_out(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(graph.to_spec(), fh, indent=2)
    written = [out]
    if args.informed_out:
        if informed is None:
            raise ModelError(f"example {args.name!r} has no informed plan")
        path = _resolve_out(args.informed_out)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"groups": informed.named_groups(graph.slot_names)}, fh,
                      indent=2)
        written.append(path)
    print("wrote " + " and ".join(written))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="autoblock",
                     description="MCMC engine with automated parameter blocking")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one sampler plan on a model")
    p_run.add_argument("--model", required=True)
    p_run.add_argument("--plan", default="all-scalar",
                       help="all-scalar, all-blocked, or a JSON plan file")
    p_run.add_argument("--iterations", type=int, default=10_000)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", required=True,
                       help="output prefix for .csv and .json")
    p_run.set_defaults(func=_cmd_run)

    p_ab = sub.add_parser("autoblock", help="search for an efficient blocking")
    p_ab.add_argument("--model", required=True)
    p_ab.add_argument("--iterations", type=int, default=10_000,
                      help="MCMC iterations per candidate run")
    p_ab.add_argument("--seed", type=int, default=0)
    p_ab.add_argument("--grid",
                      default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")
    p_ab.add_argument("--max-outer", type=int, default=10)
    p_ab.add_argument("--discard", type=float, default=0.5)
    p_ab.add_argument("--out", required=True, help="trace JSON path")
    p_ab.set_defaults(func=_cmd_autoblock)

    p_bench = sub.add_parser("benchmark", help="run a comparison suite")
    p_bench.add_argument("--suite", default="",
                         help="suite name; empty lists available suites")
    p_bench.add_argument("--iterations", type=int, default=10_000)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", default="benchmark",
                         help="output prefix for .csv and .json")
    p_bench.set_defaults(func=_cmd_benchmark)

    p_ex = sub.add_parser("examples", help="example model utilities")
    ex_sub = p_ex.add_subparsers(dest="examples_command", required=True)
    p_export = ex_sub.add_parser("export", help="write an example model file")
    p_export.add_argument("name", choices=sorted(EXAMPLES))
    p_export.add_argument("--seed", type=int, default=0)
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--informed-out", default="",
                          help="also write the informed plan JSON")
    p_export.set_defaults(func=_cmd_examples_export)

    return parser


def _fail(exc, code) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ModelError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        return _fail(exc, 2)
    except Exception as exc:  # pragma: no cover - unexpected
        return _fail(exc, 3)


if __name__ == "__main__":
    sys.exit(main())
