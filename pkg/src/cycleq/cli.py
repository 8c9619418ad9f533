"""Command-line entry point.

Exit codes: 0 success, 1 usage / input error, 2 a scenario assertion or
statistical verdict failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .dsl import ParseError, parse, validate, format_circuit
from .engines import Program, TraceRecorder, counts, exact_distribution, make_engine, run_program
from .rng import check_seed
from .scenarios import SCENARIOS, ScenarioResult
from .schedule import CANONICAL, shuffled
from .state import StateError
from .stats import Histogram, InsufficientCellsError, chi_square_gof, two_sample_chi_square

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
SEED_ENV = "CYCLEQ_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cycleq", description="Run circuits and worked examples under the cycle model and the state-vector reference.")
    p.add_argument("--version", action="version", version=f"cycleq {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute a circuit file or a named scenario")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--circuit", metavar="PATH", help=".cyq circuit file")
    src.add_argument("--scenario", metavar="NAME", help=f"one of: {', '.join(SCENARIOS)}")
    run.add_argument("--engine", choices=["schedule", "statevector", "both"], default="schedule")
    run.add_argument("--shots", type=int, default=100_000)
    run.add_argument("--seed", type=int, default=None, help=f"64-bit seed (default: ${SEED_ENV} or 0)")
    run.add_argument("--ordering", choices=["canonical", "shuffled"], default="canonical")
    run.add_argument("--mode", choices=["standard", "paper-literal"], default="standard")
    run.add_argument("--format", choices=["json", "csv", "text"], default="json")
    run.add_argument("--trace", metavar="PATH", help="write schedule events as JSON lines")
    run.add_argument("--parallel", type=int, default=os.cpu_count() or 1, metavar="K")
    run.add_argument("--alpha", type=complex, default=0.6, help="teleport input amplitude on |0>")
    run.add_argument("--beta", type=complex, default=0.8, help="teleport input amplitude on |1>")
    run.add_argument("--timing", action="store_true", help="record wall time in the report")
    run.add_argument("-o", "--output", metavar="PATH", help="write the report here instead of stdout")

    chk = sub.add_parser("check", help="parse and validate a circuit file")
    chk.add_argument("circuit", metavar="PATH")
    chk.add_argument("--print", dest="show", action="store_true", help="print the canonical form")
    return p


def _resolve_seed(flag: int | None) -> int:
    if flag is not None:
        try:
            return check_seed(flag)
        except ValueError as exc:
            raise UsageError(f"--seed: {exc}") from None
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return check_seed(int(env, 0))
    except ValueError:
        raise UsageError(f"{SEED_ENV}={env!r} is not a 64-bit integer") from None


def _read_circuit(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read circuit {path}: {exc.strerror or exc}") from None
    try:
        return parse(text)
    except ParseError as exc:
        raise UsageError(f"{path}:{exc.line}: {exc.diagnostic.message} [{exc.code}]") from None


def _gof_entry(fn, *args) -> dict | None:
    try:
        return fn(*args).to_dict()
    except InsufficientCellsError:
        return None


def _engines(choice: str) -> list[str]:
    return ["schedule", "statevector"] if choice == "both" else [choice]


def _compare(report: dict, hists: dict[str, Histogram], analytic: dict[str, float]) -> None:
    gof = report["gof"]
    for name, h in hists.items():
        gof[name] = _gof_entry(chi_square_gof, h, analytic)
    if len(hists) == 2:
        gof["schedule_vs_statevector"] = _gof_entry(two_sample_chi_square, hists["schedule"], hists["statevector"])
    for name, g in gof.items():
        if g is not None:
            label = "two-sample chi-square" if name == "schedule_vs_statevector" else "chi-square vs analytic law"
            report["assertions"].append(
                {"engine": name, "description": f"{label} p > {g['alpha']}", "passed": g["verdict"] == "pass", "value": g["p_value"]}
            )


def _run_circuit(args, seed, policy, trace) -> dict:
    circuit = _read_circuit(args.circuit)
    program = Program.from_circuit(circuit)
    analytic = exact_distribution(program)
    report = _new_report(args, seed)
    report["diagnostics"] = [str(d) for d in validate(circuit)]
    hists = {}
    for name in _engines(args.engine):
        branches = run_program(program, make_engine(name, policy), args.shots, seed, parallel=args.parallel, trace=trace)
        hists[name] = Histogram.from_counts(counts(branches))
        report["histograms"][name] = _hist_dict(hists[name])
    report["analytic"] = analytic
    _compare(report, hists, analytic)
    return report


def _run_scenario(args, seed, policy, trace) -> dict:
    name = args.scenario
    if name not in SCENARIOS:
        raise UsageError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    literal = args.mode == "paper-literal"
    if (name == "noncommuting") != literal:
        raise UsageError("the 'noncommuting' scenario runs in --mode paper-literal, and only it does")
    if literal and args.engine != "schedule":
        raise UsageError("paper-literal mode has no state-vector counterpart; use --engine schedule")
    report = _new_report(args, seed)
    results: dict[str, ScenarioResult] = {}
    for engine in _engines(args.engine):
        kw = {"shots": args.shots, "seed": seed, "trace": trace if engine == "schedule" else None}
        if name != "noncommuting":
            kw.update(engine=engine, policy=policy, parallel=args.parallel)
        if name == "teleport":
            kw.update(alpha=args.alpha, beta=args.beta)
        try:
            results[engine] = SCENARIOS[name](**kw)
        except StateError as exc:
            raise UsageError(str(exc)) from None
    hists = {e: Histogram.from_counts(r.counts) for e, r in results.items()}
    for e, r in results.items():
        report["histograms"][e] = _hist_dict(hists[e])
        for a in r.assertions:
            report["assertions"].append({"engine": e, **a.to_dict()})
    first = next(iter(results.values()))
    report["analytic"] = first.expected
    if name == "teleport":
        report["fidelity"] = {e: r.fidelity for e, r in results.items()}
    _compare(report, hists, first.expected)
    return report


def _new_report(args, seed) -> dict:
    config = {
        "circuit": args.circuit,
        "scenario": args.scenario,
        "engine": args.engine,
        "shots": args.shots,
        "seed": seed,
        "ordering": args.ordering,
        "mode": args.mode,
    }
    if args.scenario == "teleport":
        config["alpha"] = [args.alpha.real, args.alpha.imag]
        config["beta"] = [args.beta.real, args.beta.imag]
    return {"config": config, "histograms": {}, "analytic": {}, "gof": {}, "assertions": [], "fidelity": None, "wall_time": None}


def _hist_dict(h: Histogram) -> dict:
    return {"total": h.total, "counts": h.counts}


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["engine", "pattern", "count", "frequency"])
        for engine, h in report["histograms"].items():
            for pattern, c in h["counts"].items():
                w.writerow([engine, pattern, c, repr(c / h["total"])])
        return buf.getvalue()
    lines = []
    cfg = report["config"]
    lines.append(f"{cfg['circuit'] or cfg['scenario']}  engine={cfg['engine']} shots={cfg['shots']} seed={cfg['seed']}")
    for engine, h in report["histograms"].items():
        lines.append(f"[{engine}]")
        for pattern, c in h["counts"].items():
            lines.append(f"  {pattern:>8}  {c:>9}  {c / h['total']:.6f}")
    for a in report["assertions"]:
        lines.append(f"{'PASS' if a['passed'] else 'FAIL'}  {a['engine']}: {a['description']}")
    for d in report.get("diagnostics", []):
        lines.append(d)
    return "\n".join(lines) + "\n"


def _cmd_run(args) -> int:
    if args.shots < 1:
        raise UsageError("--shots must be >= 1")
    if args.parallel < 1:
        raise UsageError("--parallel must be >= 1")
    if args.trace and args.engine == "statevector":
        raise UsageError("--trace records schedule events; it needs --engine schedule or both")
    seed = _resolve_seed(args.seed)
    policy = CANONICAL if args.ordering == "canonical" else shuffled(seed)
    trace = TraceRecorder() if args.trace else None
    trace_fh = None
    if args.trace:
        try:
            trace_fh = open(args.trace, "w")
        except OSError as exc:
            raise UsageError(f"cannot write trace {args.trace}: {exc.strerror or exc}") from None
    start = time.perf_counter()
    try:
        report = _run_circuit(args, seed, policy, trace) if args.circuit else _run_scenario(args, seed, policy, trace)
        if trace_fh is not None:
            trace.write(trace_fh)
    finally:
        if trace_fh is not None:
            trace_fh.close()
    if args.timing:
        report["wall_time"] = time.perf_counter() - start
    text = render(report, args.format)
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write report {args.output}: {exc.strerror or exc}") from None
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(a["passed"] for a in report["assertions"]) else EXIT_FAILED


def _cmd_check(args) -> int:
    circuit = _read_circuit(args.circuit)
    for d in validate(circuit):
        print(f"{args.circuit}:{d}")
    if args.show:
        sys.stdout.write(format_circuit(circuit))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_check(args)
    except UsageError as exc:
        print(f"cycleq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
