"""Command-line front end.

    graphreal check|realize|compile|roundtrip FILE [options]

Exit codes: 0 success, 1 negative verdict, 2 input error, 3 search budget
exhausted.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import os
import sys
from pathlib import Path

from graphreal import __version__
from graphreal.dot import network_to_dot
from graphreal.netcompile import (
    MetricGraphProblem,
    WellPosednessError,
    assemble_global,
    check_vertices,
)
from graphreal.realize import (
    BUDGET_ENV,
    BUDGET_EXHAUSTED,
    DEFAULT_BUDGET,
    BoundarySystem,
    Diagnosis,
    check_assumptions,
    realize,
)
from graphreal.roundtrip import roundtrip
from graphreal.serialize import InputError, boundary_document, document, dumps, load, network_document

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3

# witness keys holding indices (converted to 1-based in reports)
_INDEX_KEYS = {"vertex", "vertices", "components", "column", "columns", "row", "diagonal", "arcs", "classes"}


def _one_based(value):
    if isinstance(value, (list, tuple)):
        return [_one_based(v) for v in value]
    return int(value) + 1


def witness_json(w: dict) -> dict:
    return {k: (_one_based(v) if k in _INDEX_KEYS else v) for k, v in sorted(w.items())}


def diagnosis_json(d: Diagnosis) -> dict:
    return {"tag": d.tag, "message": d.message, "witness": witness_json(d.witness)}


class Report:
    """Collects human-readable lines and a JSON body."""

    def __init__(self, command: str, path: str, timestamp: bool):
        self.lines = [f"graphreal {__version__} {command} {path}"]
        self.body: dict = {"command": command}
        if timestamp:
            stamp = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
            self.lines.append(f"timestamp: {stamp}")
            self.body["timestamp"] = stamp

    def say(self, line: str) -> None:
        self.lines.append(line)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def _resolve_budget(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(BUDGET_ENV, "")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InputError(f"{BUDGET_ENV}={env!r} is not an integer") from None
        if value < 0:
            raise InputError(f"{BUDGET_ENV} must be nonnegative")
        return value
    return DEFAULT_BUDGET


def _with_tol(bs: BoundarySystem, tol: float | None) -> BoundarySystem:
    return bs if tol is None else dataclasses.replace(bs, tol=tol)


def _report_assumptions(rep: Report, bs: BoundarySystem) -> bool:
    ar = check_assumptions(bs)
    checks = {}
    for tag, verdict in ar.checks.items():
        rep.say(f"{tag}: {'PASS' if verdict else 'FAIL'}")
        checks[tag] = {"ok": bool(verdict)}
    for tag in ("outgoing-nonzero", "line-digraph", "zero-inflow-rows"):
        if tag not in ar.checks:
            rep.say(f"{tag}: SKIPPED")
            checks[tag] = {"ok": None}
    for d in ar.diagnoses:
        rep.say(f"  {d.tag}: {d.message}")
        checks[d.tag]["witness"] = witness_json(d.witness)
    rep.body["assumptions"] = checks
    return ar.ok


def _report_vertices(rep: Report, problem, compiled, tol) -> bool:
    ok = True
    entries = []
    for c in check_vertices(problem, compiled, tol):
        status = "PASS" if c.verdict else "FAIL"
        line = f"v{problem.labels[c.vertex]} ({c.role}) {c.tag}: {status}"
        if not c.verdict:
            ok = False
            line += f" ({c.verdict.reason})"
        rep.say(line)
        entries.append({"vertex": problem.labels[c.vertex], "role": c.role, "check": c.tag, "ok": bool(c.verdict)})
    rep.body["vertex_checks"] = entries
    return ok


def _report_compile(rep: Report, problem, compiled) -> bool:
    cls = compiled.classification
    labels = problem.labels
    rep.say("vertex  role        k_v  well-posed  |det|")
    table = []
    for v, role in enumerate(cls.roles):
        wp = compiled.wellposedness.get(v)
        if wp is None:
            rep.say(f"{'v' + str(labels[v]):<7} {role:<11} {cls.k[v]:>3}  -")
            table.append({"vertex": labels[v], "role": role, "k": cls.k[v]})
            continue
        rep.say(f"{'v' + str(labels[v]):<7} {role:<11} {cls.k[v]:>3}  {'yes' if wp else 'NO':<10}  {abs(wp.det):.6g}")
        table.append({"vertex": labels[v], "role": role, "k": cls.k[v], "wellposed": bool(wp), "det": abs(wp.det)})
    rep.body["vertices"] = table
    return all(compiled.wellposedness.values())


def cmd_check(args, rep: Report, obj) -> int:
    if isinstance(obj, MetricGraphProblem):
        compiled = assemble_global(obj, check=False)
        ok = _report_compile(rep, obj, compiled)
        ok = _report_vertices(rep, obj, compiled, args.tol) and ok
        ok = _report_assumptions(rep, _with_tol(compiled.system, args.tol)) and ok
    else:
        ok = _report_assumptions(rep, _with_tol(obj, args.tol))
    rep.say(f"verdict: {'PASS' if ok else 'FAIL'}")
    rep.body["verdict"] = "pass" if ok else "fail"
    return EXIT_OK if ok else EXIT_NEGATIVE


def _realization_report(rep: Report, result) -> int:
    rep.body["status"] = result.status
    rep.body["partitions_tried"] = result.partitions_tried
    rep.body["successes"] = result.successes
    rep.body["search_complete"] = result.search_complete
    rep.say(f"status: {result.status}")
    if result.realizable:
        net = result.network
        rep.say(f"vertices: {net.n_vertices}, edges: {len(net.edges)}")
        for i, e in enumerate(net.edges):
            j1, j2 = (q + 1 for q in e.components)
            rep.say(f"  e_{i + 1}: ({j1},{j2}) {e.kind}, x=0 at v{e.x0 + 1}, x=1 at v{e.x1 + 1}")
        more = "" if result.search_complete else " (search stopped at budget)"
        rep.say(f"successful sink groupings: {result.successes} of {result.partitions_tried}{more}")
        rep.body["network"] = network_document(net)
        return EXIT_OK
    for d in result.diagnoses:
        rep.say(f"  {d.tag}: {d.message}")
    rep.body["diagnoses"] = [diagnosis_json(d) for d in result.diagnoses]
    return EXIT_BUDGET if result.status == BUDGET_EXHAUSTED else EXIT_NEGATIVE


def cmd_realize(args, rep: Report, obj) -> int:
    if not isinstance(obj, BoundarySystem):
        raise InputError("realize expects a boundary_system document")
    result = realize(_with_tol(obj, args.tol), budget=_resolve_budget(args.budget), all_partitions=args.all_partitions)
    code = _realization_report(rep, result)
    if code == EXIT_OK and args.dot:
        Path(args.dot).write_text(network_to_dot(result.network), encoding="utf-8")
    return code


def cmd_compile(args, rep: Report, obj) -> int:
    if not isinstance(obj, MetricGraphProblem):
        raise InputError("compile expects a metric_graph document")
    compiled = assemble_global(obj, check=False)
    ok = _report_compile(rep, obj, compiled)
    if not ok:
        rep.say("verdict: FAIL (ill-posed vertex conditions)")
        rep.body["verdict"] = "fail"
        return EXIT_NEGATIVE
    bs = _with_tol(compiled.system, args.tol)
    rep.say(f"components: {bs.size} (J+ {len(bs.j_plus)}, J- {len(bs.j_minus)})")
    rep.say("verdict: PASS")
    rep.body["verdict"] = "pass"
    rep.body["system"] = boundary_document(bs)
    return EXIT_OK


def cmd_roundtrip(args, rep: Report, obj) -> int:
    if not isinstance(obj, MetricGraphProblem):
        raise InputError("roundtrip expects a metric_graph document")
    compiled = assemble_global(obj, check=False)
    stage_ok = _report_vertices(rep, obj, compiled, args.tol)
    if not stage_ok:
        return _fail(rep, "check", "vertex conditions violate the connectivity assumptions")
    if not all(compiled.wellposedness.values()):
        _report_compile(rep, obj, compiled)
        return _fail(rep, "compile", "ill-posed vertex conditions")
    bs = _with_tol(compiled.system, args.tol)
    compiled = dataclasses.replace(compiled, system=bs)
    budget = _resolve_budget(args.budget)
    rt = roundtrip(obj, compiled, budget=budget)
    rep.body["realizations_compared"] = rt.tried
    if rt.ok:
        rep.say(f"roundtrip: PASS ({rt.detail})")
        rep.body["verdict"] = "pass"
        rep.body["vertex_map"] = {str(k + 1): v + 1 for k, v in sorted(rt.mapping.items())}  # realized -> reference
        return EXIT_OK
    if rt.tried == 0:
        result = realize(bs, budget=budget)
        if result.status == BUDGET_EXHAUSTED:
            _fail(rep, "realize", "search budget exhausted")
            return EXIT_BUDGET
        for d in result.diagnoses:
            rep.say(f"  {d.tag}: {d.message}")
    return _fail(rep, rt.stage, rt.detail)


def _fail(rep: Report, stage: str, detail: str) -> int:
    rep.say(f"roundtrip: FAIL at {stage}: {detail}")
    rep.body["verdict"] = "fail"
    rep.body["stage"] = stage
    return EXIT_NEGATIVE


COMMANDS = {"check": cmd_check, "realize": cmd_realize, "compile": cmd_compile, "roundtrip": cmd_roundtrip}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphreal", description="Graph realizability of hyperbolic boundary systems.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=None, help="zero threshold for coefficients")
    p.add_argument("--budget", type=int, default=None, help=f"max sink groupings tried (default {DEFAULT_BUDGET}, env {BUDGET_ENV})")
    p.add_argument("--all-partitions", action="store_true", help="allow sink groups of any size")
    p.add_argument("--dot", metavar="PATH", help="write the realized network as DOT")
    p.add_argument("--json", metavar="PATH", help="write the JSON report (compile: the boundary system)")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for reproducible output")
    return p


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    if args.tol is not None and args.tol < 0:
        print("error: --tol must be nonnegative", file=sys.stderr)
        return EXIT_INPUT
    if args.budget is not None and args.budget < 0:
        print("error: --budget must be nonnegative", file=sys.stderr)
        return EXIT_INPUT
    rep = Report(args.command, args.file, not args.no_timestamp)
    try:
        obj = load(args.file)
        rep.body["input"] = document(obj)
        code = COMMANDS[args.command](args, rep, obj)
    except (InputError, WellPosednessError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as err:
        print(f"error: invalid input: {err}", file=sys.stderr)
        return EXIT_INPUT
    stdout.write(rep.text())
    if args.json:
        body = rep.body["system"] if args.command == "compile" and "system" in rep.body else rep.body
        Path(args.json).write_text(dumps(body), encoding="utf-8")
    return code


if __name__ == "__main__":
    sys.exit(main())
