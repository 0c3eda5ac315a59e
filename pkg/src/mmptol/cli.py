"""Command-line front end.

Exit codes: 0 conform / COMPLETE, 1 non-conform / INCOMPLETE, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .gauge import GaugeError
from .mmp import PositioningError
from .optimizer import BOUNDED, GuardError, InnerUnboundedError
from .planfile import PlanError, parse_plan
from .report import Report
from .synthesis import (COMPLETE, SPEC_MODES, SpecModel, SynthesisError, analyze, classify_parameters, detect_redundant,
                        influence_table, propose_specs, size_tolerances)

COMMANDS = ("analyze", "influence", "synthesize", "verify", "size", "redundancy")
LOG_ENV = "MMPTOL_LOG_LEVEL"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("mmptol")


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmptol", description="Worst-case analysis and synthesis of "
                                "manufacturing tolerances over a machining process plan.")
    p.add_argument("--version", action="version", version=f"mmptol {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "analyze": "worst case of the functional tolerance over the process",
        "influence": "influence coefficient of every defect parameter",
        "synthesize": "propose datum systems and specification types per set-up",
        "verify": "check the plan's manufacturing specifications against the functional tolerance",
        "size": "largest uniform scale on specification values that keeps conformity",
        "redundancy": "flag specifications whose removal changes nothing",
    }
    for name in COMMANDS:
        c = sub.add_parser(name, help=helps[name], description=helps[name])
        c.add_argument("plan", type=Path, help="plan file (JSON)")
        c.add_argument("--seed", type=int, default=0, help="random seed for the iterative solver (default 0)")
        c.add_argument("--solver", choices=("enumerate", "iterative"), default="iterative")
        c.add_argument("--starts", type=int, default=16, help="random starts of the iterative solver (default 16)")
        c.add_argument("--format", choices=("text", "json"), default="text")
        c.add_argument("--out", type=Path, help="write the report here instead of stdout")
        if name == "synthesize":
            c.add_argument("--mode", choices=SPEC_MODES, default="location",
                           help="location: one location spec per surface; split: add an orientation spec "
                                "where rotations are influential too")
    return p


def _solver_kw(args) -> dict:
    if args.solver == "iterative":
        if args.starts < 0:
            raise UsageError("--starts must be non-negative")
        return {"seed": args.seed, "starts": args.starts}
    return {}


def _specs_with_values(doc, command):
    if not doc.specs:
        raise UsageError(f"{command} needs manufacturing_specs in the plan file")
    missing = [s.label() for s in doc.specs if s.value is None]
    if missing and command != "size":
        raise UsageError(f"{command} needs a value for every specification; missing: {'; '.join(missing)}")
    return doc.specs


def run(args) -> Report:
    doc = parse_plan(args.plan)
    kw = _solver_kw(args)
    meta = {"solver": args.solver, "seed": args.seed if args.solver == "iterative" else None,
            "starts": args.starts if args.solver == "iterative" else None,
            "functional_gauge": doc.functional_gauge.id, "width": doc.functional_gauge.width}
    meta = {k: v for k, v in meta.items() if v is not None}
    rep = Report(args.command, str(args.plan), meta)
    cmd = args.command
    gauge = doc.functional_gauge

    an = analyze(doc.plan, gauge, args.solver, **kw)
    rep.analysis = an.result
    ok = an.result.status == BOUNDED and an.result.value >= 0
    if cmd == "analyze":
        rep.exit_code = EXIT_OK if ok else EXIT_FAIL
        return rep
    table = influence_table(an)
    rep.influence = table
    if cmd == "influence":
        rep.exit_code = EXIT_OK if ok else EXIT_FAIL
        return rep
    if table.status != BOUNDED:
        rep.warnings.append(f"functional analysis is {table.status}; no influence available")
        rep.exit_code = EXIT_FAIL
        return rep
    if cmd == "synthesize":
        rep.proposals = propose_specs(classify_parameters(table, doc.plan), doc.plan, args.mode)
        rep.metadata["mode"] = args.mode
        rep.warnings += [p.warning for p in rep.proposals if p.warning]
        rep.exit_code = EXIT_OK
        return rep

    specs = _specs_with_values(doc, cmd)
    model = SpecModel(doc.plan, gauge, specs, table.parameters(), an.mmp)
    if cmd == "verify":
        v = model.verify([s.value for s in specs], solver=args.solver, **kw)
        rep.proposals, rep.verification = list(specs), v
        rep.exit_code = EXIT_OK if v.status == COMPLETE and v.conform else EXIT_FAIL
        return rep
    if cmd == "size":
        sized, sz = size_tolerances(specs, doc.plan, gauge, table, args.solver, model, **kw)
        rep.proposals, rep.sizing = sized, sz
        rep.verification = model.verify(sz.values, solver=args.solver, **kw)
        rep.exit_code = EXIT_OK if rep.verification.status == COMPLETE else EXIT_FAIL
        return rep
    # redundancy
    v = model.verify([s.value for s in specs], solver=args.solver, **kw)
    rep.proposals, rep.verification = list(specs), v
    if v.status != COMPLETE:
        rep.warnings.append("specification set is not COMPLETE; redundancy is undefined")
        rep.exit_code = EXIT_FAIL
        return rep
    rep.redundant = detect_redundant(specs, doc.plan, gauge, table, args.solver, model, **kw)
    rep.exit_code = EXIT_OK
    return rep


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        rep = run(args)
    except PlanError as exc:
        for p in exc.problems:
            print(f"{exc.source}: {p}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, GaugeError, PositioningError, GuardError, SynthesisError) as exc:
        print(f"mmptol: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InnerUnboundedError as exc:
        print(f"mmptol: error: gauge placement is unbounded: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = rep.to_json() if args.format == "json" else rep.to_text()
    try:
        _emit(text, args.out)
    except OSError as exc:
        print(f"mmptol: error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
