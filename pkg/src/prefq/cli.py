"""``prefq`` command line: property checks, plan rewriting, execution, generators.

Exit codes: 0 holds / success, 1 refuted, 2 error, 3 ``--verify`` mismatch.
Results go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import difflib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import reductions
from .catalog import Catalog, CatalogError, load_catalog, load_plan, parse_dependency, plan_to_json
from .dependency import DependencyError
from .engine import EngineError
from .formula import DEFAULT_DNF_BUDGET, FormulaError, parse_formula
from .optimizer import (
    ALGO_HINTS,
    RULES,
    DependencyViolation,
    ExecOptions,
    ExecutionError,
    RewriteOptions,
    Scan,
    VerificationMismatch,
    choose_algorithm,
    execute,
    optimize,
    propagate_deps,
    render,
)
from .preference import (
    SELECTION_VAR,
    PreferenceError,
    commutes_selection_rel,
    contains_rel,
    is_redundant_rel,
    is_spo_rel,
    is_wo_rel,
    propagates_rel,
)
from .relation import RelationError, load_csv
from .solver import SolverError

EXIT_HOLDS, EXIT_REFUTED, EXIT_ERROR, EXIT_MISMATCH = 0, 1, 2, 3
PROPERTIES = ("spo", "wo", "contained", "redundant", "commutes", "propagates")

USER_ERRORS = (CatalogError, FormulaError, RelationError, DependencyError, PreferenceError,
               EngineError, ExecutionError, SolverError, reductions.ReductionError, OSError, ValueError)


class UsageError(Exception):
    pass


@dataclass
class CheckRequest:
    prop: str
    catalog: Catalog
    prefs: list[str]
    selection: str | None = None
    candidate: str | None = None
    solver_kw: dict = field(default_factory=dict)

    def validate(self) -> None:
        need = 2 if self.prop == "contained" else 1
        if len(self.prefs) != need:
            raise UsageError(f"'{self.prop}' needs exactly {need} --pref argument(s)")
        if self.prop == "commutes" and not self.selection:
            raise UsageError("'commutes' needs --select")
        if self.prop == "propagates" and not self.candidate:
            raise UsageError("'propagates' needs --candidate")


def _catalog(args) -> Catalog:
    paths = [*args.schema, *args.deps, *args.prefs]
    if not paths:
        raise UsageError("no definition files given (use --schema / --deps / --prefs)")
    return load_catalog(paths)


def _solver_kw(args) -> dict:
    return {"strategy": args.strategy, "budget": args.dnf_budget}


def _emit(text: str) -> None:
    sys.stdout.write(text)


def run_check(req: CheckRequest) -> int:
    req.validate()
    cat = req.catalog
    C = cat.pref(req.prefs[0])
    F = cat.deps_for(C.schema)
    kw = req.solver_kw
    if req.prop in ("spo", "wo"):
        verdict = (is_spo_rel if req.prop == "spo" else is_wo_rel)(C, F, **kw)
        holds, witness = verdict.holds, verdict.witness
        detail = "" if holds else f" (fails {verdict.failed_axiom})"
        label = "holds" if holds else "refuted"
    else:
        if req.prop == "contained":
            res = contains_rel(C, cat.pref(req.prefs[1]), F, **kw)
        elif req.prop == "redundant":
            res = is_redundant_rel(C, F, **kw)
        elif req.prop == "commutes":
            cond = parse_formula(req.selection, {SELECTION_VAR: C.schema})
            res = commutes_selection_rel(cond, C, F, **kw)
        else:
            res = propagates_rel(F, C, parse_dependency(req.candidate, cat), **kw)
        holds, witness, detail = res.entailed, res.witness, ""
        label = "entailed" if holds else "refuted"
    _emit(f"{req.prop} {' '.join(req.prefs)}: {label}{detail}\n")
    if witness is not None:
        _emit(witness.to_csv())
    return EXIT_HOLDS if holds else EXIT_REFUTED


def cmd_check(args) -> int:
    req = CheckRequest(args.property, _catalog(args), args.pref, args.select, args.candidate,
                       _solver_kw(args))
    return run_check(req)


def _rewrite_options(args) -> RewriteOptions:
    unknown = set(args.no_rule) - set(RULES)
    if unknown:
        raise UsageError(f"unknown rule(s) {sorted(unknown)}; choose from {', '.join(RULES)}")
    return RewriteOptions(disabled=frozenset(args.no_rule), small_intermediate=args.small_intermediate)


def cmd_optimize(args) -> int:
    cat = _catalog(args)
    plan = load_plan(args.plan, cat)
    opts = _rewrite_options(args)
    opts.candidates = tuple(parse_dependency(c, cat) for c in args.candidate)
    optimized, trace = optimize(plan, cat.deps, opts)
    summary = [f"input:  {render(plan)}", f"output: {render(optimized)}"]
    summary += [f"step {i}: {s.rule} at {list(s.path)}: {s.before} -> {s.after}"
                for i, s in enumerate(trace, start=1)]
    if not trace:
        summary.append("no rule applied")
    doc = {
        "plan": plan_to_json(optimized, cat),
        "trace": [s.to_json() for s in trace],
        "summary": summary,
    }
    _emit(json.dumps(doc, indent=2) + "\n")
    return EXIT_HOLDS


def _scans(p) -> list[Scan]:
    if isinstance(p, Scan):
        return [p]
    return _scans(p.child)


def _load_data(plan, data_args: Sequence[str]) -> dict:
    files: dict[str, Path] = {}
    dirs: list[Path] = []
    for d in data_args:
        path = Path(d)
        if path.is_dir():
            dirs.append(path)
        else:
            files[path.stem] = path
    data = {}
    for scan in _scans(plan):
        path = files.get(scan.source)
        if path is None and len(files) == 1 and not dirs:
            path = next(iter(files.values()))
        if path is None:
            path = next((d / f"{scan.source}.csv" for d in dirs if (d / f"{scan.source}.csv").exists()), None)
        if path is None:
            raise ExecutionError(f"no data file for source {scan.source!r}")
        data[scan.source] = load_csv(scan.schema, path)
    return data


def cmd_run(args) -> int:
    cat = _catalog(args)
    plan = load_plan(args.plan, cat)
    if args.optimize:
        plan, _ = optimize(plan, cat.deps, _rewrite_options(args))
    else:
        plan = choose_algorithm(propagate_deps(plan, cat.deps))
    if args.data is None:
        raise UsageError("run needs --data")
    data = _load_data(plan, args.data)
    opts = ExecOptions(base=tuple(cat.deps), verify_deps=args.verify_deps, verify_winnow=args.verify,
                       algo_override=args.algo, capacity=args.capacity)
    try:
        out = execute(plan, data, opts)
    except VerificationMismatch as exc:
        sys.stderr.write(f"verification failed: {exc}\n")
        diff = difflib.unified_diff(exc.expected.to_csv().splitlines(), exc.actual.to_csv().splitlines(),
                                    "naive", args.algo or "plan", lineterm="")
        sys.stderr.write("\n".join(diff) + "\n")
        return EXIT_MISMATCH
    _emit(out.to_csv())
    return EXIT_HOLDS


def cmd_gen(args) -> int:
    if args.preset:
        if args.kind != "3color":
            raise UsageError("--preset applies to 3color only")
        bundle = reductions.triangle() if args.preset == "triangle" else reductions.k4()
    else:
        bundle = reductions.generate(args.kind, args.size, args.seed)
    text = bundle.to_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        _emit(text)
    if args.check:
        got = bundle.check()
        agree = got == bundle.expected_holds
        _emit(f"checker: {'holds' if got else 'refuted'}; oracle: "
              f"{'holds' if bundle.expected_holds else 'refuted'}; {'agree' if agree else 'DISAGREE'}\n")
        return EXIT_HOLDS if agree else EXIT_REFUTED
    return EXIT_HOLDS


def _defs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--schema", action="append", default=[], metavar="FILE",
                   help="definition file with SCHEMA lines (repeatable)")
    p.add_argument("--deps", action="append", default=[], metavar="FILE",
                   help="definition file with FD/CGD lines (repeatable)")
    p.add_argument("--prefs", action="append", default=[], metavar="FILE",
                   help="definition file with PREF lines (repeatable)")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategy", choices=("split", "dnf"), default="split")
    p.add_argument("--dnf-budget", type=int, default=DEFAULT_DNF_BUDGET)


def _rule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--no-rule", action="append", default=[], metavar="RULE", help="disable R1..R4")
    p.add_argument("--small-intermediate", action="store_true",
                   help="only merge winnows when the outer preference is also a weak order")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide a relative property of a preference")
    p.add_argument("property", choices=PROPERTIES)
    _defs(p)
    p.add_argument("--pref", action="append", default=[], required=True, metavar="NAME")
    p.add_argument("--select", metavar="FORMULA", help="selection condition over t (commutes)")
    p.add_argument("--candidate", metavar="DEP", help="FD/CGD line to propagate (propagates)")
    _solver_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("optimize", help="rewrite a plan and explain the steps")
    _defs(p)
    p.add_argument("--plan", required=True)
    _rule_flags(p)
    p.add_argument("--candidate", action="append", default=[], metavar="DEP",
                   help="dependency to try propagating through winnows (repeatable)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("run", help="execute a plan over CSV data")
    _defs(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--data", action="append", metavar="PATH",
                   help="CSV file (named by stem) or directory of <source>.csv files")
    p.add_argument("--algo", choices=[a for a in ALGO_HINTS if a != "auto"])
    p.add_argument("--verify", action="store_true", help="replay every winnow naively and compare")
    p.add_argument("--verify-deps", action="store_true", help="check declared dependencies on the data")
    p.add_argument("--capacity", type=int, default=64, help="BNL window size")
    p.add_argument("--optimize", action="store_true", help="rewrite the plan before running it")
    _rule_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen", help="emit a hardness-reduction instance with its oracle verdict")
    p.add_argument("kind", choices=("m3sat", "3color"))
    p.add_argument("--size", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=("triangle", "k4"))
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--check", action="store_true", help="run the checker and compare with the oracle")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_HOLDS
    try:
        return args.func(args)
    except DependencyViolation as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except (UsageError, *USER_ERRORS) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
