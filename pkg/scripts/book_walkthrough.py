"""Book example end to end: property checks, rewrites with their traces, execution.

    python3 scripts/book_walkthrough.py
"""
from pathlib import Path

from prefq.catalog import load_catalog, load_plan
from prefq.optimizer import ExecOptions, execute, optimize, render
from prefq.preference import is_redundant_rel, is_spo_rel, is_wo_rel
from prefq.relation import load_csv

DATA = Path(__file__).resolve().parent.parent / "data" / "book"


def main() -> None:
    base = load_catalog([DATA / "schema.def", DATA / "prefs.def"])
    book = load_csv(base.schema("Book"), DATA / "book.csv")
    C1 = base.pref("C1")
    for deps in ([], ["isbn_price.deps"], ["single_isbn.deps"]):
        cat = load_catalog([DATA / "schema.def", *(DATA / d for d in deps), DATA / "prefs.def"])
        F = cat.deps
        label = ", ".join(str(d) for d in F) or "no dependencies"
        print(f"-- {label}")
        print(f"   C1 strict partial order: {bool(is_spo_rel(C1, F))}")
        wo = is_wo_rel(C1, F)
        print(f"   C1 weak order: {wo.holds}" + ("" if wo.holds else f" (fails {wo.failed_axiom})"))
        print(f"   winnow(C1) redundant: {bool(is_redundant_rel(C1, F))}")
        for plan_file in ("winnow_c1.json", "select_over_winnow.json", "cascade.json"):
            plan = load_plan(DATA / plan_file, cat)
            out, trace = optimize(plan, F)
            print(f"   {render(plan)}")
            for step in trace:
                print(f"     {step.rule}: {step.after}")
            print(f"     -> {render(out)}")
    print("-- winnow(C1) over the Book relation")
    print(execute(load_plan(DATA / "winnow_c1.json", base), {"book": book}, ExecOptions(verify_winnow=True)).to_csv())


if __name__ == "__main__":
    main()
