"""Dominance tests spent by each winnow evaluator on weak-order inputs.

    python3 scripts/compare_counts.py --sizes 100 1000 5000 --seed 1
"""
import argparse
import random
from fractions import Fraction

from prefq.engine import WinnowStats, winnow_bnl, winnow_naive, winnow_wwo, winnow_wwo_two_pass
from prefq.formula import Schema, parse_formula
from prefq.preference import PreferenceRelation
from prefq.relation import Relation

SCHEMA = Schema.of("Offer", vendor="D", price="Q", rating="Q")
PREFS = {
    "cheapest": "t1.price < t2.price",
    "rating-then-price": "t1.rating > t2.rating OR (t1.rating = t2.rating AND t1.price < t2.price)",
}


def offers(rng: random.Random, n: int) -> Relation:
    rows = [(f"v{rng.randrange(20)}", Fraction(rng.randrange(100, 10000), 100), Fraction(rng.randrange(1, 6)))
            for _ in range(n)]
    return Relation(SCHEMA, tuple(rows))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 5000])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--capacity", type=int, default=64)
    ap.add_argument("--skip-naive-above", type=int, default=2000)
    args = ap.parse_args()

    evaluators = {
        "wwo": lambda C, r, s: winnow_wwo(C, r, s),
        "wwo2": lambda C, r, s: winnow_wwo_two_pass(C, r, stats=s),
        "bnl": lambda C, r, s: winnow_bnl(C, r, args.capacity, s),
        "naive": lambda C, r, s: winnow_naive(C, r, s),
    }
    print(f"{'preference':<18} {'n':>6} " + " ".join(f"{k:>10}" for k in evaluators) + "  result")
    for name, text in PREFS.items():
        C = PreferenceRelation(name, SCHEMA, parse_formula(text, {"t1": SCHEMA, "t2": SCHEMA}))
        for n in args.sizes:
            r = offers(random.Random(args.seed + n), n)
            cells, sizes = [], set()
            for key, fn in evaluators.items():
                if key == "naive" and n > args.skip_naive_above:
                    cells.append(f"{'-':>10}")
                    continue
                stats = WinnowStats()
                sizes.add(len(fn(C, r, stats)))
                cells.append(f"{stats.comparisons:>10}")
            agree = "agree" if len(sizes) == 1 else f"DISAGREE {sorted(sizes)}"
            print(f"{name:<18} {n:>6} " + " ".join(cells) + f"  {agree}")


if __name__ == "__main__":
    main()
