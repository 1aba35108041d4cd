"""Entailment-checker time and oracle agreement on the hardness-reduction instances.

    python3 scripts/reduction_sweep.py --seeds 5
"""
import argparse
import time

from prefq.reductions import MAX_3COLOR_VERTICES, MAX_M3SAT_VARS, generate


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5, help="instances per size")
    ap.add_argument("--kinds", nargs="+", default=["m3sat", "3color"])
    args = ap.parse_args()

    ranges = {"m3sat": range(3, MAX_M3SAT_VARS + 1), "3color": range(2, MAX_3COLOR_VERTICES + 1)}
    print(f"{'kind':<7} {'size':>4} {'holds':>6} {'agree':>6} {'mean s':>8} {'max s':>8}")
    failures = 0
    for kind in args.kinds:
        for size in ranges[kind]:
            times, holds, agree = [], 0, 0
            for seed in range(args.seeds):
                b = generate(kind, size, seed)
                start = time.perf_counter()
                got = b.check()
                times.append(time.perf_counter() - start)
                holds += got
                agree += got == b.expected_holds
            failures += args.seeds - agree
            print(f"{kind:<7} {size:>4} {holds:>6} {agree:>6} {sum(times) / len(times):>8.3f} {max(times):>8.3f}")
    raise SystemExit(1 if failures else 0)


if __name__ == "__main__":
    main()
