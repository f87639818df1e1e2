"""Compiled vs pure-Python trial kernel on the built-in deck.

    python benchmarks/bench_kernel.py [--n 200000] [--repeat 3]
"""

import argparse
import time

from deckprob.deck import reference_deck
from deckprob.mc.kernel import CKernel
from deckprob.mc.simulate import Seeded, run_protocol

PREP = ("Face", "K")
STEPS = ("Color", "Face", "Suit")


def bench(variant: str, pure: bool, n: int, repeat: int) -> float:
    deck = reference_deck()
    best = float("inf")
    for r in range(repeat):
        t0 = time.perf_counter()
        run_protocol(deck, PREP, STEPS, n, variant, Seeded(r), pure=pure)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--pure-n", type=int, default=20_000, help="trials for the Python kernel")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"{'variant':8} {'kernel':8} {'trials':>9} {'seconds':>9} {'us/trial':>9}")
    for variant in ("s", "svd"):
        rows = [("python", True, args.pure_n)]
        if CKernel is not None:
            rows.insert(0, ("compiled", False, args.n))
        per = {}
        for name, pure, n in rows:
            t = bench(variant, pure, n, args.repeat)
            per[name] = t / n
            print(f"{variant:8} {name:8} {n:9d} {t:9.3f} {1e6 * t / n:9.2f}")
        if len(per) == 2:
            print(f"{variant:8} speedup  {per['python'] / per['compiled']:.1f}x")
    if CKernel is None:
        print("compiled kernel not built; only the Python kernel was timed")


if __name__ == "__main__":
    main()
