#!/usr/bin/env python3
"""Structure-theorem experiment: random extension towers inside and at the
hypothesis boundary e*r >= p-1 (where failures stop being theorem events)."""

import argparse
import random
import sys
import time
from collections import Counter

from truncalg.bkrandom import random_tower
from truncalg.breuil_kisin import structure_check, verify_tower


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--towers", type=int, default=50)
    ap.add_argument("-p", type=int, default=3, choices=(2, 3, 5))
    ap.add_argument("-r", type=int, default=1)
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    hyp = 1 * args.r < args.p - 1
    print(f"p={args.p}, r={args.r}, e=1: hypothesis e*r < p-1 "
          f"{'holds' if hyp else 'VIOLATED (exploration mode)'}")
    hist = Counter()
    started = time.time()
    for i in range(args.towers):
        tw = random_tower(args.p, rng, depth=rng.randint(1, args.depth),
                          n=2, r=args.r)
        ok, why = verify_tower(tw, args.r, bar=True)
        if not ok:
            hist["tower_invalid"] += 1
            continue
        res = structure_check(tw.bk, args.r, tower=tw)
        if res.elementary is not None:
            key = (res.elementary.free_rank,
                   tuple(sorted(tw.bk.ring.p_valuation(d)
                                for d in res.elementary.torsion_divisors)))
            hist[f"elementary free={key[0]} exps={list(key[1])}"] += 1
        else:
            hist[f"not elementary at slice {res.counterexample.failing_j}"] += 1
    print(f"{args.towers} towers in {time.time() - started:.1f}s")
    for key, count in sorted(hist.items()):
        print(f"  {key}: {count}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
