#!/usr/bin/env python3
"""Degeneration-criterion fuzz driver: random filtered complexes vs the
element-level oracle. Prints a verdict histogram and the agreement rate."""

import argparse
import random
import sys
import time
from collections import Counter

sys.path.insert(0, __file__.rsplit("/", 2)[0] + "/tests")

from helpers import random_filtered_complex  # noqa: E402

from truncalg.errors import UnsupportedRingError  # noqa: E402
from truncalg.rings import TruncatedPadic  # noqa: E402
from truncalg.spectral import degeneration_report, oracle  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("-p", type=int, default=2, choices=(2, 3))
    ap.add_argument("--weights", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ring = TruncatedPadic(args.p, 2)
    rng = random.Random(args.seed)
    hist = Counter()
    done = agree = 0
    started = time.time()
    while done < args.instances:
        x = random_filtered_complex(ring, rng, weights=args.weights + 1)
        if x is None:
            continue
        try:
            orc = oracle(x)
        except UnsupportedRingError:
            continue
        rep = degeneration_report(x)
        got = {"rationally_degenerate": rep.rationally_degenerate,
               "degenerate": rep.degenerate,
               "saturated": rep.saturated, "split": rep.split}
        done += 1
        hist[(got["degenerate"], got["saturated"], got["split"])] += 1
        if got == orc:
            agree += 1
        else:
            print(f"DISAGREEMENT: checker {got} oracle {orc}")
    print(f"{agree}/{done} agree in {time.time() - started:.1f}s over Z/{args.p}^2")
    for (d, s, sp), count in sorted(hist.items()):
        print(f"  degenerate={d} saturated={s} split={sp}: {count}")
    return 0 if agree == done else 1


if __name__ == "__main__":
    sys.exit(main())
