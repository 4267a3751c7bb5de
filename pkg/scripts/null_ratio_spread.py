"""Spread of per-metric ratios for fresh ER networks scored against an ER target.

Shows how far a correct (constant) generator's fitness sits from zero and how
wide the max-of-ratios distribution is.

    python scripts/null_ratio_spread.py --nodes 200 --edges 1000 --draws 400
"""

import argparse

import numpy as np

from netsynth.metrics import fitness, null_baseline, profile
from netsynth.netgen import GenerationConfig, generate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=200)
    ap.add_argument("--edges", type=int, default=1000)
    ap.add_argument("--draws", type=int, default=400)
    ap.add_argument("--seed", type=int, default=101)
    args = ap.parse_args()
    target = generate("1", GenerationConfig(args.nodes, args.edges, seed=args.seed)).network
    base = null_baseline(target, args.seed + 1)
    prof = profile(target)
    ratios = []
    for k in range(args.draws):
        g = generate("1", GenerationConfig(args.nodes, args.edges, seed=args.seed + 1000 + k)).network
        ratios.append(fitness(g, prof, base).ratios)
    names = list(ratios[0])
    table = np.array([[r[n] for n in names] for r in ratios])
    qs = [1, 5, 25, 50, 75, 95, 99]
    print("metric            " + " ".join(f"p{q:<5}" for q in qs) + "  in[0.5,1.5]")
    for k, name in enumerate(names + ["fitness"]):
        col = table[:, k] if k < len(names) else table.max(axis=1)
        inside = np.mean((col >= 0.5) & (col <= 1.5))
        print(f"{name:<17} " + " ".join(f"{v:<6.2f}" for v in np.percentile(col, qs))
              + f"  {inside:.2f}")
    fit = table.max(axis=1)
    print(f"P(fitness <= 0.3) = {np.mean(fit <= 0.3):.4f}; "
          f"P(0.5 <= fitness <= 1.6) = {np.mean((fit >= 0.5) & (fit <= 1.6)):.2f}")


if __name__ == "__main__":
    main()
