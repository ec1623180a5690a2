#!/usr/bin/env python3
"""Write a seeded geometric-Brownian-motion price CSV for demos and smoke runs."""

import argparse
import csv
from datetime import date, timedelta

import numpy as np


def gbm(n, seed, p0, mu, sigma, dt=1 / 252):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed,))))
    z = rng.standard_normal(n - 1)
    steps = (mu - 0.5 * sigma**2) * dt + sigma * np.sqrt(dt) * z
    prices = np.empty(n)
    prices[0] = p0
    prices[1:] = p0 * np.exp(np.cumsum(steps))
    return prices


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="gbm.csv")
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--seed", type=int, default=777)
    ap.add_argument("--p0", type=float, default=100.0)
    ap.add_argument("--mu", type=float, default=0.05)
    ap.add_argument("--sigma", type=float, default=0.2)
    args = ap.parse_args()

    prices = gbm(args.n, args.seed, args.p0, args.mu, args.sigma)
    start = date(2020, 1, 1)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["Date", "Close"])
        for k, v in enumerate(prices):
            w.writerow([(start + timedelta(days=k)).isoformat(), repr(float(v))])
    print(f"wrote {args.n} prices to {args.out} (seed {args.seed})")


if __name__ == "__main__":
    main()
