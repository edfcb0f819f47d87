"""Exceedance frequency of the compact-support KL radius over repeated samples.

    python3 scripts/coverage_study.py --trials 200 --n 500 --sigma 1.0
"""

import argparse

from renest.acceptance import coverage_study
from renest.core import dumps


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--tail", type=float, default=0.05, help="target raw tail probability")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    study = coverage_study(args.seed, trials=args.trials, n=args.n, sigma=args.sigma, tail=args.tail)
    print(dumps({"trials": args.trials, "n": args.n, "sigma": args.sigma, **study}))


if __name__ == "__main__":
    main()
