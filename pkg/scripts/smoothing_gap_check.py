"""Compare the actual smoothing gap |D(mu||nu) - D(mu*g||nu*g)| with its bound on random 3-atom pairs.

    python3 scripts/smoothing_gap_check.py --pairs 20
"""

import argparse

from renest.acceptance import criterion_6
from renest.core import dumps


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    print(dumps(criterion_6(args.seed, pairs=args.pairs)))


if __name__ == "__main__":
    main()
