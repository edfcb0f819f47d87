"""Neural KL and Renyi estimates for N(0,1) vs N(shift,1) as the sample size grows.

    python3 scripts/neural_gaussian_consistency.py --sizes 1000,5000,20000
"""

import argparse
import time

from renest.core import GaussianSpec, dumps, make_rng
from renest.oracle import kl_gaussian, renyi_gaussian
from renest.variational import FunctionClassSpec, Objective, TrainConfig, fit


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,5000,20000")
    parser.add_argument("--shift", type=float, default=1.0)
    parser.add_argument("--alpha", type=float, default=2.0)
    parser.add_argument("--width", type=int, default=32)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--step-size", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    g0, g1 = GaussianSpec([0.0], 1.0), GaussianSpec([args.shift], 1.0)
    truth = {"kl": kl_gaussian(g0, g1).value, "renyi": renyi_gaussian(g0, g1, args.alpha).value}
    spec = FunctionClassSpec.shallow_net(d=1, width=args.width)
    cfg = TrainConfig(steps=args.steps, step_size=args.step_size, seed=args.seed)
    rows = []
    for n in (int(s) for s in args.sizes.split(",")):
        rng = make_rng(args.seed, n)
        X, Y = rng.standard_normal((n, 1)), args.shift + rng.standard_normal((n, 1))
        start = time.perf_counter()
        row = {"n": n}
        for name, obj in (
            ("KL_DV", Objective("KL_DV")),
            ("KL_linear", Objective("KL_linear")),
            ("Renyi_log", Objective("Renyi_log", args.alpha)),
            ("Renyi_linear", Objective("Renyi_linear", args.alpha)),
        ):
            row[name] = fit(spec, X, Y, obj, cfg).value
        row["seconds"] = round(time.perf_counter() - start, 2)
        rows.append(row)
        print(f"n={n:>6}  " + "  ".join(f"{k}={v:.4f}" for k, v in row.items() if k not in ("n", "seconds")), flush=True)
    print(dumps({"truth": truth, "alpha": args.alpha, "rows": rows}))


if __name__ == "__main__":
    main()
