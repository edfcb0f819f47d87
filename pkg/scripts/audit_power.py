"""Rejection rate of the Renyi-DP audit against Gaussian alternatives of growing size.

The alternative divergence is expressed as a multiple of the critical value t_n.

    python3 scripts/audit_power.py --n 1000 --multiples 0.5,1,2,5,10 --trials 20
"""

import argparse
import math

from renest.audit import AuditConfig, critical_value, run_audit
from renest.core import dumps, make_rng
from renest.variational import FunctionClassSpec, TrainConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--alpha", type=float, default=2.0)
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--multiples", default="0.5,1,2,5,10")
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    cfg = AuditConfig(
        alpha=args.alpha, epsilon=args.epsilon, M=1.0,
        estimator=FunctionClassSpec.shallow_net(d=1, width=8, output_clip=5.0),
        train=TrainConfig(steps=150, step_size=0.2, restarts=2, seed=args.seed),
    )
    t_n = critical_value(cfg, args.n)
    rows = []
    for multiple in (float(m) for m in args.multiples.split(",")):
        divergence = multiple * t_n
        shift = math.sqrt(2.0 * divergence / args.alpha)  # D_alpha(N(0,1) || N(shift,1)) = alpha shift^2 / 2
        rejected = 0
        for trial in range(args.trials):
            rng = make_rng(args.seed, trial)
            X, Y = rng.standard_normal((args.n, 1)), shift + rng.standard_normal((args.n, 1))
            rejected += run_audit(X, Y, cfg).decision == "reject_H0"
        rows.append({"multiple_of_t_n": multiple, "divergence": divergence, "rejection_rate": rejected / args.trials})
        print(f"D = {multiple:>5.2f} t_n  rejection rate {rejected / args.trials:.2f}", flush=True)
    print(dumps({"critical_value": t_n, "n": args.n, "rows": rows}))


if __name__ == "__main__":
    main()
