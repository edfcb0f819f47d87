"""Command-line entry point: ``renest <command> [flags]``.

Exit codes: 0 ok, 2 bad arguments, 3 bad data, 4 failed acceptance criterion.
Seeds resolve as ``--seed`` flag, then the config file, then RENEST_SEED, then 0.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import DataError, DiscreteDist, DivergenceOrder, GaussianSpec, dumps, load_samples

EXIT_OK, EXIT_ARGS, EXIT_DATA, EXIT_CRITERION = 0, 2, 3, 4

THEOREMS = {
    "kl-compact": "KL deviation radius, compactly supported samples (r, d, sigma, n, z)",
    "renyi-compact": "Renyi deviation radius, compactly supported samples (r, d, sigma, n, z, alpha)",
    "kl-subgauss": "KL deviation radius, sub-Gaussian samples (L, p, tau, d, sigma, n, z)",
    "one-sample": "one-sample KL deviation radius against a known target (r, d, sigma, n, z)",
    "neural-kl": "neural KL estimation error (M, beta, d, delta, n, z)",
    "neural-renyi": "neural Renyi estimation error (M, beta, d, delta, n, z, alpha)",
    "unsmoothed-kl": "unsmoothed KL error through smoothing (n, d, s, r, M, z)",
    "smoothing-gap": "|D(mu||nu) - D(smoothed)| bound (M, d, s, sigma, divergence)",
}


class UsageError(Exception):
    """Invalid arguments or configuration (exit 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; keys mirror flag names, flags win")
    p.add_argument("--seed", type=int, help="random seed (fallback: RENEST_SEED, then 0)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for parallel inner loops")
    p.add_argument("--timing", action="store_true", help="add wall-clock seconds to the report")


def _divergence(p: argparse.ArgumentParser) -> None:
    p.add_argument("--divergence", choices=["kl", "renyi"], default="kl")
    p.add_argument("--alpha", type=float, help="Renyi order (required for renyi; 1 is rejected)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="renest", description="Smoothed and neural estimators of KL and Renyi divergences.")
    parser.add_argument("--version", action="version", version=f"renest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    est = sub.add_parser("estimate", help="estimate a divergence from samples")
    _common(est)
    est.add_argument("--method", choices=["plugin-smoothed", "neural"], required=True)
    _divergence(est)
    est.add_argument("--x", required=True, help="samples from mu (CSV or JSONL)")
    est.add_argument("--y", help="samples from nu; omit to use a known Gaussian target")
    est.add_argument("--nu-mean", type=_floats, help="one-sample target mean (comma list)")
    est.add_argument("--nu-var", type=float, help="one-sample target variance")
    est.add_argument("--sigma", type=float, help="smoothing scale (plugin-smoothed)")
    est.add_argument("--mc-draws", type=int, default=100_000)
    est.add_argument("--antithetic", action="store_true")
    est.add_argument("--objective", choices=["KL_DV", "KL_linear", "Renyi_log", "Renyi_linear"])
    est.add_argument("--width", type=int, default=32)
    est.add_argument("--activation", choices=["relu", "sigmoid", "tanh"], default="relu")
    est.add_argument("--clip", type=float, default=10.0, help="output clip of the network class")
    est.add_argument("--steps", type=int, default=300)
    est.add_argument("--step-size", type=float, default=0.1)
    est.add_argument("--restarts", type=int, default=3)

    orc = sub.add_parser("oracle", help="exact divergence between discrete or Gaussian laws")
    _common(orc)
    orc.add_argument("--family", choices=["discrete", "gaussian"], required=True)
    _divergence(orc)
    orc.add_argument("--mu-atoms", type=_floats)
    orc.add_argument("--mu-probs", type=_floats)
    orc.add_argument("--nu-atoms", type=_floats)
    orc.add_argument("--nu-probs", type=_floats)
    orc.add_argument("--mu-mean", type=_floats)
    orc.add_argument("--mu-var", type=float)
    orc.add_argument("--nu-mean", type=_floats)
    orc.add_argument("--nu-var", type=float)

    tags = "\n".join(f"  {k:<14} {v}" for k, v in THEOREMS.items())
    bnd = sub.add_parser(
        "bound",
        help="evaluate a deviation bound",
        description="theorem tags:\n" + tags,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _common(bnd)
    bnd.add_argument("--theorem", choices=list(THEOREMS), required=True, help="one of: " + ", ".join(THEOREMS))
    for name, kind in [
        ("r", float), ("d", int), ("sigma", float), ("n", int), ("z", float), ("alpha", float),
        ("L", float), ("p", float), ("tau", float), ("M", float), ("beta", float), ("delta", float),
        ("s", float), ("c-dbeta", float), ("C-universal", float),
    ]:
        bnd.add_argument(f"--{name}", type=kind)
    bnd.add_argument("--divergence", choices=["kl", "renyi"], default="kl")

    rad = sub.add_parser("rademacher", help="Rademacher supremum of a tabular or network class")
    _common(rad)
    rad.add_argument("--x", required=True)
    rad.add_argument("--mode", choices=["exact", "mc"], default="mc")
    rad.add_argument("--class", dest="function_class", choices=["tabular", "shallow_net"], default="tabular")
    rad.add_argument("--bound", type=float, default=1.0, help="sup-norm bound (tabular) or output clip (net)")
    rad.add_argument("--width", type=int, default=8)
    rad.add_argument("--activation", choices=["relu", "sigmoid", "tanh"], default="relu")
    rad.add_argument("--epsilon-draws", type=int, default=10_000)

    aud = sub.add_parser("audit", help="Renyi differential-privacy audit from paired output samples")
    _common(aud)
    aud.add_argument("--x", required=True)
    aud.add_argument("--y", required=True)
    aud.add_argument("--alpha", type=float, required=True)
    aud.add_argument("--epsilon", type=float, required=True)
    aud.add_argument("--m", type=float, required=True, help="density-ratio bound M")
    aud.add_argument("--beta", type=float, default=1.0)
    aud.add_argument("--delta-n", type=float, default=0.0)
    aud.add_argument("--tau", type=float, default=0.5)
    aud.add_argument("--c-dbeta", type=float, default=1.0)
    aud.add_argument("--alt-gap", type=float)
    aud.add_argument("--width", type=int, default=16)
    aud.add_argument("--clip", type=float, help="estimator output clip (default log M)")
    aud.add_argument("--steps", type=int, default=200)
    aud.add_argument("--step-size", type=float, default=0.2)
    aud.add_argument("--restarts", type=int, default=3)

    ver = sub.add_parser("verify", help="run the acceptance suite")
    _common(ver)
    ver.add_argument("--suite", choices=["fast", "full"], default="fast")
    ver.add_argument("--only", type=lambda s: [int(t) for t in s.split(",")], help="comma list of criteria")
    return parser


# ---------------------------------------------------------------- config


def read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else (":" if ":" in line else None)
        if sep is None:
            raise UsageError(f"{path}:{number}: expected key = value")
        key, value = (part.strip() for part in line.split(sep, 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _subparser(parser: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # type: ignore[union-attr]
        if command in action.choices:
            return action.choices[command]
    raise UsageError(f"unknown command {command}")


def _apply_config(sub: argparse.ArgumentParser, args: argparse.Namespace, argv: list[str]) -> None:
    """Fill values from the config file for every option not given on the command line."""
    given = {tok.split("=", 1)[0] for tok in argv if tok.startswith("--")}
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    for key, text in read_config(args.config).items():
        if key not in actions or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        action = actions[key]
        if any(opt in given for opt in action.option_strings):
            continue
        if isinstance(action, argparse._StoreTrueAction):
            value = text.lower() in ("1", "true", "yes", "on")
        else:
            try:
                value = action.type(text) if action.type else text
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config key {key}: {value!r} not in {sorted(action.choices)}")
        setattr(args, key, value)


def resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get("RENEST_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"RENEST_SEED must be an integer, got {env!r}") from exc
    return 0


def _order(args) -> DivergenceOrder:
    if args.divergence == "renyi":
        if args.alpha is None:
            raise UsageError("--divergence renyi needs --alpha")
        return DivergenceOrder.renyi(args.alpha)
    return DivergenceOrder.kl()


def _need(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command}: missing " + ", ".join("--" + m.replace("_", "-") for m in missing))


# ---------------------------------------------------------------- commands


def cmd_estimate(args) -> dict:
    from .smoothed_plugin import IntegrationConfig, smoothed_divergence_one_sample, smoothed_kl_plugin, smoothed_renyi_plugin
    from .variational import FunctionClassSpec, Objective, TrainConfig, train_estimator

    order = _order(args)
    X = load_samples(args.x)
    if args.method == "plugin-smoothed":
        _need(args, "sigma")
        cfg = IntegrationConfig(mc_draws=args.mc_draws, seed=args.seed, antithetic=args.antithetic, jobs=args.jobs)
        if args.y is None:
            _need(args, "nu_mean", "nu_var")
            target = GaussianSpec(args.nu_mean, args.nu_var)
            return smoothed_divergence_one_sample(X, target, args.sigma, order, cfg).to_dict()
        Y = load_samples(args.y)
        if order.is_kl:
            return smoothed_kl_plugin(X, Y, args.sigma, cfg).to_dict()
        return smoothed_renyi_plugin(X, Y, args.sigma, order.alpha, cfg).to_dict()
    _need(args, "y")
    Y = load_samples(args.y)
    kind = args.objective or ("KL_DV" if order.is_kl else "Renyi_log")
    if (kind.startswith("KL")) != order.is_kl:
        raise UsageError(f"objective {kind} does not estimate the {order.kind} divergence")
    obj = Objective(kind, None if order.is_kl else order.alpha)
    spec = FunctionClassSpec.shallow_net(d=X.d, width=args.width, activation=args.activation, output_clip=args.clip)
    cfg = TrainConfig(
        steps=args.steps, step_size=args.step_size, restarts=args.restarts, seed=args.seed, jobs=args.jobs
    )
    return train_estimator(spec, X, Y, obj, cfg).to_dict()


def _discrete(atoms, probs, label: str) -> DiscreteDist:
    if atoms is None or probs is None:
        raise UsageError(f"discrete family needs --{label}-atoms and --{label}-probs")
    return DiscreteDist(atoms, probs)


def cmd_oracle(args) -> dict:
    from .oracle import discrete_divergence, gaussian_divergence

    order = _order(args)
    if args.family == "discrete":
        res = discrete_divergence(
            _discrete(args.mu_atoms, args.mu_probs, "mu"), _discrete(args.nu_atoms, args.nu_probs, "nu"), order
        )
    else:
        _need(args, "mu_mean", "mu_var", "nu_mean", "nu_var")
        res = gaussian_divergence(GaussianSpec(args.mu_mean, args.mu_var), GaussianSpec(args.nu_mean, args.nu_var), order)
    return {"value": res.value, "exact": res.exact, "divergence": order.kind, "alpha": order.alpha}


def cmd_bound(args) -> dict:
    from . import bounds as B

    t = args.theorem
    C = 1.0 if args.C_universal is None else args.C_universal
    if t in ("kl-compact", "renyi-compact", "one-sample"):
        _need(args, "r", "d", "sigma", "n", "z")
        p = B.CompactParams(args.r, args.d, args.sigma, args.n, args.z, C)
        if t == "kl-compact":
            res = B.kl_compact_radius(p)
        elif t == "one-sample":
            res = B.one_sample_kl_radius(p)
        else:
            _need(args, "alpha")
            res = B.renyi_compact_radius(p, args.alpha)
    elif t == "kl-subgauss":
        _need(args, "L", "p", "tau", "d", "sigma", "n", "z")
        res = B.kl_subgauss_radius(B.SubGaussParams(args.L, args.p, args.tau, args.d, args.sigma, args.n, args.z, C))
    elif t in ("neural-kl", "neural-renyi"):
        _need(args, "M", "beta", "d", "n", "z")
        c = 1.0 if args.c_dbeta is None else args.c_dbeta
        p = B.NeuralBoundParams(args.M, args.beta, args.d, args.delta or 0.0, args.n, args.z, c, C)
        if t == "neural-kl":
            res = B.neural_kl_radius(p)
        else:
            _need(args, "alpha")
            res = B.neural_renyi_radius(p, args.alpha)
    elif t == "unsmoothed-kl":
        _need(args, "n", "d", "s", "r", "M", "z")
        res = B.unsmoothed_kl_radius(args.n, args.d, args.s, args.r, args.M, args.z, C)
    else:
        _need(args, "M", "d", "s", "sigma")
        gap = B.smoothing_gap(B.ApproxParams(args.M, args.d, args.s, args.sigma), _order(args))
        return {"radius": gap, "probability": 0.0, "raw_probability": 0.0, "log_constants": {}}
    out = res.to_dict()
    out.pop("log_radius", None)
    out["log_radius"] = res.log_radius
    return out


def cmd_rademacher(args) -> dict:
    from .rademacher import RademacherConfig, rademacher_sup
    from .variational import FunctionClassSpec

    X = load_samples(args.x)
    if args.function_class == "tabular":
        spec = FunctionClassSpec.tabular(np.unique(X.data, axis=0), output_clip=args.bound)
    else:
        spec = FunctionClassSpec.shallow_net(d=X.d, width=args.width, activation=args.activation, output_clip=args.bound)
    cfg = RademacherConfig(epsilon_draws=args.epsilon_draws, seed=args.seed)
    return rademacher_sup(X, spec, mode=args.mode, cfg=cfg).to_dict()


def cmd_audit(args) -> dict:
    from .audit import AuditConfig, run_audit
    from .variational import FunctionClassSpec, TrainConfig

    X, Y = load_samples(args.x), load_samples(args.y)
    clip = args.clip if args.clip is not None else math.log(args.m)
    if not clip > 0:
        raise UsageError("--m 1 gives output clip log M = 0; pass --clip")
    cfg = AuditConfig(
        alpha=args.alpha, epsilon=args.epsilon, M=args.m, beta=args.beta, d=X.d, delta_n=args.delta_n,
        tau=args.tau, c_dbeta=args.c_dbeta,
        estimator=FunctionClassSpec.shallow_net(d=X.d, width=args.width, output_clip=clip),
        train=TrainConfig(steps=args.steps, step_size=args.step_size, restarts=args.restarts, seed=args.seed),
    )
    return run_audit(X, Y, cfg, args.alt_gap).to_dict()


def cmd_verify(args) -> tuple[dict, int]:
    from . import acceptance as A

    numbers = args.only or (A.FULL if args.suite == "full" else A.FAST)
    unknown = [n for n in numbers if n not in A.CRITERIA and n != 10]
    if unknown:
        raise UsageError(f"unknown criteria {unknown}")
    outcomes = []
    for number in numbers:
        if number == 10:
            continue
        out = A.run_criterion(number, args.seed)
        print(A.summary_line(out), file=sys.stderr, flush=True)
        outcomes.append(out)
    start = time.perf_counter()
    det = A.Outcome(10, A.determinism_report(outcomes, args.seed), 0.0, math.inf)
    det.elapsed = time.perf_counter() - start
    print(A.summary_line(det), file=sys.stderr, flush=True)
    outcomes.append(det)
    failed = [o.number for o in outcomes if not o.passed]
    for number in failed:
        print(f"FAILED: criterion {number}", file=sys.stderr)
    payload = {
        "suite": args.suite,
        "passed": not failed,
        "failed": failed,
        "criteria": [
            {"report": o.report, "elapsed_seconds": o.elapsed, "budget_seconds": o.budget, "passed": o.passed}
            for o in outcomes
        ],
    }
    return payload, (EXIT_CRITERION if failed else EXIT_OK)


COMMANDS = {
    "estimate": cmd_estimate,
    "oracle": cmd_oracle,
    "bound": cmd_bound,
    "rademacher": cmd_rademacher,
    "audit": cmd_audit,
}


def _resolved_config(args) -> dict:
    skip = {"config", "out", "timing", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            _apply_config(_subparser(parser, args.command), args, argv)
        args.seed = resolve_seed(args)
        if args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        start = time.perf_counter()
        if args.command == "verify":
            result, code = cmd_verify(args)
        else:
            result, code = COMMANDS[args.command](args), EXIT_OK
        report = {
            "command": args.command,
            "version": __version__,
            "seed": args.seed,
            "config": _resolved_config(args),
            "result": result,
        }
        if args.timing:
            report["wall_clock_seconds"] = time.perf_counter() - start
        text = dumps(report) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return code
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
