"""Acceptance checks shared by ``renest verify`` and the test suite.

Each check returns a deterministic report (a pure function of the seed) and is
timed separately; timing decides the runtime budget but never enters the
report, so re-running a check reproduces its report byte for byte.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import __version__
from .audit import AuditConfig, critical_value, e1_bound, run_audit
from .bounds import (
    ApproxParams,
    CompactParams,
    b_param,
    c_ds,
    covering_constant_ball,
    kl_compact_radius,
    orlicz_c_q,
    smoothing_gap,
    v_factor,
    xi_compact,
    xi_tilde,
    z_for_tail,
)
from .core import DiscreteDist, DivergenceOrder, SampleMatrix, dumps, make_rng
from .oracle import discrete_divergence, kl_discrete, renyi_discrete, smoothed_divergence_quadrature
from .rademacher import FiniteClass, RademacherConfig, rademacher_sup
from .smoothed_plugin import IntegrationConfig, smoothed_kl_plugin, smoothed_renyi_plugin
from .variational import (
    FunctionClassSpec,
    Objective,
    TrainConfig,
    exact_discrete_supremum,
    fit,
    net_gradient,
    train_estimator,
    eval_objective,
    evaluate,
)

DEFAULT_SEED = 0
OBJECTIVES = (
    Objective("KL_linear"),
    Objective("KL_DV"),
    Objective("Renyi_log", 0.5),
    Objective("Renyi_log", 2.0),
    Objective("Renyi_linear", 0.5),
    Objective("Renyi_linear", 2.0),
)


def _label(obj: Objective) -> str:
    return obj.kind if obj.alpha is None else f"{obj.kind}(alpha={obj.alpha:g})"


class _Checks:
    def __init__(self) -> None:
        self.items: list[dict] = []

    def close(self, name: str, value: float, expected: float, tol: float) -> bool:
        ok = bool(abs(value - expected) <= tol)
        self.items.append({"name": name, "value": value, "expected": expected, "tolerance": tol, "passed": ok})
        return ok

    def at_most(self, name: str, value: float, limit: float) -> bool:
        ok = bool(value <= limit)
        self.items.append({"name": name, "value": value, "limit": limit, "passed": ok})
        return ok

    def at_least(self, name: str, value: float, limit: float) -> bool:
        ok = bool(value >= limit)
        self.items.append({"name": name, "value": value, "minimum": limit, "passed": ok})
        return ok

    @property
    def passed(self) -> bool:
        return all(item["passed"] for item in self.items)


def _report(number: int, title: str, checks: _Checks, seed: int, **info) -> dict:
    return {
        "criterion": number,
        "title": title,
        "seed": seed,
        "version": __version__,
        "passed": checks.passed,
        "checks": checks.items,
        "info": info,
    }


# ---------------------------------------------------------------- 1


def random_discrete_pair(rng: np.random.Generator, k: int, atoms=None) -> tuple[DiscreteDist, DiscreteDist]:
    atoms = np.arange(k, dtype=float) if atoms is None else atoms

    def weights() -> np.ndarray:
        w = 0.8 * rng.dirichlet(np.ones(k)) + 0.2 / k
        return w / w.sum()

    return DiscreteDist(atoms, weights()), DiscreteDist(atoms, weights())


def criterion_1(seed: int = DEFAULT_SEED) -> dict:
    rng = make_rng(seed, 1)
    checks = _Checks()
    worst_exact = worst_trained = 0.0
    cfg = TrainConfig(steps=2000, step_size=1.0, decay=1.0, restarts=1, seed=seed)
    for pair in range(20):
        k = int(rng.integers(2, 9))
        mu, nu = random_discrete_pair(rng, k)
        spec = FunctionClassSpec.tabular(mu.atoms)
        for obj in OBJECTIVES:
            truth = renyi_discrete(mu, nu, obj.alpha).value if obj.is_renyi else kl_discrete(mu, nu).value
            exact = exact_discrete_supremum(mu, nu, obj)
            trained = train_estimator(spec, mu.atoms, nu.atoms, obj, cfg, mu.probs, nu.probs).value
            worst_exact = max(worst_exact, abs(exact - truth))
            worst_trained = max(worst_trained, abs(trained - truth))
    checks.at_most("max |exact supremum - oracle|", worst_exact, 1e-6)
    checks.at_most("max |trained tabular - oracle|", worst_trained, 1e-6)
    return _report(1, "discrete exactness", checks, seed, pairs=20, objectives=[_label(o) for o in OBJECTIVES])


# ---------------------------------------------------------------- 2


def criterion_2(seed: int = DEFAULT_SEED) -> dict:
    rng = make_rng(seed, 2)
    n = 20_000
    X = rng.standard_normal((n, 1))
    Y = 1.0 + rng.standard_normal((n, 1))
    spec = FunctionClassSpec.shallow_net(d=1, width=32, activation="relu", output_clip=10.0, param_bound=10.0)
    cfg = TrainConfig(steps=200, step_size=0.2, decay=0.999, restarts=3, seed=seed)
    checks = _Checks()
    kl = fit(spec, X, Y, Objective("KL_linear"), cfg)
    checks.close("neural KL (KL_linear) vs 0.5", kl.value, 0.5, 0.05)
    ren = fit(spec, X, Y, Objective("Renyi_log", 2.0), cfg)
    checks.close("neural Renyi-2 (Renyi_log) vs 1.0", ren.value, 1.0, 0.08)
    return _report(
        2, "neural Gaussian consistency", checks, seed, n=n, width=32, restarts=3,
        kl_restart_values=kl.restart_values, renyi_restart_values=ren.restart_values,
    )


# ---------------------------------------------------------------- 3


def truncated_normal(rng: np.random.Generator, mean: float, sd: float, n: int, lo=-1.0, hi=1.0) -> np.ndarray:
    out = np.empty(0)
    while out.size < n:
        draw = rng.normal(mean, sd, size=2 * n)
        out = np.concatenate([out, draw[(draw >= lo) & (draw <= hi)]])
    return out[:n]


def criterion_3(seed: int = DEFAULT_SEED) -> dict:
    checks = _Checks()
    cfg = IntegrationConfig(mc_draws=100_000, seed=seed)
    X0, Y1 = SampleMatrix([[0.0]]), SampleMatrix([[1.0]])
    kl = smoothed_kl_plugin(X0, Y1, 1.0, cfg)
    checks.close("single atom KL vs 0.5 (3 MC-SE)", kl.value, 0.5, 3 * kl.mc_std_error)
    ren = smoothed_renyi_plugin(X0, Y1, 1.0, 2.0, cfg)
    checks.close("single atom Renyi-2 vs 1.0 (3 MC-SE)", ren.value, 1.0, 3 * ren.mc_std_error)
    rng = make_rng(seed, 3)
    A = truncated_normal(rng, 0.0, 0.2, 500)
    B = truncated_normal(rng, 0.5, 0.2, 500)
    mix = smoothed_kl_plugin(A, B, 0.5, cfg)
    quad = smoothed_divergence_quadrature(
        DiscreteDist.empirical(SampleMatrix(A)), DiscreteDist.empirical(SampleMatrix(B)), 0.5, DivergenceOrder.kl()
    ).value
    checks.close("500-atom mixture KL vs quadrature", mix.value, quad, 0.05)
    return _report(
        3, "smoothed plug-in oracle match", checks, seed,
        kl_se=kl.mc_std_error, renyi_se=ren.mc_std_error, mixture_se=mix.mc_std_error,
    )


# ---------------------------------------------------------------- 4


def central_difference(fn: Callable[[np.ndarray], float], theta: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.empty_like(theta)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (fn(up) - fn(down)) / (2.0 * h)
    return grad


def gradient_relative_error(spec, theta, obj, X, Y) -> float:
    analytic = net_gradient(spec, theta, obj, X, Y)
    numeric = central_difference(lambda t: eval_objective(obj, evaluate(spec, t, X), evaluate(spec, t, Y)), theta)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def criterion_4(seed: int = DEFAULT_SEED) -> dict:
    rng = make_rng(seed, 4)
    X = rng.standard_normal((40, 2))
    Y = 0.5 + rng.standard_normal((40, 2))
    checks = _Checks()
    worst = {}
    for activation in ("relu", "sigmoid", "tanh"):
        spec = FunctionClassSpec.shallow_net(d=2, width=6, activation=activation, output_clip=50.0)
        for obj in OBJECTIVES:
            errs = [
                gradient_relative_error(spec, 0.5 * rng.standard_normal(spec.n_params), obj, X, Y)
                for _ in range(10)
            ]
            worst[f"{activation}/{_label(obj)}"] = max(errs)
    checks.at_most("max relative gradient error", max(worst.values()), 1e-4)
    return _report(4, "gradient correctness", checks, seed, per_combination=worst)


# ---------------------------------------------------------------- 5


def criterion_5(seed: int = DEFAULT_SEED) -> dict:
    checks = _Checks()
    checks.close("b_param(1, 1)", b_param(1, 1), 5.0, 0.0)
    checks.close("log xi_compact(1, 1, 1)", xi_compact(1, 1, 1, log=True), 30.0, 0.0)
    target = (3 * math.e) ** 9
    checks.close("xi_tilde(0, 1, 1) relative to (3e)^9", xi_tilde(0, 1, 1) / target, 1.0, 1e-6)
    gamma_form = math.sqrt(2.0 / math.pi)
    checks.close("c_ds(1, 1) vs sqrt(2/pi)", c_ds(1, 1), gamma_form, 1e-9)
    z = np.abs(make_rng(seed, 5).standard_normal(1_000_000))
    se = float(z.std(ddof=1) / math.sqrt(z.size))
    checks.close("c_ds(1, 1) vs 1e6-draw MC (3 SE)", c_ds(1, 1), float(z.mean()), 3 * se)
    checks.close("v_factor(e, 2, 0.5) relative to 161.37", v_factor(math.e, 2.0, 0.5) / 161.37, 1.0, 1e-3)
    checks.close("covering_constant_ball(1, 1) relative to 61.68", covering_constant_ball(1, 1) / 61.68, 1.0, 1e-3)
    checks.close("orlicz c_1 (tilde c = 1)", orlicz_c_q(1.0, 1.0), 4.0 * (17.0 + 1.0 / math.log(2.0)), 1e-6)
    checks.close("orlicz c_1 vs 73.77", orlicz_c_q(1.0, 1.0), 73.77, 1e-2)
    return _report(5, "constant spot values", checks, seed)


# ---------------------------------------------------------------- 6


def _ratio_bounded_pair(rng: np.random.Generator, max_ratio: float) -> tuple[DiscreteDist, DiscreteDist, float]:
    while True:
        atoms = np.sort(rng.uniform(-1.0, 1.0, size=3))
        if np.min(np.diff(atoms)) < 0.05:
            continue
        p, q = rng.dirichlet(2.0 * np.ones(3)), rng.dirichlet(2.0 * np.ones(3))
        ratio = float(max(np.max(p / q), np.max(q / p)))
        if ratio <= max_ratio:
            return DiscreteDist(atoms, p / p.sum()), DiscreteDist(atoms, q / q.sum()), ratio


def criterion_6(seed: int = DEFAULT_SEED, pairs: int = 20) -> dict:
    rng = make_rng(seed, 6)
    orders = (DivergenceOrder.kl(), DivergenceOrder.renyi(0.5), DivergenceOrder.renyi(2.0))
    violations = 0
    tightest = math.inf
    for _ in range(pairs):
        mu, nu, M = _ratio_bounded_pair(rng, 4.0)
        for order in orders:
            unsmoothed = discrete_divergence(mu, nu, order).value
            for sigma in (0.1, 0.2, 0.5):
                smoothed = smoothed_divergence_quadrature(mu, nu, sigma, order).value
                gap = smoothing_gap(ApproxParams(M=M, d=1, s=1.0, sigma=sigma), order)
                diff = abs(unsmoothed - smoothed)
                violations += int(diff > gap)
                tightest = min(tightest, gap / diff if diff > 0 else math.inf)
    checks = _Checks()
    checks.at_most("violations of the smoothing-gap bound", violations, 0)
    return _report(
        6, "smoothing-gap bound validity", checks, seed, pairs=pairs, s=1.0,
        sigmas=[0.1, 0.2, 0.5], orders=["KL", "Renyi(0.5)", "Renyi(2)"], min_bound_to_gap_ratio=tightest,
    )


# ---------------------------------------------------------------- 7


COVERAGE_MU = DiscreteDist([-1.0, 0.0, 1.0], [0.5, 0.3, 0.2])
COVERAGE_NU = DiscreteDist([-1.0, 0.0, 1.0], [0.2, 0.3, 0.5])


def coverage_study(seed: int, trials: int = 200, n: int = 500, sigma: float = 1.0, tail: float = 0.05) -> dict:
    """Exceedance frequency of the compact-support KL radius (r=1, d=1)."""
    kl = DivergenceOrder.kl()
    population = smoothed_divergence_quadrature(COVERAGE_MU, COVERAGE_NU, sigma, kl).value
    z = z_for_tail(n, tail, prefactor=2.0)
    bound = kl_compact_radius(CompactParams(r=1.0, d=1, sigma=sigma, n=n, z=z))
    deviations = []
    for trial in range(trials):
        rng = make_rng(seed, 7, trial)
        X = COVERAGE_MU.sample(n, rng)
        Y = COVERAGE_NU.sample(n, rng)
        plug_in = smoothed_divergence_quadrature(DiscreteDist.empirical(X), DiscreteDist.empirical(Y), sigma, kl).value
        deviations.append(abs(plug_in - population))
    dev = np.asarray(deviations)
    exceed = float(np.mean(dev > bound.radius))
    looseness = np.median(bound.radius / np.maximum(dev, 1e-300))
    return {
        "population_smoothed_kl": population,
        "z": z,
        "radius": bound.radius,
        "raw_tail": bound.raw_probability,
        "exceedance": exceed,
        "median_deviation": float(np.median(dev)),
        "max_deviation": float(dev.max()),
        "median_looseness": float(looseness),
    }


def criterion_7(seed: int = DEFAULT_SEED, trials: int = 200) -> dict:
    study = coverage_study(seed, trials=trials)
    limit = 0.05 + 3.0 * math.sqrt(0.05 * 0.95 / trials)
    checks = _Checks()
    checks.at_most("exceedance frequency", study["exceedance"], limit)
    return _report(7, "compact-support KL radius coverage", checks, seed, trials=trials, **study)


# ---------------------------------------------------------------- 8


def criterion_8(seed: int = DEFAULT_SEED) -> dict:
    checks = _Checks()
    one = rademacher_sup([[0.0]], FiniteClass([[3.0]]), mode="exact").value
    checks.close("n=1 singleton value 3", one, 3.0, 1e-12)
    two = rademacher_sup([[0.0], [1.0]], FiniteClass([[1.0, -1.0]]), mode="exact").value
    checks.close("n=2 singleton values (1,-1)", two, 1.0, 1e-12)
    rng = make_rng(seed, 8)
    X = rng.standard_normal((8, 1))
    values = FiniteClass(rng.standard_normal((5, 8)))
    exact = rademacher_sup(X, values, mode="exact")
    mc = rademacher_sup(X, values, mode="mc", cfg=RademacherConfig(epsilon_draws=100_000, seed=seed))
    checks.close("n=8 exact vs MC (3 SE)", mc.value, exact.value, 3 * mc.std_error)
    return _report(8, "Rademacher enumeration", checks, seed, mc_std_error=mc.std_error)


# ---------------------------------------------------------------- 9


def randomized_response(p: float) -> tuple[DiscreteDist, DiscreteDist]:
    return DiscreteDist([0.0, 1.0], [p, 1.0 - p]), DiscreteDist([0.0, 1.0], [1.0 - p, p])


def rr_probability_for(alpha: float, target: float) -> float:
    """p in (1/2, 1) whose randomized-response pair has D_alpha equal to target."""
    lo, hi = 0.5, 1.0 - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if renyi_discrete(*randomized_response(mid), alpha).value < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def criterion_9(seed: int = DEFAULT_SEED, null_trials: int = 100, power_trials: int = 20) -> dict:
    checks = _Checks()
    checks.close("e1 bound at n=256, tau=0.5 (relative)", e1_bound(256, 0.5) / (2 * math.exp(-16)), 1.0, 1e-12)

    alpha, eps, n0 = 2.0, 0.5, 200
    p = rr_probability_for(alpha, 0.9 * eps)
    mu0, nu0 = randomized_response(p)
    M = p / (1.0 - p)
    null_cfg = AuditConfig(
        alpha=alpha, epsilon=eps, M=M, beta=1.0, d=1, delta_n=0.0, tau=0.5,
        estimator=FunctionClassSpec.tabular([0.0, 1.0], output_clip=math.log(M)),
        train=TrainConfig(steps=500, step_size=1.0, decay=1.0, restarts=1, seed=seed),
    )
    rejections = 0
    for trial in range(null_trials):
        rng = make_rng(seed, 9, 0, trial)
        rep = run_audit(mu0.sample(n0, rng), nu0.sample(n0, rng), null_cfg)
        rejections += rep.decision == "reject_H0"
    e1 = e1_bound(n0, 0.5)
    checks.at_most("type-I rejection rate", rejections / null_trials, e1 + 3 * math.sqrt(e1 * (1 - e1) / null_trials))

    n1, eps1 = 1000, 0.1
    alt_cfg = AuditConfig(
        alpha=alpha, epsilon=eps1, M=1.0, beta=1.0, d=1, delta_n=0.0, tau=0.5,
        estimator=FunctionClassSpec.shallow_net(d=1, width=8, output_clip=5.0),
        train=TrainConfig(steps=150, step_size=0.2, restarts=2, seed=seed),
    )
    t_n = critical_value(alt_cfg, n1)
    shift = math.sqrt(10.0 * t_n / alpha * 2.0) * 1.01  # D_2 between unit Gaussians is shift^2
    d_alt = alpha * shift**2 / 2.0
    rejected = 0
    for trial in range(power_trials):
        rng = make_rng(seed, 9, 1, trial)
        rep = run_audit(rng.standard_normal((n1, 1)), shift + rng.standard_normal((n1, 1)), alt_cfg, d_alt - eps1)
        rejected += rep.decision == "reject_H0"
    checks.at_least("power", rejected / power_trials, 0.9)
    return _report(
        9, "audit behavior", checks, seed, null_p=p, null_M=M, null_rejections=rejections,
        alt_critical=t_n, alt_divergence=d_alt, alt_rejections=rejected,
    )


# ---------------------------------------------------------------- runner


CRITERIA: dict[int, tuple[Callable[[int], dict], float]] = {
    1: (criterion_1, 10.0),
    2: (criterion_2, 120.0),
    3: (criterion_3, 60.0),
    4: (criterion_4, 60.0),
    5: (criterion_5, 30.0),
    6: (criterion_6, 60.0),
    7: (criterion_7, 900.0),
    8: (criterion_8, 30.0),
    9: (criterion_9, 120.0),
}
FAST = (1, 2, 3, 4, 5, 6, 8, 9)
FULL = (1, 2, 3, 4, 5, 6, 7, 8, 9)


@dataclass
class Outcome:
    number: int
    report: dict
    elapsed: float
    budget: float

    @property
    def within_budget(self) -> bool:
        return self.elapsed <= self.budget

    @property
    def passed(self) -> bool:
        return bool(self.report["passed"]) and self.within_budget


def run_criterion(number: int, seed: int = DEFAULT_SEED) -> Outcome:
    fn, budget = CRITERIA[number]
    start = time.perf_counter()
    report = fn(seed)
    return Outcome(number, report, time.perf_counter() - start, budget)


def determinism_report(outcomes: list[Outcome], seed: int) -> dict:
    """Criterion 10: re-run every criterion and compare serialized reports."""
    checks = _Checks()
    for out in outcomes:
        again = CRITERIA[out.number][0](seed)
        same = dumps(again) == dumps(out.report)
        checks.items.append({"name": f"criterion {out.number} byte-identical", "passed": same})
    return _report(10, "determinism", checks, seed, rerun=[o.number for o in outcomes])


def run_suite(suite: str = "fast", seed: int = DEFAULT_SEED, log: Callable[[str], None] | None = None) -> list[Outcome]:
    numbers = FULL if suite == "full" else FAST
    outcomes = []
    for number in numbers:
        out = run_criterion(number, seed)
        if log:
            log(summary_line(out))
        outcomes.append(out)
    start = time.perf_counter()
    det = Outcome(10, determinism_report(outcomes, seed), 0.0, math.inf)
    det.elapsed = time.perf_counter() - start
    if log:
        log(summary_line(det))
    outcomes.append(det)
    return outcomes


def summary_line(out: Outcome) -> str:
    status = "PASS" if out.passed else "FAIL"
    budget = "" if math.isinf(out.budget) else f" (budget {out.budget:.0f}s)"
    note = "" if out.within_budget else " over budget"
    return f"criterion {out.number:>2} {status}  {out.report['title']}  [{out.elapsed:.1f}s{budget}{note}]"
