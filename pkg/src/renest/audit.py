"""Renyi differential-privacy audit: statistic, critical value, decision, error certificates."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import GapParams, audit_error_exponent, v_factor
from .core import as_samples, check_alpha, ensure
from .variational import FunctionClassSpec, Objective, TrainConfig, fit

PREMISE_NOTE = (
    "class containment in the smooth bounded class and the (M, delta_n) approximation "
    "premise are assumed, not verified from samples"
)


class AuditError(RuntimeError):
    """Raised when the statistic cannot be computed (no decision is made)."""


@dataclass(frozen=True)
class AuditConfig:
    alpha: float = 2.0
    epsilon: float = 1.0
    M: float = 1.0
    beta: float = 1.0
    d: int = 1
    delta_n: float = 0.0
    tau: float = 0.5
    c_dbeta: float = 1.0
    estimator: FunctionClassSpec | None = None
    train: TrainConfig = TrainConfig(steps=200, step_size=0.2, restarts=3)
    objective: str = "Renyi_log"

    def __post_init__(self) -> None:
        ensure(self.alpha >= 1, "alpha must be at least 1")
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        ensure(self.epsilon >= 0, "epsilon must be nonnegative")
        ensure(self.M >= 1, "M must be at least 1")
        ensure(self.beta > self.d / 2.0, "beta must exceed d/2")
        ensure(self.delta_n >= 0, "delta_n must be nonnegative")
        ensure(0 <= self.tau <= 1, "tau must lie in [0, 1]")
        ensure(self.c_dbeta >= 1, "c_dbeta must be at least 1")
        ensure(self.objective in ("Renyi_log", "Renyi_linear"), "audit objective must be a Renyi form")

    @property
    def a(self) -> float:
        return self.d / (2.0 * self.beta)

    def estimator_spec(self) -> FunctionClassSpec:
        if self.estimator is not None:
            ensure(self.estimator.d == self.d, "estimator dimension differs from d")
            return self.estimator
        clip = math.log(self.M)
        ensure(clip > 0, "M = 1 forces output clip log M = 0; pass an explicit estimator class")
        return FunctionClassSpec.shallow_net(d=self.d, width=16, output_clip=clip)

    def describe(self) -> dict:
        spec = self.estimator_spec() if (self.estimator is not None or self.M > 1) else None
        return {
            "alpha": self.alpha, "epsilon": self.epsilon, "M": self.M, "beta": self.beta, "d": self.d,
            "delta_n": self.delta_n, "tau": self.tau, "c_dbeta": self.c_dbeta, "objective": self.objective,
            "estimator": None if spec is None else spec.describe(),
            "train": {
                "steps": self.train.steps, "step_size": self.train.step_size, "decay": self.train.decay,
                "restarts": self.train.restarts, "seed": self.train.seed,
            },
        }


@dataclass
class AuditReport:
    statistic: float
    critical: float
    decision: str
    e1_bound: float
    e2_bound: float | str
    inputs_digest: str
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        expected = "reject_H0" if self.statistic > self.critical else "fail_to_reject"
        ensure(self.decision == expected, "decision inconsistent with statistic and critical value")

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical": self.critical,
            "decision": self.decision,
            "e1_bound": self.e1_bound,
            "e2_bound": self.e2_bound,
            "inputs_digest": self.inputs_digest,
            "metadata": dict(self.metadata),
        }


def _approx_term(cfg: AuditConfig) -> float:
    return (cfg.M ** (2.0 * cfg.alpha) + cfg.M ** (2.0 * abs(cfg.alpha - 1.0))) * cfg.delta_n


def critical_value(cfg: AuditConfig, n: int) -> float:
    ensure(n >= 1, "n must be positive")
    stat = cfg.c_dbeta * v_factor(cfg.M, cfg.alpha, cfg.a) * (n**-0.5 + n ** ((cfg.tau - 1.0) / 2.0))
    return cfg.epsilon + _approx_term(cfg) + stat


def e1_bound(n: int, tau: float) -> float:
    return min(1.0, 2.0 * math.exp(-(n**tau)))


def e2_bound(cfg: AuditConfig, n: int, alt_gap: float) -> tuple[float, float, float]:
    """(bound, theta_bar, theta) for the type-II error at alternative gap alt_gap."""
    theta_bar, theta = audit_error_exponent(
        GapParams(alt_gap, cfg.M, cfg.alpha, cfg.a, cfg.delta_n, n, cfg.tau, cfg.c_dbeta)
    )
    return min(1.0, 2.0 * math.exp(-theta)), theta_bar, theta


def _digest(X: np.ndarray, Y: np.ndarray, cfg: AuditConfig) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(Y, dtype="<f8").tobytes())
    h.update(json.dumps(cfg.describe(), sort_keys=True).encode())
    return h.hexdigest()


def run_audit(X, Y, cfg: AuditConfig, alt_gap: float | None = None) -> AuditReport:
    """Train the Renyi estimator on (X, Y) and test H0: D_alpha <= epsilon."""
    X, Y = as_samples(X), as_samples(Y)
    ensure(X.n == Y.n, f"paired samples must have equal size ({X.n} vs {Y.n})")
    ensure(X.d == Y.d == cfg.d, "sample dimension must equal cfg.d")
    n = X.n
    spec = cfg.estimator_spec()
    try:
        res = fit(spec, X, Y, Objective(cfg.objective, cfg.alpha), cfg.train)
    except FloatingPointError as exc:
        raise AuditError(f"estimator training failed: {exc}") from exc
    if not math.isfinite(res.value):
        raise AuditError(f"estimator produced a non-finite statistic ({res.value})")
    t_n = critical_value(cfg, n)
    decision = "reject_H0" if res.value > t_n else "fail_to_reject"
    meta = {
        "n": str(n),
        "premise": PREMISE_NOTE,
        "winning_restart": str(res.restart),
        "params_hash": res.params_hash,
        "config": json.dumps(cfg.describe(), sort_keys=True),
    }
    if alt_gap is None:
        e2: float | str = "unknown"
    else:
        e2, theta_bar, theta = e2_bound(cfg, n, alt_gap)
        meta.update(alt_gap=repr(float(alt_gap)), theta_bar=repr(theta_bar), theta=repr(theta))
    return AuditReport(res.value, t_n, decision, e1_bound(n, cfg.tau), e2, _digest(X.data, Y.data, cfg), meta)
