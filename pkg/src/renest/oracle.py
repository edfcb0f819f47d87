"""Ground-truth divergences: exact sums, Gaussian closed forms, 1-D quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .core import DiscreteDist, DivergenceOrder, GaussianSpec, align_supports, check_alpha, ensure


@dataclass(frozen=True)
class OracleResult:
    value: float
    exact: bool

    def __post_init__(self) -> None:
        ensure(not math.isnan(self.value), "oracle value is NaN")
        ensure(self.value >= -1e-12, f"oracle value {self.value} is negative")


def kl_discrete(mu: DiscreteDist, nu: DiscreteDist) -> OracleResult:
    _, p, q = align_supports(mu, nu)
    on = p > 0
    if np.any(q[on] == 0):
        return OracleResult(math.inf, True)
    value = float(np.sum(p[on] * (np.log(p[on]) - np.log(q[on]))))
    return OracleResult(max(value, 0.0), True)


def renyi_discrete(mu: DiscreteDist, nu: DiscreteDist, alpha: float) -> OracleResult:
    alpha = check_alpha(alpha)
    _, p, q = align_supports(mu, nu)
    if alpha > 1 and np.any((p > 0) & (q == 0)):
        return OracleResult(math.inf, True)
    both = (p > 0) & (q > 0)
    if not np.any(both):
        # mutually singular, order below one
        return OracleResult(math.inf, True)
    log_terms = alpha * np.log(p[both]) + (1.0 - alpha) * np.log(q[both])
    value = float(logsumexp(log_terms) / (alpha - 1.0))
    return OracleResult(max(value, 0.0), True)


def discrete_divergence(mu: DiscreteDist, nu: DiscreteDist, order: DivergenceOrder) -> OracleResult:
    return kl_discrete(mu, nu) if order.is_kl else renyi_discrete(mu, nu, order.alpha)


def _check_same_dim(g1: GaussianSpec, g2: GaussianSpec) -> None:
    if g1.d != g2.d:
        raise ValueError(f"dimension mismatch: {g1.d} vs {g2.d}")


def kl_gaussian(g1: GaussianSpec, g2: GaussianSpec) -> OracleResult:
    _check_same_dim(g1, g2)
    d = g1.d
    ratio = g1.variance / g2.variance
    gap = float(np.sum((g1.mean - g2.mean) ** 2))
    value = 0.5 * d * (ratio - 1.0 - math.log(ratio)) + gap / (2.0 * g2.variance)
    return OracleResult(max(value, 0.0), True)


def renyi_gaussian(g1: GaussianSpec, g2: GaussianSpec, alpha: float) -> OracleResult:
    alpha = check_alpha(alpha)
    _check_same_dim(g1, g2)
    d = g1.d
    mixed = alpha * g2.variance + (1.0 - alpha) * g1.variance
    if mixed <= 0:
        raise ValueError(
            f"mixed variance alpha*var2 + (1-alpha)*var1 = {mixed:.6g} is not positive; "
            "the Renyi divergence is infinite/undefined in closed form"
        )
    gap = float(np.sum((g1.mean - g2.mean) ** 2))
    log_det_term = math.log(mixed) - (1.0 - alpha) * math.log(g1.variance) - alpha * math.log(g2.variance)
    value = alpha * gap / (2.0 * mixed) - d * log_det_term / (2.0 * (alpha - 1.0))
    return OracleResult(max(value, 0.0), True)


def gaussian_divergence(g1: GaussianSpec, g2: GaussianSpec, order: DivergenceOrder) -> OracleResult:
    return kl_gaussian(g1, g2) if order.is_kl else renyi_gaussian(g1, g2, order.alpha)


# ---------------------------------------------------------------- 1-D quadrature


LogDensity = Callable[[float], float]


def divergence_quadrature_1d(
    log_p: LogDensity,
    log_q: LogDensity,
    lo: float,
    hi: float,
    order: DivergenceOrder,
    points: list[float] | None = None,
) -> OracleResult:
    """Adaptive quadrature of the defining integral on [lo, hi] (d=1 only)."""
    opts = dict(epsabs=1e-14, epsrel=1e-11, limit=1000)
    if points:
        inner = sorted(p for p in set(points) if lo < p < hi)
        opts["points"] = inner[:200] if len(inner) > 200 else inner
    if order.is_kl:

        def integrand(x: float) -> float:
            lp = log_p(x)
            return math.exp(lp) * (lp - log_q(x))

        value, _ = integrate.quad(integrand, lo, hi, **opts)
        return OracleResult(max(value, 0.0), False)

    alpha = order.alpha

    def integrand(x: float) -> float:
        return math.exp(alpha * log_p(x) + (1.0 - alpha) * log_q(x))

    total, _ = integrate.quad(integrand, lo, hi, **opts)
    value = math.log(total) / (alpha - 1.0)
    return OracleResult(max(value, 0.0), False)


def mixture_logpdf_1d(atoms: np.ndarray, weights: np.ndarray, sigma: float) -> LogDensity:
    """Scalar log-density of sum_i w_i N(atoms_i, sigma^2)."""
    atoms = np.asarray(atoms, dtype=float).ravel()
    log_w = np.log(np.asarray(weights, dtype=float).ravel())
    const = -0.5 * math.log(2.0 * math.pi * sigma**2)

    def log_pdf(x: float) -> float:
        return float(logsumexp(log_w - (x - atoms) ** 2 / (2.0 * sigma**2))) + const

    return log_pdf


def smoothed_divergence_quadrature(
    mu: DiscreteDist, nu: DiscreteDist, sigma: float, order: DivergenceOrder
) -> OracleResult:
    """Divergence between mu * N(0, sigma^2) and nu * N(0, sigma^2) for d=1 by quadrature."""
    ensure(mu.d == 1 and nu.d == 1, "quadrature oracle is one-dimensional")
    ensure(sigma > 0, "sigma must be positive")
    atoms_p, w_p = mu.atoms.ravel(), mu.probs
    atoms_q, w_q = nu.atoms.ravel(), nu.probs
    keep_p, keep_q = w_p > 0, w_q > 0
    atoms_p, w_p = atoms_p[keep_p], w_p[keep_p]
    atoms_q, w_q = atoms_q[keep_q], w_q[keep_q]
    everything = np.concatenate([atoms_p, atoms_q])
    span = float(everything.max() - everything.min())
    stretch = 1.0 if order.is_kl else max(order.alpha, 1.0)
    pad = stretch * span + 16.0 * sigma * math.sqrt(stretch)
    lo, hi = float(everything.min()) - pad, float(everything.max()) + pad
    return divergence_quadrature_1d(
        mixture_logpdf_1d(atoms_p, w_p, sigma),
        mixture_logpdf_1d(atoms_q, w_q, sigma),
        lo,
        hi,
        order,
        points=everything.tolist(),
    )
