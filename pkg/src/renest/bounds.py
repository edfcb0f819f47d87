"""Deviation radii, tail probabilities and the constants they are built from.

Exponential-scale constants accept ``log=True`` and return the natural log of
the value; the direct form returns ``inf`` instead of raising on overflow.
Radii are assembled in log space and carry ``log_radius`` so that comparisons
remain meaningful when the radius itself is not representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .core import DivergenceOrder, check_alpha, ensure

LOG_3E = math.log(3.0 * math.e)


def _exp(log_value: float) -> float:
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _log_add(a: float, b: float) -> float:
    return float(np.logaddexp(a, b))


def ubar(beta: float) -> int:
    """Largest integer strictly smaller than beta."""
    ensure(beta > 0, "beta must be positive")
    return math.ceil(beta) - 1


@dataclass(frozen=True)
class BoundResult:
    radius: float
    probability: float
    raw_probability: float
    log_radius: float | None = None
    log_constants: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ensure(self.radius >= 0 and not math.isnan(self.radius), "radius must be nonnegative")
        ensure(self.raw_probability >= 0, "raw probability must be nonnegative")
        ensure(self.probability == min(self.raw_probability, 1.0), "probability must equal min(raw, 1)")
        if self.log_radius is None:
            object.__setattr__(self, "log_radius", _log(self.radius))

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "log_radius": self.log_radius,
            "probability": self.probability,
            "raw_probability": self.raw_probability,
            "log_constants": dict(self.log_constants),
        }


def _result(log_radius: float, raw: float, **log_constants: float) -> BoundResult:
    return BoundResult(_exp(log_radius), min(raw, 1.0), raw, log_radius, dict(log_constants))


def _min_exponent(n: float, z: float) -> float:
    return min(n * z * z, n * z)


def z_for_tail(n: int, target: float, prefactor: float = 2.0) -> float:
    """Solve prefactor * exp(-(n z^2 ^ n z)) = target for z."""
    ensure(0 < target < prefactor, "target must lie in (0, prefactor)")
    t = math.log(prefactor / target)
    return math.sqrt(t / n) if t <= n else t / n


# ---------------------------------------------------------------- compact support


@dataclass(frozen=True)
class CompactParams:
    r: float
    d: int
    sigma: float
    n: int
    z: float
    C_universal: float = 1.0

    def __post_init__(self) -> None:
        ensure(0 < self.sigma <= 1, "sigma must lie in (0, 1]")
        ensure(self.r >= 0, "r must be nonnegative")
        ensure(self.z >= 0, "z must be nonnegative")
        ensure(self.n >= 1 and self.d >= 1, "n and d must be positive")
        ensure(self.C_universal > 0, "C_universal must be positive")


def b_param(r: float, sigma: float) -> float:
    ensure(r >= 0 and sigma > 0, "need r >= 0 and sigma > 0")
    return (r * r + 4.0 * r) / sigma**2


def xi_compact(r: float, d: int, sigma: float, log: bool = False) -> float:
    log_value = (r * r + 4.0 * r) * (2.0 * d * r * r + (8.0 * d + 1.0) * r + 1.0) / (2.0 * sigma**2)
    return log_value if log else _exp(log_value)


def xi_tilde(r: float, d: int, sigma: float, log: bool = False) -> float:
    log_value = 3.0 * (d + 2) * math.log(3.0 * math.e * d) + (d / 2.0 + 1.0) * math.log(r + 1.0)
    log_value -= (d / 2.0) * math.log(sigma)
    return log_value if log else _exp(log_value)


def lambda_renyi(alpha: float, d: int, r: float, sigma: float, log: bool = False) -> float:
    alpha = check_alpha(alpha)
    b = b_param(r, sigma)
    exponent = (alpha + 1.0) * b * (1.0 + r + math.sqrt(d) * sigma / 2.0 + d * (alpha + 1.0) * b * sigma**2)
    log_value = math.log(alpha / abs(alpha - 1.0) + 1.0) + exponent
    return log_value if log else _exp(log_value)


def xi_bar(r: float, d: int, sigma: float) -> float:
    return (r * r + 4.0 * r) * (1.0 + r * sigma * math.sqrt(d)) / sigma**2


def _compact_bracket(p: CompactParams) -> float:
    """log(xi_tilde n^{-1/2} + z)."""
    return _log_add(xi_tilde(p.r, p.d, p.sigma, log=True) - 0.5 * math.log(p.n), _log(p.z))


def kl_compact_radius(p: CompactParams) -> BoundResult:
    log_xi = xi_compact(p.r, p.d, p.sigma, log=True)
    log_r = math.log(p.C_universal) + log_xi + _compact_bracket(p)
    raw = 2.0 * math.exp(-_min_exponent(p.n, p.z))
    return _result(log_r, raw, xi=log_xi, xi_tilde=xi_tilde(p.r, p.d, p.sigma, log=True))


def renyi_compact_radius(p: CompactParams, alpha: float) -> BoundResult:
    log_lam = lambda_renyi(alpha, p.d, p.r, p.sigma, log=True)
    log_r = math.log(p.C_universal) + log_lam + _compact_bracket(p)
    raw = 2.0 * math.exp(-_min_exponent(p.n, p.z))
    return _result(log_r, raw, **{"lambda": log_lam, "xi_tilde": xi_tilde(p.r, p.d, p.sigma, log=True)})


def one_sample_kl_radius(p: CompactParams) -> BoundResult:
    prefactor = xi_bar(p.r, p.d, p.sigma)
    log_r = math.log(p.C_universal) + _log(prefactor) + _compact_bracket(p)
    raw = math.exp(-_min_exponent(p.n, p.z))
    return _result(log_r, raw, xi_bar=_log(prefactor), xi_tilde=xi_tilde(p.r, p.d, p.sigma, log=True))


# ---------------------------------------------------------------- sub-Gaussian


@dataclass(frozen=True)
class SubGaussParams:
    L: float
    p: float
    tau: float
    d: int
    sigma: float
    n: int
    z: float
    C_universal: float = 1.0

    def __post_init__(self) -> None:
        ensure(self.L >= 1, "L must be at least 1")
        ensure(self.p >= 2, "p must be at least 2")
        ensure(0 <= self.tau <= 1, "tau must lie in [0, 1]")
        ensure(0 < self.sigma <= 1, "sigma must lie in (0, 1]")
        ensure(self.z >= 0, "z must be nonnegative")
        ensure(self.n >= 1 and self.d >= 1, "n and d must be positive")


def xi_hat(d: int, L: float, sigma: float, log: bool = False) -> float:
    log_value = 3.0 * (d + 2) * math.log(3.0 * math.e * d) + (d / 2.0 + 2.0) * math.log(4.0 * L)
    log_value -= (d / 2.0) * math.log(sigma)
    return log_value if log else _exp(log_value)


def xi_check(d: int, L: float, sigma: float) -> float:
    return L**4 * d**3 / sigma**4


def zeta_hat(n: int, d: int, p: float, tau: float, z: float) -> float:
    k = d + 12.0
    quad = n ** ((k - 8.0 * tau) / k) * z * z
    lin = n ** ((k - 4.0 * tau) / k) * z
    cap = n ** (p * tau / k) / math.log(n + 1.0)
    return min(quad, lin, cap)


def kl_subgauss_radius(p: SubGaussParams) -> BoundResult:
    log_hat = xi_hat(p.d, p.L, p.sigma, log=True)
    bracket = _log_add(log_hat - 0.5 * (1.0 - p.tau) * math.log(p.n), _log(p.z))
    log_check = math.log(xi_check(p.d, p.L, p.sigma))
    log_r = math.log(p.C_universal) + log_check + bracket
    raw = 3.0 * math.exp(-zeta_hat(p.n, p.d, p.p, p.tau, p.z))
    return _result(log_r, raw, xi_hat=log_hat, xi_check=log_check)


# ---------------------------------------------------------------- neural estimators


@dataclass(frozen=True)
class NeuralBoundParams:
    M: float
    beta: float
    d: int
    delta: float
    n: int
    z: float
    c_dbeta: float = 1.0
    C_universal: float = 1.0

    def __post_init__(self) -> None:
        ensure(self.M >= 1, "M must be at least 1")
        ensure(self.beta > self.d / 2.0, "beta must exceed d/2")
        ensure(self.delta >= 0, "delta must be nonnegative")
        ensure(self.z >= 0, "z must be nonnegative")
        ensure(self.c_dbeta >= 1, "c_dbeta must be at least 1")
        ensure(self.n >= 1, "n must be positive")

    @property
    def a(self) -> float:
        return self.d / (2.0 * self.beta)


def v_factor(M: float, alpha: float, a: float) -> float:
    alpha = check_alpha(alpha)
    gap = abs(alpha - 1.0)
    log_m = math.log(M)
    first = alpha * M ** (2.0 * gap) / gap * (1.0 + (gap * log_m) ** (a / 2.0))
    second = M ** (2.0 * alpha) * (1.0 + (alpha * log_m) ** a)
    return first + second


def neural_kl_radius(p: NeuralBoundParams) -> BoundResult:
    log_m = math.log(p.M)
    stat = p.c_dbeta * p.M * (1.0 + log_m**p.a) * (p.n**-0.5 + p.z)
    radius = p.C_universal * ((p.M + 1.0) * p.delta + stat)
    raw = 2.0 * math.exp(-_min_exponent(p.n, p.z))
    return _result(_log(radius), raw)


def neural_renyi_radius(p: NeuralBoundParams, alpha: float) -> BoundResult:
    v = v_factor(p.M, alpha, p.a)
    approx = (p.M ** (2.0 * alpha) + p.M ** (2.0 * abs(alpha - 1.0))) * p.delta
    radius = p.C_universal * (approx + p.c_dbeta * v * (p.n**-0.5 + p.z))
    raw = 2.0 * math.exp(-_min_exponent(p.n, p.z))
    return _result(_log(radius), raw, v=math.log(v))


# ---------------------------------------------------------------- smoothing bias


@dataclass(frozen=True)
class ApproxParams:
    M: float
    d: int
    s: float
    sigma: float

    def __post_init__(self) -> None:
        ensure(self.M >= 1, "M must be at least 1")
        ensure(0 < self.s <= 1, "s must lie in (0, 1]")
        ensure(self.sigma >= 0, "sigma must be nonnegative")


def c_ds(d: int, s: float) -> float:
    """E ||Z||^s for Z standard normal in R^d."""
    return math.exp(0.5 * s * math.log(2.0) + gammaln((d + s) / 2.0) - gammaln(d / 2.0))


def smoothing_gap(p: ApproxParams, order: DivergenceOrder) -> float:
    scale = c_ds(p.d, p.s) * p.sigma**p.s
    if order.is_kl:
        return scale * p.M * (p.M + 1.0 + math.log(p.M))
    alpha = order.alpha
    return scale * (p.M ** (2.0 * alpha + 1.0) + alpha / abs(alpha - 1.0) * p.M ** (2.0 * max(1.0, alpha)))


def c_bar(d: int, r: float) -> float:
    return (3.0 * math.e * d) ** (3 * (d + 2)) * math.sqrt(d) * r * (r + 1.0) ** (d / 2.0 + 3.0)


def unsmoothed_kl_radius(
    n: int, d: int, s: float, r: float, M: float, z: float, C_universal: float = 1.0
) -> BoundResult:
    ensure(0 < s <= 1 and r >= 0 and M >= 1 and z >= 0, "invalid parameters")
    k = d + 2.0 * s + 4.0
    head = c_bar(d, r) + c_ds(d, s) * M * M + (r * r + 4.0 * r) * (1.0 + r * math.sqrt(d)) * z
    radius = C_universal * head * n ** (-s / k)
    exponent = min(n ** (d / k) * z * z, n ** ((d + s + 2.0) / k) * z)
    return _result(_log(radius), math.exp(-exponent), c_bar=_log(c_bar(d, r)))


# ---------------------------------------------------------------- Holder class constants


def holder_envelope_sup(b: float, q: float, r: float) -> float:
    """sup over the ball of radius r of 0.5 b (1 + ||x||^q), with 0^0 = 1."""
    return 0.5 * b * (1.0 + r**q)


def _q_route(q: float) -> float:
    ensure(q >= 0, "q must be nonnegative")
    return 1.0 if 0 < q < 1 else q


def c_check(d: int, beta: float, q: float) -> float:
    q = _q_route(q)
    k = ubar(beta)
    k3 = k // 3
    root = max(math.sqrt((q + 1.0) * math.factorial(k)), math.sqrt((q + k) ** (q + k)))
    dim = max(d, math.sqrt(d ** (k + q + 1.0)))
    return (
        2.0 ** (q - 1.0) * math.factorial(k) * (k + 1.0) ** d
        / math.factorial(k3) ** 2 * 2.0 ** (-k3) * root * dim
    )


def holder_norm_bound(b: float, q: float, beta: float, sigma: float, domain_radius: float, d: int = 1) -> float:
    ensure(0 < sigma <= 1, "sigma must lie in (0, 1]")
    q_used = _q_route(q)
    k = max(ubar(beta), 1)
    return c_check(d, beta, q_used) * holder_envelope_sup(b, q_used, domain_radius) * sigma ** (-k)


def covering_constant_ball(d: int, beta: float) -> float:
    ensure(d >= 1 and beta > 0, "need d >= 1 and beta > 0")
    e1 = math.exp(d) + 1.0
    head = (ubar(beta) + 1.0) ** d * 2.0 ** (d / beta) * d ** (d / 2.0) * e1 ** (d / beta)
    tail = max(
        beta * 2.0 ** (d / beta) / d,
        3.0**d * math.log(2.0 ** (beta + 1.0) * d ** (beta / 2.0) * e1 + 1.0),
    )
    return head * tail


def covering_constant_class(d: int, beta: float, q: float) -> float:
    return covering_constant_ball(d, beta) * (2.0 * c_check(d, beta, q)) ** (d / beta)


def covering_entropy_bound(eps: float, r: float, d: int, beta: float, q: float, sigma: float) -> float:
    ensure(eps > 0, "eps must be positive")
    ensure(0 < sigma <= 1, "sigma must lie in (0, 1]")
    q_used = _q_route(q)
    k = max(ubar(beta), 1)
    e = d / beta
    return (
        covering_constant_class(d, beta, q_used)
        * (1.0 + r) ** d
        * (1.0 + r**q_used) ** e
        * eps ** (-e)
        * sigma ** (-k * e)
    )


def _singularity_exponent(entropy_fn: Callable[[float], float], upper: float) -> float:
    """Local power-law exponent c of entropy_fn(eps) ~ eps^{-c} as eps -> 0."""
    lo, hi = 1e-12 * upper, 1e-10 * upper
    h_lo, h_hi = entropy_fn(lo), entropy_fn(hi)
    if h_lo <= 0 or h_hi <= 0:
        return 0.0
    return max(0.0, (math.log(h_lo) - math.log(h_hi)) / (math.log(hi) - math.log(lo)))


def entropy_integral(entropy_fn: Callable[[float], float], upper: float) -> float:
    """Integral of sqrt(entropy_fn) over (0, upper]; +inf when the integrand is not integrable at 0.

    A power-law singularity eps^{-c} is removed with the substitution
    eps = upper * u^k, k = 2 / (2 - c), which makes the integrand bounded.
    """
    ensure(upper > 0, "upper must be positive")
    c = _singularity_exponent(entropy_fn, upper)
    if c >= 2.0 - 1e-9:
        return math.inf
    k = 2.0 / (2.0 - c)

    def integrand(u: float) -> float:
        if u <= 0:
            u = 1e-300
        eps = upper * u**k
        return math.sqrt(max(entropy_fn(eps), 0.0)) * upper * k * u ** (k - 1.0)

    value, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)
    return value


# ---------------------------------------------------------------- Fuk-Nagaev type tails


def orlicz_c_q(q: float, tilde_cq: float = 1.0) -> float:
    ensure(0 < q <= 1, "q must lie in (0, 1]")
    m = math.factorial(math.ceil(1.0 / q))
    inner = 2.0 ** (1.0 / q - 1.0) * (1.0 + m * math.log(2.0) ** (-1.0 / q)) + 16.0 * m
    return 4.0 * tilde_cq * inner


def _bernstein_part(z: float, n: int, F2_norm: float, Mbar: float) -> float:
    if z == 0:
        return 2.0
    exponent = min(9.0 * z * z / (128.0 * n * F2_norm**2), z / (228.0 * Mbar))
    return 2.0 * math.exp(-exponent)


def fuk_nagaev_statistical_prob(
    z: float, n: int, F2_norm: float, Mbar: float, Morlicz_q: float, q: float, tilde_cq: float = 1.0
) -> BoundResult:
    """Tail bound at deviation z; ``radius`` echoes z."""
    ensure(z >= 0, "z must be nonnegative")
    first = _bernstein_part(z, n, F2_norm, Mbar)
    scale = orlicz_c_q(q, tilde_cq) * Morlicz_q
    second = 2.0 * math.exp(-((z / scale) ** q)) if scale > 0 else 0.0
    raw = first + second
    return BoundResult(z, min(raw, 1.0), raw, log_constants={"c_q": math.log(orlicz_c_q(q, tilde_cq))})


def fuk_nagaev_moment_prob(z: float, n: int, F2_norm: float, Mbar: float, p: float, EMp: float) -> BoundResult:
    ensure(z >= 0, "z must be nonnegative")
    first = _bernstein_part(z, n, F2_norm, Mbar)
    second = math.inf if z == 0 else 2.0 * 16.0**p * EMp * z ** (-p)
    raw = first + second
    return BoundResult(z, min(raw, 1.0), raw)


def orlicz_norm_empirical(values, q: float) -> float:
    """Smallest c with mean(exp((|x|/c)^q)) <= 2, by bisection (relative tol 1e-8)."""
    ensure(q > 0, "q must be positive")
    x = np.abs(np.asarray(values, dtype=float).ravel())
    ensure(x.size > 0 and bool(np.all(np.isfinite(x))), "values must be finite and nonempty")
    top = float(x.max())
    if top == 0:
        return 0.0
    log_two = math.log(2.0)
    log_n = math.log(x.size)

    def excess(c: float) -> float:
        t = (x / c) ** q
        m = t.max()
        return m + math.log(np.exp(t - m).sum()) - log_n - log_two

    lo, hi = 0.0, top
    while excess(hi) > 0:
        lo, hi = hi, 2.0 * hi
    if lo == 0:
        lo = hi
        while excess(lo) <= 0:
            lo *= 0.5
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def orlicz_max_constant(n: int, q: float) -> float:
    ensure(n >= 1 and q > 0, "need n >= 1 and q > 0")
    return (5.0 * math.log(1.0 + 2.0 * n)) ** (1.0 / q)


# ---------------------------------------------------------------- audit exponents


@dataclass(frozen=True)
class GapParams:
    alt_gap: float
    M: float
    alpha: float
    a: float
    delta_n: float
    n: int
    tau: float
    c_dbeta: float = 1.0

    def __post_init__(self) -> None:
        ensure(self.M >= 1, "M must be at least 1")
        ensure(0 <= self.tau <= 1, "tau must lie in [0, 1]")
        ensure(self.n >= 1, "n must be positive")


def theta_from_bar(theta_bar: float, n: int) -> float:
    t = max(theta_bar, 0.0)
    return min(n * t * t, n * t)


def audit_error_exponent(g: GapParams) -> tuple[float, float]:
    """(theta_bar, theta) for the type-II certificate 2 exp(-theta).

    ``alt_gap`` is the true alternative divergence minus the budget epsilon.
    """
    cv = g.c_dbeta * v_factor(g.M, g.alpha, g.a)
    approx = (g.M ** (2.0 * g.alpha) + g.M ** (2.0 * abs(g.alpha - 1.0))) * g.delta_n
    theta_bar = (g.alt_gap - 2.0 * approx - 2.0 * cv * g.n**-0.5) / cv - g.n ** (0.5 * (g.tau - 1.0))
    return theta_bar, theta_from_bar(theta_bar, g.n)
