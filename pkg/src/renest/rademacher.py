"""Symmetrized (Rademacher) suprema and the deviation radius built from them.

The inner supremum over a function class is exact for finite classes and for
the tabular class (closed form), and heuristic for network classes, where the
result is labelled a lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .bounds import BoundResult, _exp, _log, _min_exponent, xi_compact
from .core import SampleMatrix, as_samples, ensure, make_rng
from .variational import FunctionClassSpec, TrainConfig, _points, _support_index, maximize_linear

EXACT_MAX_N = 20


@dataclass(frozen=True)
class FiniteClass:
    """A finite class given by its values on the sample: shape (k, n)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        ensure(bool(np.all(np.isfinite(v))), "class values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class RademacherConfig:
    epsilon_draws: int = 10_000
    seed: int = 0
    train: TrainConfig = TrainConfig(steps=200, step_size=0.1, restarts=3)
    block: int = 4096


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    mode: str
    epsilon_draws: int
    inner_optimizer: str
    std_error: float = 0.0

    def __post_init__(self) -> None:
        ensure(self.value >= 0, "Rademacher supremum must be nonnegative")
        ensure(self.mode in ("exact_enumeration", "mc_lower_bound"), f"unknown mode {self.mode!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "mode": self.mode,
            "epsilon_draws": self.epsilon_draws,
            "inner_optimizer": self.inner_optimizer,
            "std_error": self.std_error,
        }


def _inner_sup(X: np.ndarray, function_class, cfg: RademacherConfig) -> tuple[Callable[[np.ndarray], np.ndarray], str]:
    """Return a map from a block of sign vectors (m, n) to their suprema (m,)."""
    if isinstance(function_class, FiniteClass):
        values = function_class.values
        ensure(values.shape[1] == X.shape[0], "finite class values must have one column per sample")
        return (lambda eps: np.abs(eps @ values.T).max(axis=1)), "enumeration"
    ensure(isinstance(function_class, FunctionClassSpec), "unsupported function class")
    spec = function_class
    if spec.kind == "tabular":
        idx = _support_index(spec, X)
        indicator = np.zeros((X.shape[0], spec.n_params))
        indicator[np.arange(X.shape[0]), idx] = 1.0
        b = spec.output_clip
        return (lambda eps: b * np.abs(eps @ indicator).sum(axis=1)), "closed_form"

    pts = _points(spec, X)

    def net_sup(eps: np.ndarray) -> np.ndarray:
        out = np.empty(eps.shape[0])
        for i, e in enumerate(eps):
            up = maximize_linear(spec, pts, e, cfg.train).value
            down = maximize_linear(spec, pts, -e, cfg.train).value
            out[i] = max(up, down, 0.0)
        return out

    return net_sup, f"gradient_ascent(restarts={cfg.train.restarts})"


def _finite_from_functions(functions: Sequence, eval_map: Callable, X: SampleMatrix) -> FiniteClass:
    return FiniteClass(np.stack([np.asarray(eval_map(f, X), dtype=float).ravel() for f in functions]))


def rademacher_sup(
    X,
    function_class,
    eval_map: Callable | None = None,
    mode: str = "mc",
    cfg: RademacherConfig | None = None,
) -> RademacherEstimate:
    """E over random signs of sup_f |sum_i eps_i f(X_i)|.

    ``function_class`` is a FunctionClassSpec, a FiniteClass, or a sequence of
    function objects together with ``eval_map(f, X) -> values``.
    """
    X = as_samples(X)
    cfg = cfg or RademacherConfig()
    if eval_map is not None:
        function_class = _finite_from_functions(function_class, eval_map, X)
    sup_fn, inner = _inner_sup(X.data, function_class, cfg)
    n = X.n
    if mode == "exact":
        if n > EXACT_MAX_N:
            raise ValueError(f"exact enumeration needs n <= {EXACT_MAX_N}, got {n}")
        count = 1 << n
        bits = np.arange(n)
        total = 0.0
        for start in range(0, count, cfg.block):
            codes = np.arange(start, min(start + cfg.block, count))
            block = 2.0 * ((codes[:, None] >> bits) & 1) - 1.0
            total += float(sup_fn(block).sum())
        return RademacherEstimate(total / count, "exact_enumeration", count, inner, 0.0)
    ensure(mode == "mc", f"unknown mode {mode!r}")
    ensure(cfg.epsilon_draws >= 2, "epsilon_draws must be at least 2")
    parts = []
    for index, start in enumerate(range(0, cfg.epsilon_draws, cfg.block)):
        size = min(cfg.block, cfg.epsilon_draws - start)
        rng = make_rng(cfg.seed, index)
        eps = 2.0 * rng.integers(0, 2, size=(size, n)).astype(float) - 1.0
        parts.append(sup_fn(eps))
    vals = np.concatenate(parts)
    se = float(vals.std(ddof=1) / math.sqrt(vals.size))
    return RademacherEstimate(float(vals.mean()), "mc_lower_bound", int(vals.size), inner, se)


def kl_rademacher_radius(
    Z_eps: float, Zbar_eps: float, r: float, d: int, sigma: float, n: int, z: float
) -> BoundResult:
    """7 (Z + Zbar) / n + 44 xi z with tail 2 exp(-(n z^2 ^ n z))."""
    ensure(Z_eps >= 0 and Zbar_eps >= 0 and z >= 0 and n >= 1, "invalid parameters")
    log_first = _log(7.0 * (Z_eps + Zbar_eps) / n)
    log_second = math.log(44.0) + xi_compact(r, d, sigma, log=True) + _log(z) if z > 0 else -math.inf
    log_radius = float(np.logaddexp(log_first, log_second))
    raw = 2.0 * math.exp(-_min_exponent(n, z))
    return BoundResult(
        _exp(log_radius), min(raw, 1.0), raw, log_radius, {"xi": xi_compact(r, d, sigma, log=True)}
    )
