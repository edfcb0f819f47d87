"""Variational divergence estimators over bounded function classes.

Two classes are supported: a tabular class with one value per support atom,
and a one-hidden-layer network whose output is hard-clipped to [-b, b].
Training is projected gradient ascent with a geometric step decay, step
rejection on decrease (full batch) and several seeded restarts.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .core import (
    DiscreteDist,
    EstimateReport,
    SampleMatrix,
    align_supports,
    as_samples,
    check_alpha,
    ensure,
    make_rng,
)
from .oracle import kl_discrete, renyi_discrete

OBJECTIVE_KINDS = ("KL_DV", "KL_linear", "Renyi_log", "Renyi_linear")
ACTIVATIONS = ("relu", "sigmoid", "tanh")


@dataclass(frozen=True)
class Objective:
    kind: str
    alpha: float | None = None

    def __post_init__(self) -> None:
        ensure(self.kind in OBJECTIVE_KINDS, f"unknown objective {self.kind!r}")
        if self.kind.startswith("Renyi"):
            ensure(self.alpha is not None, f"{self.kind} needs alpha")
            object.__setattr__(self, "alpha", check_alpha(self.alpha))
        else:
            ensure(self.alpha is None, f"{self.kind} takes no alpha")

    @property
    def is_renyi(self) -> bool:
        return self.kind.startswith("Renyi")

    @property
    def shift_invariant(self) -> bool:
        return self.kind in ("KL_DV", "Renyi_log")


@dataclass(frozen=True)
class FunctionClassSpec:
    kind: str
    output_clip: float = 10.0
    support: np.ndarray | None = None
    d: int = 1
    width: int = 32
    activation: str = "relu"
    param_bound: float = 10.0

    def __post_init__(self) -> None:
        ensure(self.kind in ("tabular", "shallow_net"), f"unknown class kind {self.kind!r}")
        ensure(self.output_clip > 0, "output_clip must be positive")
        if self.kind == "tabular":
            ensure(self.support is not None, "tabular class needs a support")
            support = np.array(self.support, dtype=float)
            if support.ndim == 1:
                support = support[:, None]
            ensure(
                len({tuple(a) for a in support.tolist()}) == support.shape[0],
                "support atoms must be distinct",
            )
            support.setflags(write=False)
            object.__setattr__(self, "support", support)
            object.__setattr__(self, "d", support.shape[1])
        else:
            ensure(self.width >= 1, "width must be at least 1")
            ensure(self.d >= 1, "d must be at least 1")
            ensure(self.param_bound > 0, "param_bound must be positive")
            ensure(self.activation in ACTIVATIONS, f"unknown activation {self.activation!r}")

    @classmethod
    def tabular(cls, support, output_clip: float = 50.0) -> "FunctionClassSpec":
        return cls("tabular", output_clip=output_clip, support=support)

    @classmethod
    def shallow_net(
        cls,
        d: int = 1,
        width: int = 32,
        activation: str = "relu",
        output_clip: float = 10.0,
        param_bound: float = 10.0,
    ) -> "FunctionClassSpec":
        return cls(
            "shallow_net", output_clip=output_clip, d=d, width=width,
            activation=activation, param_bound=param_bound,
        )

    @property
    def n_params(self) -> int:
        if self.kind == "tabular":
            return self.support.shape[0]
        return self.width * (self.d + 2) + 1

    def describe(self) -> dict:
        out = {"kind": self.kind, "output_clip": self.output_clip, "d": self.d}
        if self.kind == "tabular":
            out["support"] = self.support.tolist()
        else:
            out.update(width=self.width, activation=self.activation, param_bound=self.param_bound)
        return out


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 300
    step_size: float = 0.1
    decay: float = 0.999
    batch: int | None = None
    seed: int = 0
    restarts: int = 3
    init_scale: float = 1.0
    grad_tol: float = 1e-10
    min_step: float = 1e-12
    checkpoint_every: int = 50
    jobs: int = 1

    def __post_init__(self) -> None:
        ensure(self.steps >= 1, "steps must be at least 1")
        ensure(self.restarts >= 1, "restarts must be at least 1")
        ensure(self.step_size > 0, "step_size must be positive")
        ensure(0 < self.decay <= 1, "decay must lie in (0, 1]")
        ensure(self.batch is None or self.batch >= 1, "batch must be positive or None")


# ---------------------------------------------------------------- objectives


def _weights(values: np.ndarray, weights) -> np.ndarray:
    if weights is None:
        return np.full(values.shape[0], 1.0 / values.shape[0])
    w = np.asarray(weights, dtype=float).ravel()
    ensure(w.shape[0] == values.shape[0], "weights and values differ in length")
    ensure(bool(np.all(w >= 0)) and w.sum() > 0, "weights must be nonnegative and not all zero")
    return w / w.sum()


def objective_value_and_grad(
    obj: Objective, fx: np.ndarray, fy: np.ndarray, wx=None, wy=None
) -> tuple[float, np.ndarray, np.ndarray]:
    """Objective value and its gradient with respect to the function values."""
    fx = np.asarray(fx, dtype=float).ravel()
    fy = np.asarray(fy, dtype=float).ravel()
    ensure(fx.size > 0 and fy.size > 0, "function values must be nonempty")
    wx, wy = _weights(fx, wx), _weights(fy, wy)
    # zero-weight entries never contribute, even when the value is infinite
    fx = np.where(wx > 0, fx, 0.0)
    fy = np.where(wy > 0, fy, 0.0)
    if obj.kind in ("KL_DV", "KL_linear"):
        value = float(wx @ fx)
        gx = wx.copy()
        if obj.kind == "KL_linear":
            ey = wy * np.exp(fy)
            value += 1.0 - float(ey.sum())
            gy = -ey
        else:
            lse = float(logsumexp(fy, b=wy))
            value -= lse
            gy = -wy * np.exp(fy - lse)
        return value, gx, gy
    alpha = obj.alpha
    log_a = float(logsumexp((alpha - 1.0) * fx, b=wx))
    value = alpha / (alpha - 1.0) * log_a
    gx = alpha * wx * np.exp((alpha - 1.0) * fx - log_a)
    if obj.kind == "Renyi_log":
        log_b = float(logsumexp(alpha * fy, b=wy))
        value -= log_b
        gy = -alpha * wy * np.exp(alpha * fy - log_b)
    else:
        ey = wy * np.exp(alpha * fy)
        value += 1.0 - float(ey.sum())
        gy = -alpha * ey
    return value, gx, gy


def eval_objective(obj: Objective, f_values_on_X, f_values_on_Y, wx=None, wy=None) -> float:
    """Empirical objective, with sample means (or the given weights) as expectations."""
    return objective_value_and_grad(obj, f_values_on_X, f_values_on_Y, wx, wy)[0]


# ---------------------------------------------------------------- function classes


def _unpack(spec: FunctionClassSpec, params: np.ndarray):
    params = np.asarray(params, dtype=float).ravel()
    if params.size != spec.n_params:
        raise ValueError(f"expected {spec.n_params} parameters, got {params.size}")
    w, d = spec.width, spec.d
    W1 = params[: w * d].reshape(w, d)
    b1 = params[w * d : w * d + w]
    w2 = params[w * d + w : w * d + 2 * w]
    b2 = params[-1]
    return W1, b1, w2, b2


def _activate(name: str, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Activation values and derivatives (computed in place on h where possible)."""
    if name == "relu":
        slope = h > 0
        return np.maximum(h, 0.0, out=h), slope
    if name == "sigmoid":
        s = np.tanh(0.5 * h, out=h)
        s += 1.0
        s *= 0.5
        return s, s * (1.0 - s)
    t = np.tanh(h, out=h)
    return t, 1.0 - t * t


def _points(spec: FunctionClassSpec, X) -> np.ndarray:
    arr = np.asarray(X.data if isinstance(X, SampleMatrix) else X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size == spec.d and spec.d > 1 else arr[:, None]
    if arr.shape[1] != spec.d:
        raise ValueError(f"points have dimension {arr.shape[1]}, class expects {spec.d}")
    return arr


def _hidden(spec: FunctionClassSpec, params, X: np.ndarray):
    W1, b1, w2, b2 = _unpack(spec, params)
    h = X @ W1.T
    h += b1
    act, slope = _activate(spec.activation, h)
    return act, slope, act @ w2 + b2, w2


def net_raw(spec: FunctionClassSpec, params, X) -> np.ndarray:
    """Pre-clip network output at each row of X."""
    ensure(spec.kind == "shallow_net", "net_raw needs a shallow_net class")
    return _hidden(spec, params, _points(spec, X))[2]


def _support_index(spec: FunctionClassSpec, X) -> np.ndarray:
    pts = _points(spec, X)
    lookup = {tuple(a): i for i, a in enumerate(spec.support.tolist())}
    try:
        return np.array([lookup[tuple(row)] for row in pts.tolist()], dtype=int)
    except KeyError as exc:
        raise ValueError(f"point {exc.args[0]} is not in the tabular support") from None


def evaluate(spec: FunctionClassSpec, params, X) -> np.ndarray:
    """Function values at each row of X (clipped for networks)."""
    if spec.kind == "tabular":
        values = np.asarray(params, dtype=float).ravel()
        ensure(values.size == spec.n_params, f"expected {spec.n_params} parameters")
        return values[_support_index(spec, X)]
    b = spec.output_clip
    return np.clip(net_raw(spec, params, X), -b, b)


def net_forward(spec: FunctionClassSpec, params, x) -> float:
    """Clipped network value at a single point."""
    point = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, spec.d)
    return float(evaluate(spec, params, point)[0])


ROW_BLOCK = 2048


def _net_value_and_backward(spec: FunctionClassSpec, params, X: np.ndarray, upstream_fn):
    """Forward pass, then reverse-mode gradient of ``upstream_fn(clipped outputs)``.

    ``upstream_fn`` maps output values to (value, d value / d outputs). Rows are
    processed in cache-sized blocks; hidden activations are recomputed on the
    backward sweep instead of being stored.
    """
    W1, b1, w2, b2 = _unpack(spec, params)
    b = spec.output_clip
    n = X.shape[0]
    raw = np.empty(n)
    for start in range(0, n, ROW_BLOCK):
        h = X[start : start + ROW_BLOCK] @ W1.T
        h += b1
        raw[start : start + ROW_BLOCK] = _activate(spec.activation, h)[0] @ w2
    raw += b2
    value, upstream = upstream_fn(np.clip(raw, -b, b))
    u_all = upstream * ((raw > -b) & (raw < b))
    g_W1 = np.zeros_like(W1)
    g_b1 = np.zeros_like(b1)
    g_w2 = np.zeros_like(w2)
    for start in range(0, n, ROW_BLOCK):
        x = X[start : start + ROW_BLOCK]
        u = u_all[start : start + ROW_BLOCK]
        h = x @ W1.T
        h += b1
        act, slope = _activate(spec.activation, h)
        g_w2 += act.T @ u
        dh = np.multiply.outer(u, w2)
        dh *= slope
        g_W1 += dh.T @ x
        g_b1 += dh.sum(axis=0)
    return value, np.concatenate([g_W1.ravel(), g_b1, g_w2, [u_all.sum()]])


class _Problem:
    """Empirical objective bound to fixed data, ready for repeated evaluation.

    Tabular data is collapsed to one weight per support atom, so each step
    costs O(support size) regardless of the sample count.
    """

    def __init__(self, spec: FunctionClassSpec, obj: Objective, X, Y, wx=None, wy=None):
        self.spec, self.obj = spec, obj
        px, py = _points(spec, X), _points(spec, Y)
        self.wx, self.wy = _weights(px, wx), _weights(py, wy)
        self.px, self.py = px, py
        self.stacked = np.vstack([px, py]) if spec.kind == "shallow_net" else None
        if spec.kind == "tabular":
            k = spec.n_params
            self.atom_wx = np.bincount(_support_index(spec, px), weights=self.wx, minlength=k)
            self.atom_wy = np.bincount(_support_index(spec, py), weights=self.wy, minlength=k)

    def __call__(self, params: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad, _ = self.evaluate(params)
        return value, grad

    def evaluate(self, params: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """Value, gradient and a positive per-coordinate step scale."""
        spec = self.spec
        if spec.kind == "tabular":
            f = np.asarray(params, dtype=float)
            value, gx, gy = objective_value_and_grad(self.obj, f, f, self.atom_wx, self.atom_wy)
            # the two gradient halves balance at the optimum; their size tracks the curvature
            scale = 0.5 * (np.abs(gx) + np.abs(gy))
            return value, gx + gy, np.maximum(scale, 1e-300)
        nx = self.px.shape[0]

        def upstream(out: np.ndarray):
            value, gx, gy = objective_value_and_grad(self.obj, out[:nx], out[nx:], self.wx, self.wy)
            return value, np.concatenate([gx, gy])

        value, grad = _net_value_and_backward(spec, params, self.stacked, upstream)
        return value, grad, np.ones_like(grad)

    def subsample(self, rng: np.random.Generator, batch: int) -> "_Problem":
        ix = rng.integers(0, self.px.shape[0], size=min(batch, self.px.shape[0]))
        iy = rng.integers(0, self.py.shape[0], size=min(batch, self.py.shape[0]))
        return _Problem(self.spec, self.obj, self.px[ix], self.py[iy], self.wx[ix], self.wy[iy])


class _LinearProblem:
    """Maximize sum_i c_i g(X_i) over the class (used for Rademacher suprema)."""

    def __init__(self, spec: FunctionClassSpec, X, coeffs):
        self.spec = spec
        self.px = self.py = _points(spec, X)
        self.coeffs = np.asarray(coeffs, dtype=float).ravel()
        ensure(self.coeffs.size == self.px.shape[0], "one coefficient per sample is required")
        if spec.kind == "tabular":
            self.atom_c = np.bincount(_support_index(spec, self.px), weights=self.coeffs, minlength=spec.n_params)

    def evaluate(self, params: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        if self.spec.kind == "tabular":
            f = np.asarray(params, dtype=float)
            return float(self.atom_c @ f), self.atom_c.copy(), np.ones_like(f)
        value, grad = _net_value_and_backward(
            self.spec, params, self.px, lambda out: (float(self.coeffs @ out), self.coeffs)
        )
        return value, grad, np.ones_like(grad)


def maximize_linear(spec: FunctionClassSpec, X, coeffs, cfg: TrainConfig | None = None) -> TrainResult:
    """Best value of sum_i coeffs_i g(X_i) over the class across restarts."""
    cfg = cfg or TrainConfig()
    problem = _LinearProblem(spec, as_samples(X), coeffs)
    results = [_run_restart(problem, cfg, r) for r in range(cfg.restarts)]
    best = results[0]
    for res in results[1:]:
        if res.value > best.value:
            best = res
    best.restart_values = [r.value for r in results]
    return best


def class_value_and_grad(
    spec: FunctionClassSpec, params, obj: Objective, X, Y, wx=None, wy=None
) -> tuple[float, np.ndarray]:
    return _Problem(spec, obj, X, Y, wx, wy)(np.asarray(params, dtype=float))


def net_gradient(spec: FunctionClassSpec, params, obj: Objective, X, Y, wx=None, wy=None) -> np.ndarray:
    """Exact gradient of the empirical objective with respect to the parameters."""
    return class_value_and_grad(spec, params, obj, X, Y, wx, wy)[1]


# ---------------------------------------------------------------- training


@dataclass
class TrainResult:
    value: float
    params: np.ndarray
    restart: int
    seed: int
    history: list[tuple[int, float]] = field(default_factory=list)
    restart_values: list[float] = field(default_factory=list)

    @property
    def params_hash(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.params, dtype="<f8").tobytes()).hexdigest()[:16]


def _init_params(spec: FunctionClassSpec, rng: np.random.Generator, restart: int, scale: float) -> np.ndarray:
    if spec.kind == "tabular":
        if restart == 0:
            return np.zeros(spec.n_params)
        return np.clip(0.1 * scale * rng.standard_normal(spec.n_params), -spec.output_clip, spec.output_clip)
    w, d = spec.width, spec.d
    W1 = scale * rng.standard_normal((w, d)) / math.sqrt(d)
    b1 = scale * rng.standard_normal(w)
    w2 = scale * rng.standard_normal(w) / math.sqrt(w)
    theta = np.concatenate([W1.ravel(), b1, w2, [0.0]])
    return np.clip(theta, -spec.param_bound, spec.param_bound)


def _project(spec: FunctionClassSpec, params: np.ndarray) -> np.ndarray:
    bound = spec.output_clip if spec.kind == "tabular" else spec.param_bound
    return np.clip(params, -bound, bound)


def _run_restart(problem: _Problem, cfg: TrainConfig, restart: int) -> TrainResult:
    spec = problem.spec
    seed = int(cfg.seed) + restart
    rng = make_rng(seed)
    params = _init_params(spec, rng, restart, cfg.init_scale)
    value, grad, scale = problem.evaluate(params)
    if not math.isfinite(value):
        raise FloatingPointError(f"objective is not finite at initialization (restart {restart})")
    best_value, best_params = value, params.copy()
    history = [(0, best_value)]
    schedule, shrink = cfg.step_size, 1.0
    n_max = max(problem.px.shape[0], problem.py.shape[0])
    full_batch = (
        spec.kind == "tabular" or cfg.batch is None or cfg.batch >= n_max or not hasattr(problem, "subsample")
    )
    for step in range(1, cfg.steps + 1):
        if full_batch:
            direction = grad / scale
            if float(np.max(np.abs(direction))) < cfg.grad_tol:
                break
            trial = _project(spec, params + schedule * shrink * direction)
            t_value, t_grad, t_scale = problem.evaluate(trial)
            if math.isfinite(t_value) and t_value > value:
                params, value, grad, scale = trial, t_value, t_grad, t_scale
                shrink = min(1.0, 1.25 * shrink)
            else:
                # rejected step: back off, and stop once the step is negligible
                shrink *= 0.5
                if schedule * shrink < cfg.min_step:
                    break
        else:
            _, g = problem.subsample(rng, cfg.batch)(params)
            params = _project(spec, params + schedule * g)
            if step % cfg.checkpoint_every == 0 or step == cfg.steps:
                value, grad, scale = problem.evaluate(params)
        schedule *= cfg.decay
        if value > best_value:
            best_value, best_params = value, params.copy()
        if step % cfg.checkpoint_every == 0:
            history.append((step, best_value))
    history.append((step, best_value))
    if not math.isfinite(best_value):
        raise FloatingPointError(f"training produced a non-finite objective (restart {restart})")
    return TrainResult(best_value, best_params, restart, seed, history)


def fit(
    spec: FunctionClassSpec,
    X,
    Y,
    obj: Objective,
    cfg: TrainConfig | None = None,
    x_weights=None,
    y_weights=None,
) -> TrainResult:
    """Maximize the empirical objective over the class; best restart wins."""
    cfg = cfg or TrainConfig()
    problem = _Problem(spec, obj, as_samples(X), as_samples(Y), x_weights, y_weights)
    runs = range(cfg.restarts)
    if cfg.jobs > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(lambda r: _run_restart(problem, cfg, r), runs))
    else:
        results = [_run_restart(problem, cfg, r) for r in runs]
    best = results[0]
    for res in results[1:]:
        if res.value > best.value:  # ties keep the lower restart index
            best = res
    best.restart_values = [r.value for r in results]
    return best


def train_estimator(
    spec: FunctionClassSpec,
    X,
    Y,
    obj: Objective,
    cfg: TrainConfig | None = None,
    x_weights=None,
    y_weights=None,
) -> EstimateReport:
    cfg = cfg or TrainConfig()
    res = fit(spec, X, Y, obj, cfg, x_weights, y_weights)
    meta = {
        "objective": obj.kind,
        "class": spec.kind,
        "winning_restart": res.restart,
        "winning_seed": res.seed,
        "params_hash": res.params_hash,
        "restart_values": json.dumps([float(v) for v in res.restart_values]),
        "steps": cfg.steps,
    }
    if obj.alpha is not None:
        meta["alpha"] = repr(obj.alpha)
    if spec.kind == "shallow_net":
        meta.update(width=spec.width, activation=spec.activation, output_clip=repr(spec.output_clip))
    return EstimateReport(value=res.value, method="neural", seed=cfg.seed, metadata=meta)


def save_params(path: str | Path, spec: FunctionClassSpec, params) -> None:
    doc = {"spec": spec.describe(), "params": [float(v) for v in np.asarray(params).ravel()]}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_params(path: str | Path) -> tuple[FunctionClassSpec, np.ndarray]:
    doc = json.loads(Path(path).read_text())
    spec_doc = dict(doc["spec"])
    spec = FunctionClassSpec(**spec_doc)
    params = np.asarray(doc["params"], dtype=float)
    ensure(params.size == spec.n_params, "parameter count does not match the class")
    return spec, params


# ---------------------------------------------------------------- exact discrete optimum


def population_objective(obj: Objective, mu: DiscreteDist, nu: DiscreteDist, f_on_atoms) -> float:
    """Objective with exact expectations under mu and nu; f given on the union support."""
    union, p, q = align_supports(mu, nu)
    f = np.asarray(f_on_atoms, dtype=float).ravel()
    ensure(f.size == union.shape[0], "f must have one value per atom of the union support")
    return eval_objective(obj, f, f, p, q)


def optimal_witness(mu: DiscreteDist, nu: DiscreteDist, obj: Objective) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form maximizer on the union support (atoms, f*)."""
    union, p, q = align_supports(mu, nu)
    if np.any((p > 0) & (q == 0)):
        raise ValueError("support mismatch: mu is not absolutely continuous w.r.t. nu (divergence infinite)")
    with np.errstate(divide="ignore"):
        f = np.where(q > 0, np.log(p) - np.log(np.where(q > 0, q, 1.0)), 0.0)
    # atoms outside supp(mu) carry f = -inf, which contributes nothing
    if obj.kind == "Renyi_linear":
        d_alpha = renyi_discrete(mu, nu, obj.alpha).value
        f = f + (1.0 - obj.alpha) / obj.alpha * d_alpha
    return union, f


def exact_discrete_supremum(mu: DiscreteDist, nu: DiscreteDist, obj: Objective) -> float:
    """Population objective at the closed-form maximizer (equals the divergence)."""
    _, f = optimal_witness(mu, nu, obj)
    _, p, q = align_supports(mu, nu)
    return eval_objective(obj, f, f, p, q)


def true_divergence(mu: DiscreteDist, nu: DiscreteDist, obj: Objective) -> float:
    return renyi_discrete(mu, nu, obj.alpha).value if obj.is_renyi else kl_discrete(mu, nu).value


__all__ = [
    "Objective",
    "FunctionClassSpec",
    "TrainConfig",
    "TrainResult",
    "eval_objective",
    "objective_value_and_grad",
    "net_forward",
    "net_raw",
    "net_gradient",
    "evaluate",
    "fit",
    "train_estimator",
    "exact_discrete_supremum",
    "optimal_witness",
    "population_objective",
    "maximize_linear",
    "true_divergence",
    "save_params",
    "load_params",
]
