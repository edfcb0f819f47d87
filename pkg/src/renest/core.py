"""Shared types, seeding rules, sample I/O and report serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

ALPHA_ONE_TOL = 1e-6
SEED_MASK = (1 << 64) - 1


class DataError(ValueError):
    """Raised for malformed or non-finite sample data."""


def ensure(condition: bool, message: str) -> None:
    if not condition:
        raise ValueError(message)


# ---------------------------------------------------------------- seeding


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for ``(seed, *stream)``.

    Distinct stream tuples give statistically independent Philox streams, so
    trial ``i`` of a batch can use ``make_rng(seed, i)`` or ``make_rng(seed + i)``
    without correlation.
    """
    words = [int(seed) & SEED_MASK] + [int(s) & SEED_MASK for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


def as_rng(rng: int | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(int(rng))


# ---------------------------------------------------------------- samples


@dataclass(frozen=True)
class SampleMatrix:
    """n x d matrix of i.i.d. samples (the empirical measure)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.data, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise DataError(f"samples must be a 2-D matrix, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError("samples must contain at least one row and one column")
        if not np.all(np.isfinite(arr)):
            raise DataError("samples contain a non-finite entry")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.n


def _parse_number(token: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise DataError(f"line {line_no}: cannot parse {token.strip()!r} as a number") from None


def _rows_to_matrix(rows: list[list[float]], path: Path) -> SampleMatrix:
    if not rows:
        raise DataError(f"{path}: file contains no samples")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: rows have differing widths {sorted(widths)}")
    arr = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr))[0][0]) + 1
        raise DataError(f"{path}: non-finite entry in sample row {bad}")
    return SampleMatrix(arr)


def load_samples(path: str | Path, format: str | None = None) -> SampleMatrix:
    """Read samples from CSV (no header) or JSONL (one array per line)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".") or "csv").lower()
    if fmt not in ("csv", "jsonl"):
        raise DataError(f"unsupported sample format {fmt!r}")
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows: list[list[float]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if fmt == "csv":
            rows.append([_parse_number(tok, line_no) for tok in line.split(",")])
        else:
            try:
                item = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            if isinstance(item, (int, float)) and not isinstance(item, bool):
                item = [item]
            if not isinstance(item, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in item
            ):
                raise DataError(f"line {line_no}: expected a JSON array of numbers")
            rows.append([float(v) for v in item])
    return _rows_to_matrix(rows, path)


def save_samples(samples: SampleMatrix, path: str | Path, format: str | None = None) -> None:
    """Write samples using shortest round-trip float text (bit-exact reload)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "csv":
        lines = [",".join(repr(float(v)) for v in row) for row in samples.data]
    elif fmt == "jsonl":
        lines = [json.dumps([float(v) for v in row]) for row in samples.data]
    else:
        raise DataError(f"unsupported sample format {fmt!r}")
    path.write_text("\n".join(lines) + "\n")


def draw_gaussian_smoothed(
    X: SampleMatrix, sigma: float, m: int, rng: int | np.random.Generator
) -> SampleMatrix:
    """m draws from the empirical measure of X convolved with N(0, sigma^2 I)."""
    ensure(sigma > 0, "sigma must be positive")
    ensure(m >= 1, "m must be at least 1")
    gen = as_rng(rng)
    idx = gen.integers(0, X.n, size=m)
    noise = gen.standard_normal((m, X.d))
    return SampleMatrix(X.data[idx] + sigma * noise)


# ---------------------------------------------------------------- distributions


@dataclass(frozen=True)
class DiscreteDist:
    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        probs = np.array(self.probs, dtype=float).ravel()
        ensure(atoms.ndim == 2 and atoms.shape[0] >= 1, "atoms must be a non-empty list of points")
        ensure(atoms.shape[0] == probs.size, "atoms and probs differ in length")
        ensure(bool(np.all(np.isfinite(atoms))), "atoms must be finite")
        ensure(bool(np.all(probs >= 0)), "probabilities must be nonnegative")
        ensure(abs(probs.sum() - 1.0) <= 1e-12, f"probabilities sum to {probs.sum()!r}, not 1")
        ensure(
            len({tuple(a) for a in atoms.tolist()}) == atoms.shape[0],
            "atoms must be pairwise distinct",
        )
        atoms.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @property
    def d(self) -> int:
        return self.atoms.shape[1]

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @classmethod
    def empirical(cls, samples: SampleMatrix) -> "DiscreteDist":
        """Collapse repeated rows into weighted atoms."""
        atoms, counts = np.unique(samples.data, axis=0, return_counts=True)
        probs = counts / counts.sum()
        return cls(atoms, probs / probs.sum())

    def sample(self, m: int, rng: int | np.random.Generator) -> SampleMatrix:
        gen = as_rng(rng)
        idx = gen.choice(self.size, size=m, p=self.probs)
        return SampleMatrix(self.atoms[idx])


def align_supports(mu: DiscreteDist, nu: DiscreteDist) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (atoms, p, q) over the sorted union of both supports (exact matching)."""
    ensure(mu.d == nu.d, "dimension mismatch between distributions")
    keys = sorted({tuple(a) for a in mu.atoms.tolist()} | {tuple(a) for a in nu.atoms.tolist()})
    index = {k: i for i, k in enumerate(keys)}
    p = np.zeros(len(keys))
    q = np.zeros(len(keys))
    for a, w in zip(mu.atoms.tolist(), mu.probs):
        p[index[tuple(a)]] += w
    for a, w in zip(nu.atoms.tolist(), nu.probs):
        q[index[tuple(a)]] += w
    return np.asarray(keys, dtype=float), p, q


@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic Gaussian N(mean, variance * I)."""

    mean: np.ndarray
    variance: float

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.array(self.mean, dtype=float))
        ensure(mean.ndim == 1, "mean must be a vector")
        ensure(self.variance > 0, "variance must be positive")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", float(self.variance))

    @property
    def d(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class DivergenceOrder:
    kind: str
    alpha: float | None = None

    def __post_init__(self) -> None:
        kind = {"kl": "KL", "renyi": "Renyi"}.get(str(self.kind).lower())
        ensure(kind is not None, f"unknown divergence kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "KL":
            ensure(self.alpha is None, "alpha is only meaningful for Renyi divergences")
        else:
            ensure(self.alpha is not None, "Renyi divergence needs alpha")
            object.__setattr__(self, "alpha", check_alpha(self.alpha))

    @classmethod
    def kl(cls) -> "DivergenceOrder":
        return cls("KL")

    @classmethod
    def renyi(cls, alpha: float) -> "DivergenceOrder":
        return cls("Renyi", alpha)

    @property
    def is_kl(self) -> bool:
        return self.kind == "KL"


def check_alpha(alpha: float) -> float:
    """Validate a Renyi order; orders within 1e-6 of one must use the KL path."""
    alpha = float(alpha)
    ensure(math.isfinite(alpha) and alpha > 0, f"alpha must be positive and finite, got {alpha}")
    ensure(
        abs(alpha - 1.0) >= ALPHA_ONE_TOL,
        f"alpha={alpha} is within {ALPHA_ONE_TOL} of 1; use the KL divergence instead",
    )
    return alpha


# ---------------------------------------------------------------- reports


def jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into strict JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2)


def parse_float(value: Any) -> float:
    """Inverse of ``jsonable`` for scalar floats."""
    if isinstance(value, str):
        return {"+inf": math.inf, "-inf": -math.inf, "nan": math.nan}.get(value, float(value))
    return float(value)


@dataclass
class EstimateReport:
    value: float
    method: str
    seed: int
    mc_std_error: float | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ensure(not math.isnan(self.value), "estimate is NaN")
        ensure(self.value != -math.inf, "estimate is -inf")
        if self.mc_std_error is not None:
            ensure(self.mc_std_error >= 0, "mc_std_error must be nonnegative")
        self.metadata = {str(k): str(v) for k, v in self.metadata.items()}

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "method": self.method,
            "seed": self.seed,
            "mc_std_error": self.mc_std_error,
            "metadata": dict(self.metadata),
        }


def as_samples(x: SampleMatrix | Sequence | np.ndarray) -> SampleMatrix:
    return x if isinstance(x, SampleMatrix) else SampleMatrix(np.asarray(x, dtype=float))
