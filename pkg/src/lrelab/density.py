"""Evaluable (possibly unnormalized) densities with exact computation backends.

Three backends are supported:

* ``finite``   -- a list of atoms addressed by integer index, with log-weights.
* ``gaussian`` -- a diagonal Gaussian times ``exp(log_scale)``; all path
  quantities have closed forms.
* ``grid``     -- a 1-D function tabulated on a strictly increasing grid,
  integrated with the composite trapezoid rule.

All arithmetic is done in log space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Union

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, SchemaError

__all__ = [
    "Density",
    "FiniteDensity",
    "GaussianDensity",
    "GridDensity",
    "Quadratic",
    "SampleBatch",
    "log_density_eval",
    "log_partition_exact",
    "geometric_mixture",
    "expect",
    "sample",
    "normalized",
    "shifted",
    "density_from_dict",
    "density_to_dict",
]

LOG_2PI = math.log(2.0 * math.pi)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def mix_logs(l0: np.ndarray, l1: np.ndarray, beta: float) -> np.ndarray:
    """Return ``(1 - beta) * l0 + beta * l1`` with zero-mass entries kept at -inf.

    Raises DomainError when an entry diverges to +inf, which happens outside
    [0, 1] when one endpoint has zero mass where the other does not.
    """
    if beta == 0.0:
        return np.array(l0, dtype=float)
    if beta == 1.0:
        return np.array(l1, dtype=float)
    with np.errstate(invalid="ignore"):
        out = (1.0 - beta) * l0 + beta * l1
    both_zero = np.isneginf(l0) & np.isneginf(l1)
    out[both_zero] = -np.inf
    if np.any(np.isposinf(out)) or np.any(np.isnan(out)):
        raise DomainError(f"geometric mixture diverges at beta={beta!r}")
    return out


def _check_hint(d) -> None:
    if d.normalized_hint and abs(d.log_partition()) > 1e-8:
        raise DomainError(f"density flagged normalized has log-partition {d.log_partition()!r}")


class Density:
    """Common interface for all backends."""

    backend: str = ""
    normalized_hint: bool = False

    def log_density(self, z):
        raise NotImplementedError

    def log_partition(self) -> float:
        raise NotImplementedError

    def shifted(self, c: float) -> "Density":
        """Return the density multiplied by ``exp(c)``."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class FiniteDensity(Density):
    log_weights: np.ndarray
    normalized_hint: bool = False
    backend: str = field(default="finite", init=False)

    def __post_init__(self):
        lw = _frozen(self.log_weights).reshape(-1)
        if lw.size == 0:
            raise DomainError("finite density needs at least one atom")
        if np.any(np.isnan(lw)) or np.any(np.isposinf(lw)):
            raise DomainError("finite log-weights must be finite or -inf")
        object.__setattr__(self, "log_weights", lw)
        _check_hint(self)

    @property
    def size(self) -> int:
        return self.log_weights.size

    def points(self) -> np.ndarray:
        return np.arange(self.size)

    def log_masses(self) -> np.ndarray:
        return self.log_weights

    def log_density(self, z):
        idx = np.asarray(z)
        if not np.issubdtype(idx.dtype, np.integer):
            if np.any(idx != np.round(idx)):
                raise DomainError(f"atom index must be an integer, got {z!r}")
            idx = idx.astype(int)
        if np.any(idx < 0) or np.any(idx >= self.size):
            raise DomainError(f"atom {z!r} is off the support of size {self.size}")
        out = self.log_weights[idx]
        return float(out) if out.ndim == 0 else out

    def log_partition(self) -> float:
        if np.all(np.isneginf(self.log_weights)):
            raise DomainError("all finite weights are zero")
        return float(logsumexp(self.log_weights))

    def shifted(self, c):
        return FiniteDensity(self.log_weights + c)


@dataclass(frozen=True, eq=False)
class GaussianDensity(Density):
    """``exp(log_scale) * N(mean, diag(var))``."""

    mean: np.ndarray
    var: np.ndarray
    log_scale: float = 0.0
    normalized_hint: bool = False
    backend: str = field(default="gaussian", init=False)

    def __post_init__(self):
        mean = _frozen(np.atleast_1d(self.mean))
        var = _frozen(np.atleast_1d(self.var))
        if mean.ndim != 1 or mean.shape != var.shape:
            raise DomainError("gaussian mean and var must be 1-D of equal length")
        if not np.all(np.isfinite(mean)):
            raise DomainError("gaussian mean must be finite")
        if not np.all((var > 0) & np.isfinite(var)):
            raise DomainError("gaussian variances must be strictly positive")
        if not math.isfinite(self.log_scale):
            raise DomainError("gaussian log_scale must be finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "log_scale", float(self.log_scale))
        if self.normalized_hint and self.log_scale != 0.0:
            raise DomainError("normalized gaussian must have log_scale 0")

    @property
    def dim(self) -> int:
        return self.mean.size

    def as_points(self, z) -> tuple[np.ndarray, bool]:
        """Coerce ``z`` to shape (n, dim); second value flags a single point."""
        z = np.asarray(z, dtype=float)
        if z.ndim == 0:
            if self.dim != 1:
                raise DomainError(f"scalar point given for dimension {self.dim}")
            return z.reshape(1, 1), True
        if z.ndim == 1:
            if self.dim == 1:
                return z.reshape(-1, 1), False
            if z.size != self.dim:
                raise DomainError(f"point has length {z.size}, expected {self.dim}")
            return z.reshape(1, -1), True
        if z.ndim == 2 and z.shape[1] == self.dim:
            return z, False
        raise DomainError(f"cannot interpret array of shape {z.shape} as points")

    def log_density(self, z):
        pts, single = self.as_points(z)
        quad = ((pts - self.mean) ** 2 / self.var).sum(axis=1)
        out = self.log_scale - 0.5 * (quad + np.log(self.var).sum() + self.dim * LOG_2PI)
        return float(out[0]) if single else out

    def log_partition(self) -> float:
        return self.log_scale

    def shifted(self, c):
        return GaussianDensity(self.mean, self.var, self.log_scale + c)


@dataclass(frozen=True, eq=False)
class GridDensity(Density):
    x: np.ndarray
    log_f: np.ndarray
    normalized_hint: bool = False
    backend: str = field(default="grid", init=False)

    def __post_init__(self):
        x = _frozen(self.x).reshape(-1)
        lf = _frozen(self.log_f).reshape(-1)
        if x.size < 3:
            raise DomainError("grid needs at least 3 points")
        if x.shape != lf.shape:
            raise DomainError("grid x and log_f must have equal length")
        if not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
            raise DomainError("grid must be finite and strictly increasing")
        if not np.all(np.isfinite(lf)):
            raise DomainError("grid log-values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "log_f", lf)
        _check_hint(self)

    def points(self) -> np.ndarray:
        return self.x

    @property
    def log_trapezoid_weights(self) -> np.ndarray:
        dx = np.diff(self.x)
        w = np.empty_like(self.x)
        w[0] = dx[0] / 2
        w[-1] = dx[-1] / 2
        w[1:-1] = (dx[:-1] + dx[1:]) / 2
        return np.log(w)

    def log_masses(self) -> np.ndarray:
        return self.log_f + self.log_trapezoid_weights

    def log_density(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z < self.x[0]) or np.any(z > self.x[-1]):
            raise DomainError(f"point {z!r} outside grid range [{self.x[0]}, {self.x[-1]}]")
        out = np.interp(z, self.x, self.log_f)
        return float(out) if out.ndim == 0 else out

    def log_partition(self) -> float:
        return float(logsumexp(self.log_masses()))

    def shifted(self, c):
        return GridDensity(self.x, self.log_f + c)


class Quadratic:
    """Separable quadratic ``f(z) = sum_i a_i z_i**2 + b_i z_i + c``.

    Gaussian expectations and variances of a Quadratic are exact, which is what
    makes the Gaussian backend a closed-form oracle for path quantities.
    """

    def __init__(self, a, b, c=0.0):
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.b = np.atleast_1d(np.asarray(b, dtype=float))
        self.c = float(c)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if z.ndim == 0 or (z.ndim == 1 and self.a.size == 1):
            return self.a[0] * z**2 + self.b[0] * z + self.c
        if z.ndim == 1:
            return float((self.a * z**2 + self.b * z).sum() + self.c)
        return (self.a * z**2 + self.b * z).sum(axis=1) + self.c

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.a == 0) and np.all(self.b == 0))

    def gaussian_mean(self, mean, var) -> float:
        return float((self.a * (mean**2 + var) + self.b * mean).sum() + self.c)

    def gaussian_var(self, mean, var) -> float:
        # coordinates are independent; Var(a z^2 + b z) = (2 a mu + b)^2 v + 2 a^2 v^2
        return float(((2 * self.a * mean + self.b) ** 2 * var + 2 * self.a**2 * var**2).sum())


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: np.ndarray
    seed: int

    def __len__(self):
        return len(self.points)


def log_density_eval(d: Density, z) -> float:
    return d.log_density(z)


def log_partition_exact(d: Density) -> float:
    """Log of the total mass of ``d``: enumeration, closed form, or trapezoid rule."""
    return d.log_partition()


def normalized(d: Density) -> Density:
    if d.normalized_hint:
        return d
    out = d.shifted(-d.log_partition())
    object.__setattr__(out, "normalized_hint", True)
    return out


def shifted(d: Density, c: float) -> Density:
    return d.shifted(c)


def _check_same_backend(d0: Density, d1: Density) -> None:
    if d0.backend != d1.backend:
        raise DomainError(f"backend mismatch: {d0.backend} vs {d1.backend}")
    if isinstance(d0, FiniteDensity) and d0.size != d1.size:
        raise DomainError(f"finite supports differ in size: {d0.size} vs {d1.size}")
    if isinstance(d0, GaussianDensity) and d0.dim != d1.dim:
        raise DomainError(f"gaussian dimensions differ: {d0.dim} vs {d1.dim}")
    if isinstance(d0, GridDensity) and not np.array_equal(d0.x, d1.x):
        raise DomainError("grid densities must share the same grid")


def gaussian_mixture_params(g0: GaussianDensity, g1: GaussianDensity, beta: float):
    """Closed-form ``(mean, var, log_partition)`` of g0^(1-beta) * g1^beta."""
    p0, p1 = 1.0 / g0.var, 1.0 / g1.var
    prec = (1.0 - beta) * p0 + beta * p1
    if np.any(prec <= 0):
        raise DomainError(f"gaussian geometric mixture is not integrable at beta={beta!r}")
    h = (1.0 - beta) * p0 * g0.mean + beta * p1 * g1.mean
    k = (1.0 - beta) * p0 * g0.mean**2 + beta * p1 * g1.mean**2
    per_dim = (
        -0.5 * (1.0 - beta) * np.log(g0.var)
        - 0.5 * beta * np.log(g1.var)
        - 0.5 * np.log(prec)
        + h**2 / (2 * prec)
        - k / 2
    )
    log_z = (1.0 - beta) * g0.log_scale + beta * g1.log_scale + float(per_dim.sum())
    return h / prec, 1.0 / prec, log_z


def geometric_mixture(d0: Density, d1: Density, beta: float) -> Density:
    """Unnormalized density with log-weight ``(1-beta) log d0 + beta log d1``."""
    _check_same_backend(d0, d1)
    beta = float(beta)
    if beta == 0.0:
        return d0
    if beta == 1.0:
        return d1
    if isinstance(d0, FiniteDensity):
        return FiniteDensity(mix_logs(d0.log_weights, d1.log_weights, beta))
    if isinstance(d0, GridDensity):
        return GridDensity(d0.x, mix_logs(d0.log_f, d1.log_f, beta))
    mean, var, log_z = gaussian_mixture_params(d0, d1, beta)
    return GaussianDensity(mean, var, log_z)


def _discrete_probs(d: Density) -> np.ndarray:
    lm = d.log_masses()
    return np.exp(lm - logsumexp(lm))


def _values_on_support(d: Density, f) -> np.ndarray:
    pts = d.points()
    if callable(f):
        vals = np.asarray(f(pts), dtype=float)
        if vals.shape != pts.shape:
            vals = np.array([f(p) for p in pts], dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
        if vals.shape != pts.shape:
            raise DomainError(f"value table has shape {vals.shape}, expected {pts.shape}")
    return vals


def expect(
    d: Density,
    f: Union[Callable[[Any], Any], np.ndarray, Quadratic],
    *,
    return_stderr: bool = False,
    n_mc: int = 200_000,
    seed: int = 0,
):
    """Expectation of ``f`` under the normalized version of ``d``.

    For finite and grid backends ``f`` may be a vectorized callable or a table
    of values on the support; the result is exact (the grid case is exact for
    the trapezoid rule). For the Gaussian backend the result is exact when
    ``f`` is a :class:`Quadratic` and a Monte Carlo estimate otherwise.

    Returns the value, or ``(value, stderr)`` when ``return_stderr`` is set;
    exact results carry a standard error of 0.
    """
    if isinstance(d, GaussianDensity):
        if isinstance(f, Quadratic):
            value, se = f.gaussian_mean(d.mean, d.var), 0.0
        else:
            pts = sample(d, n_mc, seed).points
            vals = np.asarray(f(pts if d.dim > 1 else pts[:, 0]), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise DomainError("integrand is not finite on sampled points")
            value = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(n_mc))
        return (value, se) if return_stderr else value

    p = _discrete_probs(d)
    vals = _values_on_support(d, f)
    pos = p > 0
    if not np.all(np.isfinite(vals[pos])):
        raise DomainError("integrand is not finite on the positive-mass region")
    value = float(p[pos] @ vals[pos])
    return (value, 0.0) if return_stderr else value


def sample(d: Density, n: int, seed: int) -> SampleBatch:
    """Draw ``n`` i.i.d. points; a pure function of ``(d, n, seed)``."""
    if n < 0:
        raise DomainError(f"sample count must be nonnegative, got {n}")
    rng = np.random.default_rng(seed)
    if isinstance(d, GaussianDensity):
        pts = d.mean + np.sqrt(d.var) * rng.standard_normal((n, d.dim))
        return SampleBatch(pts, seed)
    if isinstance(d, FiniteDensity):
        p = _discrete_probs(d)
        cdf = np.cumsum(p)
        last = int(np.flatnonzero(p > 0)[-1])
        idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
        return SampleBatch(np.minimum(idx, last), seed)
    # grid: inverse of the piecewise-linear CDF through trapezoid cell masses
    f = np.exp(d.log_f - d.log_f.max())
    cell = 0.5 * (f[1:] + f[:-1]) * np.diff(d.x)
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    pts = np.interp(rng.random(n), cdf[keep], d.x[keep])
    return SampleBatch(pts, seed)


def density_from_dict(doc: dict) -> Density:
    """Build a density from its JSON document (see README for the schema)."""
    if not isinstance(doc, dict) or "type" not in doc:
        raise SchemaError("density must be an object with a 'type' field")
    kind = doc["type"]
    norm = bool(doc.get("normalized", False))
    try:
        if kind == "finite":
            out = FiniteDensity(np.asarray(doc["log_weights"], dtype=float))
        elif kind == "gaussian":
            out = GaussianDensity(
                np.asarray(doc["mean"], dtype=float),
                np.asarray(doc["var"], dtype=float),
                float(doc.get("log_scale", 0.0)),
            )
        elif kind == "grid":
            out = GridDensity(
                np.asarray(doc["x"], dtype=float), np.asarray(doc["log_f"], dtype=float)
            )
        else:
            raise SchemaError(f"unknown density type {kind!r}")
    except KeyError as exc:
        raise SchemaError(f"{kind} density is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed {kind} density: {exc}") from None
    if norm:
        object.__setattr__(out, "normalized_hint", True)
        try:
            _check_hint(out)
        except DomainError as exc:
            raise SchemaError(str(exc)) from None
    return out


def density_to_dict(d: Density) -> dict:
    if isinstance(d, FiniteDensity):
        doc = {"type": "finite", "log_weights": d.log_weights.tolist()}
    elif isinstance(d, GaussianDensity):
        doc = {"type": "gaussian", "mean": d.mean.tolist(), "var": d.var.tolist()}
        if d.log_scale:
            doc["log_scale"] = d.log_scale
    else:
        doc = {"type": "grid", "x": d.x.tolist(), "log_f": d.log_f.tolist()}
    if d.normalized_hint:
        doc["normalized"] = True
    return doc
